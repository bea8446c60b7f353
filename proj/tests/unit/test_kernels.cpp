#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>

#include "../support/oracles.hpp"
#include "lifebelt/filters.hpp"
#include "lifebelt/kernels.hpp"

using namespace lifebelt;

namespace {

struct StepFixture {
  Theta theta{0.3, 0.5, 0.2};
  ThetaLogs logs{theta};
  LogFactorial lf{4096};
  std::size_t N = 257;
  std::size_t Nr = 250;
  std::vector<Count> prev_x;
  std::vector<double> prev_log_norm_w;
  std::vector<std::size_t> anc;
  std::vector<Dynamics> dyn;

  explicit StepFixture(WeightRule rule) : rule(rule) {
    std::mt19937_64 g(17);
    std::poisson_distribution<Count> px(6.0);
    prev_x.resize(N);
    for (auto& v : prev_x) v = px(g);
    std::vector<double> w(N);
    std::uniform_real_distribution<double> u(0.1, 1.0);
    double s = 0.0;
    for (auto& v : w) s += (v = u(g));
    for (double v : w) prev_log_norm_w.push_back(std::log(v / s));
    std::uniform_int_distribution<std::size_t> pick(0, N - 1);
    for (std::size_t n = 0; n < N; ++n) anc.push_back(n < Nr ? pick(g) : n);
    for (std::size_t n = 0; n < N; ++n) dyn.push_back(n < Nr + 3 ? Dynamics::q1 : Dynamics::point_mass);
    if (Nr < N) dyn[Nr] = Dynamics::point_mass;
  }

  MixtureLayout layout() const {
    MixtureLayout l{rule, N, Nr, 0, 0};
    for (auto d : dyn) ++(d == Dynamics::q1 ? l.n_q1 : l.n_point);
    return l;
  }

  WeightRule rule;
};

}  // namespace

TEST_CASE("serial and parallel kernels are bit-identical") {
  for (const auto rule : {WeightRule::ancestor_mixture, WeightRule::own_history_mixture}) {
    StepFixture f(rule);
    const StepModel model{&f.logs, &f.lf, 3, 4, 5, 123};
    std::vector<Count> xs(f.N), xp(f.N);
    std::vector<double> ws(f.N), wp(f.N);
    propagate_weight_serial(model, f.layout(), {f.prev_x, f.prev_log_norm_w, f.anc, f.dyn, xs, ws});
    for (int threads : {2, 4, 0}) {
      propagate_weight_parallel(model, f.layout(), {f.prev_x, f.prev_log_norm_w, f.anc, f.dyn, xp, wp},
                                threads);
      CHECK(xs == xp);
      CHECK(std::memcmp(ws.data(), wp.data(), ws.size() * sizeof(double)) == 0);
    }
  }
}

TEST_CASE("filters give identical results with one and several threads") {
  const auto sim = simulate(Theta{0.3, 0.5, 0.2}, pulse_admissions(15, 8, 7, 3, 1), 15,
                            X0Prior::poisson(1.5), 4);
  for (auto v : {Variant::bpf, Variant::lbpf, Variant::lbpf_fleet, Variant::apf}) {
    FilterConfig c;
    c.variant = v;
    c.N = 200;
    c.seed = 9;
    const auto a = run_filter(sim.data, Theta{0.25, 0.5, 0.25}, c);
    c.threads = 3;
    const auto b = run_filter(sim.data, Theta{0.25, 0.5, 0.25}, c);
    CHECK(a.loglik == b.loglik);
    CHECK(a.ess_per_t == b.ess_per_t);
  }
}

TEST_CASE("q1 is the death-conditioned stay binomial") {
  const Theta th{0.3, 0.5, 0.2};
  const ThetaLogs logs(th);
  const LogFactorial lf(100);
  double total = 0.0;
  for (Count x = 0; x <= 9; ++x) total += std::exp(q1_logpmf(x, 7, 5, 3, logs, lf));
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(q1_logpmf(10, 7, 5, 3, logs, lf) == kNegInf);

  // Conditional of the transition on y: p(x | y, n) = multinomial / binomial(y).
  for (Count x = 0; x <= 9; ++x) {
    const double cond = transition_logpmf(7, 5, x, 3, th) - binomial_logpmf(3, 12, th.p_d);
    CHECK(q1_logpmf(x, 7, 5, 3, logs, lf) == doctest::Approx(cond).epsilon(1e-12));
  }

  Rng rng(5);
  double sum = 0.0;
  const int reps = 50000;
  for (int r = 0; r < reps; ++r) sum += double(q1_sample(7, 5, 3, logs, rng));
  const double p = 0.3 / 0.5;
  CHECK(std::abs(sum / reps - 9 * p) < 5 * std::sqrt(9 * p * (1 - p) / reps));
  CHECK(q1_sample(1, 0, 2, logs, rng) == -1);
}

TEST_CASE("lifebelt step keeps everyone who does not die") {
  static_assert(lifebelt_step(4, 3, 2) == 5);
  CHECK(lifebelt_step(1, 0, 3) == -2);
}

TEST_CASE("bpf weight equals the death binomial") {
  std::mt19937_64 g(1);
  std::uniform_real_distribution<double> u(0.01, 0.98);
  std::uniform_int_distribution<Count> c(0, 40);
  for (int i = 0; i < 2000; ++i) {
    const double pd = u(g);
    const double ph = (1 - pd) * std::uniform_real_distribution<double>(0.01, 0.99)(g);
    const Theta th{ph, pd, 1 - pd - ph};
    const Count xp = c(g), h = c(g);
    const Count y = std::uniform_int_distribution<Count>(0, xp + h)(g);
    const Count x = std::uniform_int_distribution<Count>(0, xp + h - y)(g);
    const double ref = std::log(oracle::multinomial_pmf(y, 0, xp + h - y, Theta{pd, 0.0, 1 - pd}));
    CHECK(bpf_weight(xp, h, x, y, th) == doctest::Approx(ref).epsilon(1e-10));
  }
}

TEST_CASE("resampled particle landing on its persistent ancestor's boundary sees both masses") {
  const Theta th{0.3, 0.5, 0.2};
  const ThetaLogs logs(th);
  const LogFactorial lf(100);
  // Three resampled slots and one lifebelt at index 3.
  const std::vector<Count> prev_x{2, 5, 1, 4};
  const std::vector<double> lw{std::log(0.4), std::log(0.3), std::log(0.2), std::log(0.1)};
  const std::vector<std::size_t> anc{3, 1, 0, 3};
  const std::vector<Dynamics> dyn{Dynamics::q1, Dynamics::q1, Dynamics::q1, Dynamics::point_mass};
  std::vector<Count> x(4);
  std::vector<double> w(4);
  const StepModel model{&logs, &lf, 2, 1, 1, 0};
  const MixtureLayout layout{WeightRule::ancestor_mixture, 4, 3, 3, 1};
  const StepBuffers buf{prev_x, lw, anc, dyn, x, w};

  const Count m = 4 + 2 - 1;  // boundary value of particle 3
  const double target = transition_logpmf(4, 2, m, 1, th);
  const double q1 = std::exp(q1_logpmf(m, 4, 2, 1, logs, lf));
  const double expect = target - std::log((3 * 0.1 * q1 + 1.0) / 4.0) + std::log(0.1);
  CHECK(particle_logweight(0, m, model, layout, buf) == doctest::Approx(expect).epsilon(1e-12));
  CHECK(particle_logweight(3, m, model, layout, buf) == doctest::Approx(expect).epsilon(1e-12));
  // Off the boundary only the q1 mass remains.
  const double target2 = transition_logpmf(4, 2, 2, 1, th);
  const double q1b = std::exp(q1_logpmf(2, 4, 2, 1, logs, lf));
  CHECK(particle_logweight(0, 2, model, layout, buf) ==
        doctest::Approx(target2 - std::log(3 * 0.1 * q1b / 4.0) + std::log(0.1)).epsilon(1e-12));
  // A resampled ancestor: plain N_r q1 denominator.
  const double target3 = transition_logpmf(5, 2, 3, 1, th);
  const double q1c = std::exp(q1_logpmf(3, 5, 2, 1, logs, lf));
  CHECK(particle_logweight(1, 3, model, layout, buf) ==
        doctest::Approx(target3 - std::log(3 * q1c / 4.0)).epsilon(1e-12));
}
