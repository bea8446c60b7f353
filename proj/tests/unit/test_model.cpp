#include <doctest.h>

#include <cmath>
#include <numeric>

#include "../support/oracles.hpp"
#include "lifebelt/errors.hpp"
#include "lifebelt/exact.hpp"
#include "lifebelt/model.hpp"

using namespace lifebelt;

TEST_CASE("theta validation") {
  CHECK_NOTHROW(Theta::make(0.3, 0.5, 0.2));
  CHECK_NOTHROW(Theta::make(1.0, 0.0, 0.0));
  CHECK_THROWS_AS(Theta::make(0.3, 0.5, 0.3), ConfigError);
  CHECK_THROWS_AS(Theta::make(-0.1, 0.9, 0.2), ConfigError);
  CHECK_THROWS_AS(Theta::make(0.0, 1.0, 0.0).require_filterable(), ConfigError);
  CHECK(Theta::make(0.3, 0.5, 0.2).interior());
  CHECK_FALSE(Theta::make(0.5, 0.5, 0.0).interior());
}

TEST_CASE("transition pmf sums to one over feasible (x, y)") {
  for (const Theta th : {Theta{0.3, 0.5, 0.2}, Theta{0.01, 0.6, 0.39}, Theta{0.9, 0.05, 0.05}}) {
    for (Count x_prev : {0, 3, 17}) {
      for (Count h : {0, 4}) {
        const Count n = x_prev + h;
        double total = 0.0;
        for (Count y = 0; y <= n; ++y) {
          for (Count x = 0; x + y <= n; ++x) total += std::exp(transition_logpmf(x_prev, h, x, y, th));
        }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("transition pmf matches the multinomial written from factorials") {
  const Theta th{0.3, 0.5, 0.2};
  for (Count n = 0; n <= 12; ++n) {
    for (Count y = 0; y <= n; ++y) {
      for (Count x = 0; x + y <= n; ++x) {
        const double ref = oracle::multinomial_pmf(x, y, n - x - y, th);
        CHECK(std::exp(transition_logpmf(n, 0, x, y, th)) == doctest::Approx(ref).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("death marginal of the transition is Binomial(n, p_d)") {
  const Theta th{0.25, 0.45, 0.3};
  const Count n = 11;
  for (Count y = 0; y <= n; ++y) {
    double marg = 0.0;
    for (Count x = 0; x + y <= n; ++x) marg += std::exp(transition_logpmf(7, 4, x, y, th));
    CHECK(marg == doctest::Approx(std::exp(binomial_logpmf(y, n, th.p_d))).epsilon(1e-12));
  }
}

TEST_CASE("infeasible transitions are -inf, not errors") {
  const Theta th{0.3, 0.5, 0.2};
  CHECK(transition_logpmf(2, 1, 2, 2, th) == kNegInf);
  CHECK(transition_logpmf(2, 1, -1, 0, th) == kNegInf);
  CHECK(binomial_logpmf(5, 3, 0.5) == kNegInf);
  CHECK(transition_logpmf(2, 0, 0, 1, Theta{0.5, 0.0, 0.5}) == kNegInf);
}

TEST_CASE("log factorial table agrees with lgamma beyond its size") {
  const LogFactorial lf(10);
  for (Count n : {0, 1, 5, 10, 11, 500}) {
    CHECK(lf(n) == doctest::Approx(std::lgamma(double(n) + 1.0)).epsilon(1e-13));
  }
}

TEST_CASE("x0 prior") {
  const auto p = X0Prior::poisson(1.5);
  double total = 0.0;
  for (Count k = 0; k <= p.upper_cap(1e-14); ++k) total += std::exp(p.logpmf(k));
  CHECK(total == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(p.logpmf(-1) == kNegInf);
  const Count cap = p.upper_cap(1e-12);
  double tail = 0.0;
  for (Count k = cap + 1; k < cap + 60; ++k) tail += std::exp(p.logpmf(k));
  CHECK(tail < 1e-12);
  CHECK_THROWS_AS(X0Prior::poisson(0.0), ConfigError);
  CHECK_THROWS_AS(X0Prior::poisson(-2.0), ConfigError);
  const auto f = X0Prior::fixed(4);
  CHECK(f.logpmf(4) == 0.0);
  CHECK(f.logpmf(3) == kNegInf);
}

TEST_CASE("simulate is deterministic per seed and conserves people") {
  const auto h = pulse_admissions(30, 12, 15, 4, 1);
  const Theta th{0.1, 0.8, 0.1};
  const auto a = simulate(th, h, 30, X0Prior::poisson(1.5), 99);
  const auto b = simulate(th, h, 30, X0Prior::poisson(1.5), 99);
  const auto c = simulate(th, h, 30, X0Prior::poisson(1.5), 100);
  CHECK(a.data.y == b.data.y);
  CHECK(a.path.x == b.path.x);
  CHECK((a.data.y != c.data.y || a.path.x != c.path.x));
  REQUIRE(a.path.x.size() == 31);
  for (std::size_t t = 1; t <= 30; ++t) {
    CHECK(a.path.x[t] >= 0);
    CHECK(a.path.z(a.data, t) >= 0);
  }
}

TEST_CASE("zero admissions with x0 fixed at zero give an all-zero dataset") {
  const std::vector<Count> h(12, 0);
  const auto sim = simulate(Theta{0.3, 0.5, 0.2}, h, 12, X0Prior::fixed(0), 5);
  CHECK(std::all_of(sim.data.y.begin(), sim.data.y.end(), [](Count v) { return v == 0; }));
  CHECK(std::all_of(sim.path.x.begin(), sim.path.x.end(), [](Count v) { return v == 0; }));
}

TEST_CASE("simulated death counts have the right mean") {
  // One step from a fixed occupancy: E[y_1] = p_d * (x0 + h_0).
  const Theta th{0.3, 0.5, 0.2};
  const std::vector<Count> h{6};
  double sum = 0.0;
  const int reps = 20000;
  for (int r = 0; r < reps; ++r) sum += double(simulate(th, h, 1, X0Prior::fixed(4), r).data.y[0]);
  const double se = std::sqrt(10 * 0.5 * 0.5 / reps);
  CHECK(std::abs(sum / reps - 5.0) < 4 * se);
}

TEST_CASE("pulse admissions and naive CFR") {
  const auto h = pulse_admissions(9, 10, 4, 1.5, 0);
  CHECK(h.size() == 9);
  CHECK(h[4] == 10);
  CHECK(*std::max_element(h.begin(), h.end()) == 10);
  CHECK(h[0] == h[8]);
  CHECK_THROWS_AS(pulse_admissions(5, 1, 2, 0, 0), ConfigError);

  Dataset d{{0, 4, 0}, {0, 1, 2}, X0Prior::poisson()};
  const auto cfr = naive_cfr(d);
  CHECK_FALSE(cfr[0].has_value());
  CHECK(*cfr[1] == doctest::Approx(0.25));
  CHECK(*cfr[2] == doctest::Approx(0.75));
}

TEST_CASE("dataset validation") {
  CHECK_THROWS_AS((Dataset{{1, 2}, {0}, X0Prior::poisson()}.validate()), ConfigError);
  CHECK_THROWS_AS((Dataset{{}, {}, X0Prior::poisson()}.validate()), ConfigError);
  CHECK_THROWS_AS((Dataset{{1}, {-1}, X0Prior::poisson()}.validate()), ConfigError);
}

TEST_CASE("exact likelihood equals the sum over all latent paths") {
  const X0Prior prior = X0Prior::poisson(1.5);
  for (const Theta th : {Theta{0.3, 0.5, 0.2}, Theta{0.01, 0.6, 0.39}, Theta{0.6, 0.1, 0.3}}) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      const auto sim = simulate(Theta{0.3, 0.5, 0.2}, std::vector<Count>{1, 3, 0, 2}, 4, prior, seed);
      const double brute = oracle::path_sum_likelihood(sim.data, th, 30);
      CHECK(exact_loglik(sim.data, th) == doctest::Approx(std::log(brute)).epsilon(1e-9));
    }
  }
}

TEST_CASE("exact likelihood with a fixed x0 and infeasible data") {
  Dataset d{{0, 0}, {1, 0}, X0Prior::fixed(0)};
  CHECK(exact_loglik(d, Theta{0.3, 0.5, 0.2}) == kNegInf);
  d.x0_prior = X0Prior::fixed(2);
  CHECK(exact_loglik(d, Theta{0.3, 0.5, 0.2}) ==
        doctest::Approx(std::log(oracle::path_sum_likelihood(d, Theta{0.3, 0.5, 0.2}, 0))));
}

TEST_CASE("exact likelihood refuses oversized state spaces") {
  Dataset d{{50000}, {3}, X0Prior::poisson()};
  CHECK_THROWS_AS(exact_loglik(d, Theta{0.3, 0.5, 0.2}), ConfigError);
}

TEST_CASE("exact likelihood is normalised over y for T = 1") {
  const Theta th{0.3, 0.5, 0.2};
  double total = 0.0;
  for (Count y = 0; y <= 40; ++y) {
    Dataset d{{3}, {y}, X0Prior::poisson(1.5)};
    total += std::exp(exact_loglik(d, th));
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
}
