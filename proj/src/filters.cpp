#include "lifebelt/filters.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "lifebelt/errors.hpp"
#include "lifebelt/smc_core.hpp"

namespace lifebelt {

std::string_view to_string(Variant v) noexcept {
  switch (v) {
    case Variant::bpf: return "bpf";
    case Variant::lbpf: return "lbpf";
    case Variant::lbpf_fleet: return "lbpf_fleet";
    case Variant::apf: return "apf";
  }
  return "?";
}

Variant parse_variant(std::string_view s) {
  if (s == "bpf") return Variant::bpf;
  if (s == "lbpf") return Variant::lbpf;
  if (s == "lbpf_fleet") return Variant::lbpf_fleet;
  if (s == "apf") return Variant::apf;
  throw ConfigError("unknown filter variant '" + std::string(s) + "'");
}

std::size_t FilterConfig::validate(std::size_t T) const {
  std::size_t expected = 0;
  if (variant == Variant::lbpf) expected = 1;
  if (variant == Variant::lbpf_fleet) expected = T + 1;
  if (n_persistent && *n_persistent != expected) {
    throw ConfigError("variant " + std::string(to_string(variant)) + " requires N_s = " +
                      std::to_string(expected));
  }
  if (N < 1) throw ConfigError("N must be at least 1");
  if (expected >= N) {
    throw ConfigError("N = " + std::to_string(N) + " must exceed the persistent count " +
                      std::to_string(expected));
  }
  if (variant == Variant::apf) {
    if (N < 2) throw ConfigError("apf needs N >= 2");
    if (apf_cap < N) throw ConfigError("apf_cap must be at least N");
  }
  return expected;
}

Count lifebelt_init(const Dataset& data) {
  Count deficit = 0;
  Count cum = 0;
  for (std::size_t t = 1; t <= data.T(); ++t) {
    cum += data.y_at(t) - data.h_prev(t);
    deficit = std::max(deficit, cum);
  }
  return deficit;
}

Count lifebelt_start(const Dataset& data) {
  if (auto v = data.x0_prior.fixed_value()) return *v;
  return lifebelt_init(data);
}

Dynamics fleet_schedule(std::size_t k, std::size_t t, std::size_t T) {
  if (k < 1 || k > T) {
    throw ConfigError("fleet index " + std::to_string(k) + " outside 1.." + std::to_string(T));
  }
  return t < k ? Dynamics::point_mass : Dynamics::q1;
}

double bpf_weight(Count x_prev, Count h_prev, Count x_t, Count y_t, const Theta& theta) {
  const ThetaLogs logs(theta);
  const LogFactorial lf(x_prev + h_prev + 1);
  const double target = transition_logpmf(x_prev, h_prev, x_t, y_t, logs, lf);
  if (target == kNegInf) return kNegInf;
  return target - q1_logpmf(x_t, x_prev, h_prev, y_t, logs, lf);
}

namespace {

Count count_bound(const Dataset& data) {
  const Count h_sum = std::accumulate(data.h.begin(), data.h.end(), Count{0});
  const Count x0 = data.x0_prior.is_fixed() ? *data.x0_prior.fixed_value()
                                            : data.x0_prior.upper_cap(1e-12);
  return std::max(x0, lifebelt_start(data)) + h_sum + 16;
}

void run_kernel(const StepModel& model, const MixtureLayout& layout, const StepBuffers& buf,
                int threads) {
  if (threads == 1) {
    propagate_weight_serial(model, layout, buf);
  } else {
    propagate_weight_parallel(model, layout, buf, threads);
  }
}

void record(FilterResult& res, std::size_t t, std::span<const Count> x,
            std::span<const double> norm_w, std::size_t n_resampled,
            std::span<const std::size_t> ancestors) {
  for (std::size_t n = 0; n < x.size(); ++n) {
    res.trajectories.push_back(
        {t, n, x[n], norm_w[n], n < n_resampled ? Group::resampled : Group::persistent,
         ancestors.empty() ? std::ptrdiff_t{-1} : static_cast<std::ptrdiff_t>(ancestors[n])});
  }
}

// Shared driver for bpf, lbpf and lbpf_fleet: N_r resampled particles and
// n_persistent persistent ones, index N_r being the permanent lifebelt.
FilterResult run_swarm(const Dataset& data, const Theta& theta, const FilterConfig& cfg,
                       std::size_t n_persistent) {
  const std::size_t T = data.T();
  const std::size_t N = cfg.N;
  const std::size_t Nr = N - n_persistent;
  const ThetaLogs logs(theta);
  const LogFactorial lf(count_bound(data));

  FilterResult res;
  res.variant = cfg.variant;
  res.seed = cfg.seed;

  std::vector<Count> prev_x(N), x(N);
  std::vector<double> logw(N), prev_log_norm_w(N, -std::log(double(N)));
  std::vector<double> norm_w(N, 1.0 / double(N));
  std::vector<std::size_t> anc(N);
  std::vector<Dynamics> dyn(N, Dynamics::q1);
  std::vector<double> log_means;
  log_means.reserve(T + 1);

  const Count lb0 = lifebelt_start(data);
  for (std::size_t n = 0; n < Nr; ++n) {
    Rng rng(cfg.seed, {stream::init, n});
    prev_x[n] = data.x0_prior.sample(rng);
  }
  for (std::size_t n = Nr; n < N; ++n) prev_x[n] = lb0;

  if (cfg.exact_t0_weights && n_persistent > 0) {
    const double log_nr = std::log(double(Nr));
    const double log_ns = std::log(double(n_persistent));
    for (std::size_t n = 0; n < N; ++n) {
      const double lp = data.x0_prior.logpmf(prev_x[n]);
      const std::array<MixtureTerm, 2> terms{
          {{log_nr, lp}, {log_ns, point_mass_logpmf(prev_x[n], lb0)}}};
      logw[n] = dmis_logweight(lp, terms, std::log(double(N)));
    }
    auto nz = normalize(logw);
    if (nz.collapsed) throw InvariantError("time-0 weights are all zero");
    prev_log_norm_w = std::move(nz.log_norm_w);
    norm_w = std::move(nz.norm_w);
    log_means.push_back(nz.log_mean);
  }
  if (cfg.record_trajectories) record(res, 0, prev_x, norm_w, Nr, {});

  // The lifebelt guarantee holds for interior theta whenever the boundary
  // trajectory itself is non-negative and possible under the prior.
  const bool guarded = n_persistent > 0 && theta.interior();
  bool lifebelt_feasible = data.x0_prior.logpmf(lb0) > kNegInf;
  Count boundary = lb0;

  for (std::size_t t = 1; t <= T; ++t) {
    Rng rrng(cfg.seed, {stream::resample, t});
    auto drawn = multinomial_resample(norm_w, Nr, rrng);
    if (!drawn) throw InvariantError("resampling from an all-zero swarm");
    std::copy(drawn->begin(), drawn->end(), anc.begin());
    for (std::size_t n = Nr; n < N; ++n) anc[n] = n;

    MixtureLayout layout{cfg.weight_rule, N, Nr, Nr, 0};
    for (std::size_t n = Nr; n < N; ++n) {
      dyn[n] = n == Nr ? Dynamics::point_mass : fleet_schedule(n - Nr, t, T);
      ++(dyn[n] == Dynamics::q1 ? layout.n_q1 : layout.n_point);
    }

    const StepModel model{&logs, &lf, data.h_prev(t), data.y_at(t), t, cfg.seed};
    const StepBuffers buf{prev_x, prev_log_norm_w, anc, dyn, x, logw};
    run_kernel(model, layout, buf, cfg.threads);

    boundary = lifebelt_step(boundary, data.h_prev(t), data.y_at(t));
    lifebelt_feasible = lifebelt_feasible && boundary >= 0;
    if (n_persistent > 0) res.lifebelt_logw.push_back(logw[Nr]);
    if (guarded && lifebelt_feasible && logw[Nr] == kNegInf) {
      throw InvariantError("lifebelt particle lost its weight at t = " + std::to_string(t));
    }

    auto nz = normalize(logw);
    res.total_attempts += N;
    if (nz.collapsed) {
      res.collapsed_at = t;
      res.ess_per_t.push_back(0.0);
      res.loglik = kNegInf;
      return res;
    }
    res.ess_per_t.push_back(ess(nz.norm_w));
    log_means.push_back(nz.log_mean);
    if (cfg.record_trajectories) record(res, t, x, nz.norm_w, Nr, anc);

    std::swap(prev_x, x);
    prev_log_norm_w = std::move(nz.log_norm_w);
    norm_w = std::move(nz.norm_w);
  }
  res.loglik = loglik_accumulate(log_means);
  return res;
}

void check_variant(const FilterConfig& cfg, Variant v) {
  if (cfg.variant != v) {
    throw ConfigError("config variant " + std::string(to_string(cfg.variant)) +
                      " passed to run_" + std::string(to_string(v)));
  }
}

}  // namespace

FilterResult run_bpf(const Dataset& data, const Theta& theta, const FilterConfig& cfg) {
  check_variant(cfg, Variant::bpf);
  data.validate();
  theta.require_filterable();
  return run_swarm(data, theta, cfg, cfg.validate(data.T()));
}

FilterResult run_lbpf(const Dataset& data, const Theta& theta, const FilterConfig& cfg) {
  check_variant(cfg, Variant::lbpf);
  data.validate();
  theta.require_filterable();
  return run_swarm(data, theta, cfg, cfg.validate(data.T()));
}

FilterResult run_lbpf_fleet(const Dataset& data, const Theta& theta, const FilterConfig& cfg) {
  check_variant(cfg, Variant::lbpf_fleet);
  data.validate();
  theta.require_filterable();
  return run_swarm(data, theta, cfg, cfg.validate(data.T()));
}

FilterResult run_apf(const Dataset& data, const Theta& theta, const FilterConfig& cfg) {
  check_variant(cfg, Variant::apf);
  data.validate();
  theta.require_filterable();
  cfg.validate(data.T());

  const std::size_t T = data.T();
  const std::size_t N = cfg.N;
  const ThetaLogs logs(theta);
  const LogFactorial lf(count_bound(data));

  FilterResult res;
  res.variant = cfg.variant;
  res.seed = cfg.seed;

  std::vector<Count> prev_x(N);
  for (std::size_t n = 0; n < N; ++n) {
    Rng rng(cfg.seed, {stream::init, n});
    prev_x[n] = data.x0_prior.sample(rng);
  }
  std::vector<double> norm_w(N, 1.0 / double(N));
  std::vector<double> prev_log_norm_w(N, -std::log(double(N)));
  if (cfg.record_trajectories) record(res, 0, prev_x, norm_w, N, {});
  std::vector<double> log_means;

  for (std::size_t t = 1; t <= T; ++t) {
    const Count h = data.h_prev(t);
    const Count y = data.y_at(t);

    // A proposal succeeds exactly when its ancestor can produce y deaths,
    // so the per-proposal success probability is the alive ancestor mass.
    std::vector<double> alive_w(prev_x.size(), 0.0);
    double p_alive = 0.0;
    bool all_alive = true;
    for (std::size_t j = 0; j < prev_x.size(); ++j) {
      const Count n = prev_x[j] + h;
      if (binomial_logpmf(y, n, logs.log_p_d, logs.log_p_not_d, lf) > kNegInf) {
        alive_w[j] = norm_w[j];
        p_alive += norm_w[j];
      } else if (norm_w[j] > 0.0) {
        all_alive = false;
      }
    }

    if (!(p_alive > 0.0)) {
      res.attempts_per_t.push_back(cfg.apf_cap);
      res.total_attempts += cfg.apf_cap;
      res.cap_reached = true;
      res.collapsed_at = t;
      res.ess_per_t.push_back(0.0);
      res.loglik = kNegInf;
      return res;
    }

    // Proposal-by-proposal accounting, replayed through the failure gaps
    // between consecutive successes.
    Rng arng(cfg.seed, {stream::apf_chunk, t});
    std::size_t position = 0;
    std::size_t successes = 0;
    if (all_alive) {
      successes = N;
      position = N;
    } else {
      std::geometric_distribution<std::size_t> gap(std::min(p_alive, 1.0));
      while (successes < N) {
        const std::size_t next = position + gap(arng) + 1;
        if (next > cfg.apf_cap) break;
        position = next;
        ++successes;
      }
    }
    const bool reached = successes == N;
    const std::size_t n_t = reached ? position : cfg.apf_cap;
    res.attempts_per_t.push_back(n_t);
    res.total_attempts += n_t;
    if (!reached) res.cap_reached = true;
    if (successes == 0) {
      res.collapsed_at = t;
      res.ess_per_t.push_back(0.0);
      res.loglik = kNegInf;
      return res;
    }

    auto anc = multinomial_resample(alive_w, successes, arng);
    std::vector<Count> x(successes);
    std::vector<double> logw(successes);
    std::vector<Dynamics> dyn(successes, Dynamics::q1);
    const MixtureLayout layout{WeightRule::ancestor_mixture, successes, successes, successes, 0};
    const StepModel model{&logs, &lf, h, y, t, cfg.seed};
    const StepBuffers buf{prev_x, prev_log_norm_w, *anc, dyn, x, logw};
    run_kernel(model, layout, buf, cfg.threads);

    // Per-step estimate: sum of the weights of the first n_t - 1 proposals
    // over n_t - 1 when the target was met; sum over n_t at the cap.
    const std::size_t used = reached ? N - 1 : successes;
    const double denom = reached ? double(n_t - 1) : double(n_t);
    const double lse = logsumexp(std::span<const double>(logw).first(used));
    log_means.push_back(lse - std::log(denom));

    auto nz = normalize(logw);
    res.ess_per_t.push_back(ess(nz.norm_w));
    if (cfg.record_trajectories) record(res, t, x, nz.norm_w, successes, *anc);
    prev_x = std::move(x);
    prev_log_norm_w = std::move(nz.log_norm_w);
    norm_w = std::move(nz.norm_w);
  }
  res.loglik = loglik_accumulate(log_means);
  return res;
}

FilterResult run_filter(const Dataset& data, const Theta& theta, const FilterConfig& cfg) {
  switch (cfg.variant) {
    case Variant::bpf: return run_bpf(data, theta, cfg);
    case Variant::lbpf: return run_lbpf(data, theta, cfg);
    case Variant::lbpf_fleet: return run_lbpf_fleet(data, theta, cfg);
    case Variant::apf: return run_apf(data, theta, cfg);
  }
  throw ConfigError("unknown filter variant");
}

}  // namespace lifebelt
