#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lifebelt/kernels.hpp"
#include "lifebelt/model.hpp"

namespace lifebelt {

enum class Variant { bpf, lbpf, lbpf_fleet, apf };

std::string_view to_string(Variant v) noexcept;
Variant parse_variant(std::string_view s);  // throws ConfigError

struct FilterConfig {
  Variant variant = Variant::lbpf;
  std::size_t N = 500;
  /// Persistent particle count. Empty means the variant default
  /// (bpf/apf: 0, lbpf: 1, lbpf_fleet: T + 1); a set value must match it.
  std::optional<std::size_t> n_persistent;
  std::size_t apf_cap = 1'000'000;
  bool record_trajectories = false;
  /// Weight the time-0 draws by prior over the deterministic mixture of the
  /// prior sampler and the lifebelt start, instead of uniform 1/N.
  bool exact_t0_weights = false;
  WeightRule weight_rule = WeightRule::ancestor_mixture;
  std::uint64_t seed = 0;
  int threads = 1;  // 1: serial kernels; 0: OpenMP default; >1: that many threads

  /// Resolves the persistent count for a series of length T and checks
  /// N >= 1, N_s < N, apf_cap >= N. Throws ConfigError.
  std::size_t validate(std::size_t T) const;
};

struct TrajectoryRow {
  std::size_t t;
  std::size_t particle;
  Count x;
  double norm_w;
  Group group;
  std::ptrdiff_t resampled_from;  // -1 at t = 0
};

struct FilterResult {
  Variant variant = Variant::bpf;
  std::uint64_t seed = 0;
  double loglik = kNegInf;
  std::vector<double> ess_per_t;         // one entry per completed step, 0 at a collapse step
  std::optional<std::size_t> collapsed_at;
  std::vector<std::size_t> attempts_per_t;  // apf only
  std::size_t total_attempts = 0;           // proposals spent over all steps
  bool cap_reached = false;                 // apf: some step exhausted apf_cap
  std::vector<double> lifebelt_logw;        // lbpf variants: permanent lifebelt, per step
  std::vector<TrajectoryRow> trajectories;
};

/// Minimal x_0 that keeps the boundary trajectory non-negative:
/// max(0, max_k sum_{t<=k} y_t - sum_{t<k} h_t).
Count lifebelt_init(const Dataset& data);

/// Starting occupancy of the persistent particles: lifebelt_init, or the
/// prior's value when the prior is a point mass.
Count lifebelt_start(const Dataset& data);

/// Dynamics of fleet member k (1..T) at step t: point mass while t < k, q1
/// from t = k onward. Throws ConfigError for k outside 1..T.
Dynamics fleet_schedule(std::size_t k, std::size_t t, std::size_t T);

/// Conditional-binomial weight: transition - q1 = log Binomial(y_t; x_prev + h_prev, p_d).
double bpf_weight(Count x_prev, Count h_prev, Count x_t, Count y_t, const Theta& theta);

FilterResult run_bpf(const Dataset& data, const Theta& theta, const FilterConfig& cfg);
FilterResult run_lbpf(const Dataset& data, const Theta& theta, const FilterConfig& cfg);
FilterResult run_lbpf_fleet(const Dataset& data, const Theta& theta, const FilterConfig& cfg);
FilterResult run_apf(const Dataset& data, const Theta& theta, const FilterConfig& cfg);

/// Dispatches on cfg.variant.
FilterResult run_filter(const Dataset& data, const Theta& theta, const FilterConfig& cfg);

}  // namespace lifebelt
