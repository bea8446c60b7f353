#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "lifebelt/model.hpp"
#include "lifebelt/rng.hpp"

namespace lifebelt {

enum class Group : unsigned char { resampled, persistent };

/// Particles at one time step. Indices [0, n_resampled) form the resampled
/// group; the rest are persistent and keep their index across steps.
struct ParticleSwarm {
  std::vector<Count> x;
  std::vector<double> logw;        // un-normalised log-weights
  std::vector<double> log_norm_w;  // log self-normalised weights
  std::vector<Group> group;
  std::size_t n_resampled = 0;

  std::size_t size() const noexcept { return x.size(); }
  std::size_t n_persistent() const noexcept { return x.size() - n_resampled; }
};

double logsumexp(std::span<const double> v) noexcept;

struct Normalized {
  std::vector<double> norm_w;
  std::vector<double> log_norm_w;
  double log_mean = kNegInf;  // log((1/N) sum exp(logw))
  bool collapsed = true;      // every log-weight was -inf
};

Normalized normalize(std::span<const double> logw);

/// 1 / sum(w^2); 0 for all-zero weights.
double ess(std::span<const double> norm_w) noexcept;

/// n_draws independent categorical draws over all particles. Empty optional
/// when no weight is positive (collapse); the caller decides what to do.
std::optional<std::vector<std::size_t>> multinomial_resample(std::span<const double> norm_w,
                                                             std::size_t n_draws, Rng& rng);

/// One component of a deterministic mixture evaluated at a point: log of its
/// allocation count (may be fractional for ancestor-weighted counts) and its
/// log-density there.
struct MixtureTerm {
  double log_count;
  double log_density;
};

/// Counting-measure density of a point mass: 0 at the atom, -inf elsewhere.
constexpr double point_mass_logpmf(Count x, Count atom) noexcept { return x == atom ? 0.0 : kNegInf; }

/// target - log((1/N) sum_g N_g q_g(x)). -inf when no term covers x.
double dmis_logweight(double target_logdensity, std::span<const MixtureTerm> terms,
                      double log_total) noexcept;

/// Multiplier for particles outside the resampled group.
constexpr double persistent_weight_update(double dmis_logw, double log_prev_norm_w) noexcept {
  return log_prev_norm_w == kNegInf ? kNegInf : dmis_logw + log_prev_norm_w;
}

/// Sum of per-step log-means; -inf propagates.
double loglik_accumulate(std::span<const double> per_step_log_means) noexcept;

/// A proposal on the integers for the static mixture estimator.
struct DiscreteComponent {
  std::size_t count;
  std::function<Count(Rng&)> sample;
  std::function<double(Count)> logpmf;
};

/// Static deterministic-mixture importance estimate of sum_x f(x) h(x):
/// draws `count` points from each component, weights every point against the
/// pooled mixture density and returns sum(w * h) / N. `target_logpmf` may be
/// un-normalised.
double dmis_static_estimate(const std::function<double(Count)>& h,
                            const std::function<double(Count)>& target_logpmf,
                            std::span<const DiscreteComponent> components, std::uint64_t seed);

/// Scans [lo, hi] for a point with positive target mass but zero mixture
/// density; returns the first one found.
std::optional<Count> find_uncovered(const std::function<double(Count)>& target_logpmf,
                                    std::span<const DiscreteComponent> components, Count lo,
                                    Count hi);

}  // namespace lifebelt
