#pragma once

#include <cstdint>
#include <span>

#include "lifebelt/model.hpp"
#include "lifebelt/smc_core.hpp"

namespace lifebelt {

/// How a particle moves into the next step.
enum class Dynamics : unsigned char { q1, point_mass };

/// Which deterministic-mixture denominator the weights use.
///
/// ancestor_mixture treats (ancestor, state) as the sampled object: a particle
/// whose ancestor is persistent is weighted against the resampled-group q1
/// mass of that ancestor plus the ancestor's own persistent dynamics, and
/// carries the ancestor's normalised weight. The resampled component
/// contributes N_r * w~_a * q1 there; everywhere else it is plain N_r * q1.
///
/// own_history_mixture evaluates every component at each particle's own
/// previous state, with point-mass components counted at every particle.
enum class WeightRule : unsigned char { ancestor_mixture, own_history_mixture };

/// Everything about one transition that is shared by all particles.
struct StepModel {
  const ThetaLogs* logs;
  const LogFactorial* lf;
  Count h_prev;
  Count y;
  std::size_t t;
  std::uint64_t seed;
};

struct MixtureLayout {
  WeightRule rule = WeightRule::ancestor_mixture;
  std::size_t n_total = 0;      // N
  std::size_t n_resampled = 0;  // N_r; indices >= N_r are persistent
  std::size_t n_q1 = 0;         // particles moving with q1 at this step
  std::size_t n_point = 0;      // particles moving with a point mass at this step
};

struct StepBuffers {
  std::span<const Count> prev_x;
  std::span<const double> prev_log_norm_w;
  std::span<const std::size_t> ancestors;  // persistent particles point at themselves
  std::span<const Dynamics> dynamics;
  std::span<Count> x;
  std::span<double> logw;
};

/// q1: Binomial(m, p_h / (1 - p_d)) with m = x_prev + h_prev - y_t.
/// Returns -1 when m < 0 (the particle is dead).
Count q1_sample(Count x_prev, Count h_prev, Count y_t, const ThetaLogs& logs, Rng& rng);
double q1_logpmf(Count x_t, Count x_prev, Count h_prev, Count y_t, const ThetaLogs& logs,
                 const LogFactorial& lf) noexcept;

/// Boundary move: everyone not dying stays. May be negative for an
/// infeasible history; callers treat that as a dead particle.
constexpr Count lifebelt_step(Count x_prev, Count h_prev, Count y_t) noexcept {
  return x_prev + h_prev - y_t;
}

/// Weight of particle n after it has moved to x. Pure; no randomness.
double particle_logweight(std::size_t n, Count x, const StepModel& model,
                          const MixtureLayout& layout, const StepBuffers& buf) noexcept;

/// Propagate-and-weight over all particles of one step. Both versions draw
/// particle n from the substream (seed, propagate, t, n) and so produce
/// identical output; the serial one is the reference for tests.
void propagate_weight_serial(const StepModel& model, const MixtureLayout& layout,
                             const StepBuffers& buf);
void propagate_weight_parallel(const StepModel& model, const MixtureLayout& layout,
                               const StepBuffers& buf, int threads);

}  // namespace lifebelt
