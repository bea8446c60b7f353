#include "lifebelt/kernels.hpp"

#include <array>
#include <cmath>
#include <random>

#ifdef LIFEBELT_USE_OPENMP
#include <omp.h>
#endif

namespace lifebelt {

Count q1_sample(Count x_prev, Count h_prev, Count y_t, const ThetaLogs& logs, Rng& rng) {
  const Count m = x_prev + h_prev - y_t;
  if (m < 0) return -1;
  if (m == 0 || logs.stay >= 1.0) return m;
  if (logs.stay <= 0.0) return 0;
  std::binomial_distribution<Count> dist(m, logs.stay);
  return dist(rng);
}

double q1_logpmf(Count x_t, Count x_prev, Count h_prev, Count y_t, const ThetaLogs& logs,
                 const LogFactorial& lf) noexcept {
  return binomial_logpmf(x_t, x_prev + h_prev - y_t, logs.log_stay, logs.log_leave, lf);
}

double particle_logweight(std::size_t n, Count x, const StepModel& model,
                          const MixtureLayout& layout, const StepBuffers& buf) noexcept {
  const std::size_t a = buf.ancestors[n];
  const Count xp = buf.prev_x[a];
  const Count m = xp + model.h_prev - model.y;
  if (m < 0 || x < 0) return kNegInf;

  const double target = transition_logpmf(xp, model.h_prev, x, model.y, *model.logs, *model.lf);
  if (target == kNegInf) return kNegInf;
  const double lq1 = binomial_logpmf(x, m, model.logs->log_stay, model.logs->log_leave, *model.lf);
  const double log_total = std::log(static_cast<double>(layout.n_total));

  if (layout.rule == WeightRule::ancestor_mixture) {
    const double log_nr = std::log(static_cast<double>(layout.n_resampled));
    if (a < layout.n_resampled) {
      const std::array<MixtureTerm, 1> terms{{{log_nr, lq1}}};
      return dmis_logweight(target, terms, log_total);
    }
    const double lw_a = buf.prev_log_norm_w[a];
    const double own = buf.dynamics[a] == Dynamics::point_mass ? point_mass_logpmf(x, m) : lq1;
    const std::array<MixtureTerm, 2> terms{{{log_nr + lw_a, lq1}, {0.0, own}}};
    return persistent_weight_update(dmis_logweight(target, terms, log_total), lw_a);
  }

  const double log_nq1 = layout.n_q1 ? std::log(static_cast<double>(layout.n_q1)) : kNegInf;
  const double log_npt = layout.n_point ? std::log(static_cast<double>(layout.n_point)) : kNegInf;
  const std::array<MixtureTerm, 2> terms{{{log_nq1, lq1}, {log_npt, point_mass_logpmf(x, m)}}};
  const double lw = dmis_logweight(target, terms, log_total);
  return n < layout.n_resampled ? lw : persistent_weight_update(lw, buf.prev_log_norm_w[n]);
}

namespace {

inline void propagate_one(std::size_t n, const StepModel& model, const MixtureLayout& layout,
                          const StepBuffers& buf) {
  const Count xp = buf.prev_x[buf.ancestors[n]];
  Count x;
  if (buf.dynamics[n] == Dynamics::point_mass) {
    x = lifebelt_step(xp, model.h_prev, model.y);
  } else {
    Rng rng(model.seed, {stream::propagate, model.t, n});
    x = q1_sample(xp, model.h_prev, model.y, *model.logs, rng);
  }
  if (x < 0) {
    buf.x[n] = 0;
    buf.logw[n] = kNegInf;
    return;
  }
  buf.x[n] = x;
  buf.logw[n] = particle_logweight(n, x, model, layout, buf);
}

}  // namespace

void propagate_weight_serial(const StepModel& model, const MixtureLayout& layout,
                             const StepBuffers& buf) {
  const std::size_t n_particles = buf.x.size();
  for (std::size_t n = 0; n < n_particles; ++n) propagate_one(n, model, layout, buf);
}

void propagate_weight_parallel(const StepModel& model, const MixtureLayout& layout,
                               const StepBuffers& buf, int threads) {
  const auto n_particles = static_cast<std::ptrdiff_t>(buf.x.size());
#ifdef LIFEBELT_USE_OPENMP
  if (threads <= 0) threads = omp_get_max_threads();
#pragma omp parallel for schedule(static) num_threads(threads)
  for (std::ptrdiff_t n = 0; n < n_particles; ++n) {
    propagate_one(static_cast<std::size_t>(n), model, layout, buf);
  }
#else
  (void)threads;
  for (std::ptrdiff_t n = 0; n < n_particles; ++n) {
    propagate_one(static_cast<std::size_t>(n), model, layout, buf);
  }
#endif
}

}  // namespace lifebelt
