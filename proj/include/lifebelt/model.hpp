#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "lifebelt/rng.hpp"

namespace lifebelt {

using Count = std::int64_t;

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Per-interval outcome probabilities of a hospitalised individual:
/// stay (p_h), die (p_d), recover and be discharged (p_r).
struct Theta {
  double p_h = 0.0;
  double p_d = 0.0;
  double p_r = 0.0;

  /// Validating constructor: each component in [0,1] and the sum equal to 1
  /// within 1e-12. Throws ConfigError otherwise.
  static Theta make(double p_h, double p_d, double p_r);

  bool interior() const noexcept { return p_h > 0.0 && p_d > 0.0 && p_r > 0.0; }

  /// Filters need p_d < 1 so that the conditional stay probability
  /// p_h / (1 - p_d) is defined.
  void require_filterable() const;
};

/// Log-probabilities derived once per theta; the inner loops never call log().
struct ThetaLogs {
  explicit ThetaLogs(const Theta& theta);

  double log_p_h;
  double log_p_d;
  double log_p_r;
  double log_p_not_d;  // log(1 - p_d)
  double log_stay;     // log(p_h / (1 - p_d)), q1 success probability
  double log_leave;    // log(p_r / (1 - p_d))
  double stay;         // p_h / (1 - p_d)
};

/// Table of log(n!) so the weighting kernels avoid lgamma in the hot path.
/// Values beyond the table fall back to std::lgamma.
class LogFactorial {
 public:
  explicit LogFactorial(Count max_n = 1024);
  double operator()(Count n) const noexcept;
  Count size() const noexcept { return static_cast<Count>(table_.size()); }

 private:
  std::vector<double> table_;
};

/// Prior on the initial hospital occupancy X_0: Poisson(rate), or a point
/// mass used for degenerate test scenarios.
class X0Prior {
 public:
  static X0Prior poisson(double rate = 1.5);
  static X0Prior fixed(Count value);

  bool is_fixed() const noexcept { return fixed_.has_value(); }
  double rate() const noexcept { return rate_; }
  std::optional<Count> fixed_value() const noexcept { return fixed_; }

  double logpmf(Count k) const noexcept;
  Count sample(Rng& rng) const;
  double mean() const noexcept { return fixed_ ? static_cast<double>(*fixed_) : rate_; }

  /// Smallest k with P(X_0 > k) < tail_mass.
  Count upper_cap(double tail_mass) const;

 private:
  X0Prior() = default;
  double rate_ = 1.5;
  std::optional<Count> fixed_;
};

/// Admissions and deaths. h[t] holds h_t for t = 0..T-1 (entering during
/// interval t, present at the start of interval t+1); y[t-1] holds y_t for
/// t = 1..T.
struct Dataset {
  std::vector<Count> h;
  std::vector<Count> y;
  X0Prior x0_prior = X0Prior::poisson();

  std::size_t T() const noexcept { return y.size(); }
  Count h_prev(std::size_t t) const { return h[t - 1]; }  // h_{t-1}, t in 1..T
  Count y_at(std::size_t t) const { return y[t - 1]; }    // y_t, t in 1..T

  /// Throws ConfigError on length mismatch, empty series or negative counts.
  void validate() const;
};

/// Hospital occupancy x_0..x_T. Recoveries are derived, never stored.
struct LatentPath {
  std::vector<Count> x;

  /// z_t = x_{t-1} + h_{t-1} - y_t - x_t for t in 1..T.
  Count z(const Dataset& data, std::size_t t) const {
    return x[t - 1] + data.h_prev(t) - data.y_at(t) - x[t];
  }
};

struct Simulation {
  Dataset data;
  LatentPath path;
};

double log_choose(Count n, Count k, const LogFactorial& lf) noexcept;

/// log Binomial(k; n, p) given log p and log(1-p); -inf outside 0 <= k <= n.
double binomial_logpmf(Count k, Count n, double log_p, double log_q,
                       const LogFactorial& lf) noexcept;
double binomial_logpmf(Count k, Count n, double p);

/// log Multinomial(x_t, y_t, z_t; x_prev + h_prev, theta) with
/// z_t = x_prev + h_prev - x_t - y_t. Infeasible configurations give -inf.
double transition_logpmf(Count x_prev, Count h_prev, Count x_t, Count y_t, const Theta& theta);
double transition_logpmf(Count x_prev, Count h_prev, Count x_t, Count y_t, const ThetaLogs& logs,
                         const LogFactorial& lf) noexcept;

/// Forward simulation of the chain multinomial. Bit-reproducible per seed.
Simulation simulate(const Theta& theta, std::span<const Count> h, std::size_t T,
                    const X0Prior& prior, std::uint64_t seed);

/// Epidemic-shaped admissions curve: baseline + peak * exp(-((t-center)/width)^2 / 2),
/// rounded to the nearest integer. A convenience generator, not a fitted shape.
std::vector<Count> pulse_admissions(std::size_t T, double peak, double center, double width,
                                    double baseline = 0.0);

/// Cumulative deaths over cumulative admissions, one entry per t = 1..T.
/// Entries with zero cumulative admissions are empty.
std::vector<std::optional<double>> naive_cfr(const Dataset& data);

}  // namespace lifebelt
