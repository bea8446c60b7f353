#include "lifebelt/model.hpp"

#include <cmath>
#include <random>
#include <string>

#include <boost/math/distributions/poisson.hpp>

#include "lifebelt/errors.hpp"

namespace lifebelt {

namespace {

// k * log(p) with the convention 0 * log(0) = 0.
double count_log(Count k, double log_p) noexcept {
  return k == 0 ? 0.0 : static_cast<double>(k) * log_p;
}

double safe_log(double p) noexcept { return p > 0.0 ? std::log(p) : kNegInf; }

}  // namespace

Theta Theta::make(double p_h, double p_d, double p_r) {
  for (double p : {p_h, p_d, p_r}) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("theta components must lie in [0,1]");
  }
  if (std::abs(p_h + p_d + p_r - 1.0) > 1e-12) {
    throw ConfigError("theta components must sum to 1 (got " + std::to_string(p_h + p_d + p_r) +
                      ")");
  }
  return Theta{p_h, p_d, p_r};
}

void Theta::require_filterable() const {
  if (!(p_d < 1.0)) throw ConfigError("filters require p_d < 1");
}

ThetaLogs::ThetaLogs(const Theta& theta)
    : log_p_h(safe_log(theta.p_h)),
      log_p_d(safe_log(theta.p_d)),
      log_p_r(safe_log(theta.p_r)),
      log_p_not_d(safe_log(theta.p_h + theta.p_r)),
      log_stay(kNegInf),
      log_leave(kNegInf),
      stay(0.0) {
  const double denom = theta.p_h + theta.p_r;
  if (denom > 0.0) {
    stay = theta.p_h / denom;
    log_stay = safe_log(stay);
    log_leave = safe_log(theta.p_r / denom);
  }
}

LogFactorial::LogFactorial(Count max_n) : table_(static_cast<std::size_t>(max_n) + 1) {
  table_[0] = 0.0;
  for (std::size_t i = 1; i < table_.size(); ++i) table_[i] = table_[i - 1] + std::log(double(i));
}

double LogFactorial::operator()(Count n) const noexcept {
  if (n < static_cast<Count>(table_.size())) return table_[static_cast<std::size_t>(n)];
  return std::lgamma(static_cast<double>(n) + 1.0);
}

X0Prior X0Prior::poisson(double rate) {
  if (!(rate > 0.0) || !std::isfinite(rate)) throw ConfigError("x0 prior rate must be positive");
  X0Prior p;
  p.rate_ = rate;
  return p;
}

X0Prior X0Prior::fixed(Count value) {
  if (value < 0) throw ConfigError("fixed x0 must be non-negative");
  X0Prior p;
  p.fixed_ = value;
  p.rate_ = 0.0;
  return p;
}

double X0Prior::logpmf(Count k) const noexcept {
  if (k < 0) return kNegInf;
  if (fixed_) return k == *fixed_ ? 0.0 : kNegInf;
  return -rate_ + static_cast<double>(k) * std::log(rate_) - std::lgamma(double(k) + 1.0);
}

Count X0Prior::sample(Rng& rng) const {
  if (fixed_) return *fixed_;
  std::poisson_distribution<Count> pois(rate_);
  return pois(rng);
}

Count X0Prior::upper_cap(double tail_mass) const {
  if (!(tail_mass > 0.0 && tail_mass < 1.0)) throw ConfigError("tail_mass must lie in (0,1)");
  if (fixed_) return *fixed_;
  const boost::math::poisson_distribution<double> pois(rate_);
  Count k = static_cast<Count>(rate_);
  while (boost::math::cdf(boost::math::complement(pois, static_cast<double>(k))) >= tail_mass) ++k;
  return k;
}

void Dataset::validate() const {
  if (y.empty()) throw ConfigError("dataset must have T >= 1");
  if (h.size() != y.size()) {
    throw ConfigError("admissions and deaths must have equal length (h: " +
                      std::to_string(h.size()) + ", y: " + std::to_string(y.size()) + ")");
  }
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (h[i] < 0 || y[i] < 0) throw ConfigError("counts must be non-negative");
  }
}

double log_choose(Count n, Count k, const LogFactorial& lf) noexcept {
  return lf(n) - lf(k) - lf(n - k);
}

double binomial_logpmf(Count k, Count n, double log_p, double log_q,
                       const LogFactorial& lf) noexcept {
  if (k < 0 || n < 0 || k > n) return kNegInf;
  return log_choose(n, k, lf) + count_log(k, log_p) + count_log(n - k, log_q);
}

double binomial_logpmf(Count k, Count n, double p) {
  const LogFactorial lf(0);
  return binomial_logpmf(k, n, safe_log(p), safe_log(1.0 - p), lf);
}

double transition_logpmf(Count x_prev, Count h_prev, Count x_t, Count y_t, const ThetaLogs& logs,
                         const LogFactorial& lf) noexcept {
  const Count n = x_prev + h_prev;
  const Count z = n - x_t - y_t;
  if (x_t < 0 || y_t < 0 || z < 0) return kNegInf;
  return lf(n) - lf(x_t) - lf(y_t) - lf(z) + count_log(x_t, logs.log_p_h) +
         count_log(y_t, logs.log_p_d) + count_log(z, logs.log_p_r);
}

double transition_logpmf(Count x_prev, Count h_prev, Count x_t, Count y_t, const Theta& theta) {
  const LogFactorial lf(0);
  return transition_logpmf(x_prev, h_prev, x_t, y_t, ThetaLogs(theta), lf);
}

Simulation simulate(const Theta& theta, std::span<const Count> h, std::size_t T,
                    const X0Prior& prior, std::uint64_t seed) {
  if (T == 0) throw ConfigError("simulate requires T >= 1");
  if (h.size() != T) {
    throw ConfigError("admissions length " + std::to_string(h.size()) + " does not match T = " +
                      std::to_string(T));
  }
  Rng rng(seed, {stream::init});
  Simulation sim;
  sim.data.h.assign(h.begin(), h.end());
  sim.data.y.resize(T);
  sim.data.x0_prior = prior;
  sim.path.x.resize(T + 1);
  sim.path.x[0] = prior.sample(rng);

  const double stay = (theta.p_h + theta.p_r) > 0.0 ? theta.p_h / (theta.p_h + theta.p_r) : 0.0;
  for (std::size_t t = 1; t <= T; ++t) {
    const Count n = sim.path.x[t - 1] + h[t - 1];
    std::binomial_distribution<Count> deaths(n, theta.p_d);
    const Count y = deaths(rng);
    std::binomial_distribution<Count> remain(n - y, stay);
    sim.data.y[t - 1] = y;
    sim.path.x[t] = remain(rng);
  }
  sim.data.validate();
  return sim;
}

std::vector<Count> pulse_admissions(std::size_t T, double peak, double center, double width,
                                    double baseline) {
  if (!(width > 0.0)) throw ConfigError("pulse width must be positive");
  if (peak < 0.0 || baseline < 0.0) throw ConfigError("pulse peak and baseline must be >= 0");
  std::vector<Count> h(T);
  for (std::size_t t = 0; t < T; ++t) {
    const double u = (static_cast<double>(t) - center) / width;
    h[t] = static_cast<Count>(std::llround(baseline + peak * std::exp(-0.5 * u * u)));
  }
  return h;
}

std::vector<std::optional<double>> naive_cfr(const Dataset& data) {
  std::vector<std::optional<double>> out(data.T());
  Count cum_y = 0;
  Count cum_h = 0;
  for (std::size_t t = 1; t <= data.T(); ++t) {
    cum_y += data.y_at(t);
    cum_h += data.h_prev(t);
    if (cum_h > 0) out[t - 1] = static_cast<double>(cum_y) / static_cast<double>(cum_h);
  }
  return out;
}

}  // namespace lifebelt
