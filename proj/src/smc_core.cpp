#include "lifebelt/smc_core.hpp"

#include <algorithm>
#include <cmath>

#include "lifebelt/errors.hpp"

namespace lifebelt {

double logsumexp(std::span<const double> v) noexcept {
  double mx = kNegInf;
  for (double a : v) mx = std::max(mx, a);
  if (mx == kNegInf) return kNegInf;
  double s = 0.0;
  for (double a : v) s += std::exp(a - mx);
  return mx + std::log(s);
}

Normalized normalize(std::span<const double> logw) {
  Normalized out;
  const std::size_t n = logw.size();
  out.norm_w.assign(n, 0.0);
  out.log_norm_w.assign(n, kNegInf);
  if (n == 0) return out;
  const double lse = logsumexp(logw);
  if (lse == kNegInf) return out;
  out.collapsed = false;
  for (std::size_t i = 0; i < n; ++i) {
    out.log_norm_w[i] = logw[i] - lse;
    out.norm_w[i] = std::exp(out.log_norm_w[i]);
  }
  out.log_mean = lse - std::log(static_cast<double>(n));
  return out;
}

double ess(std::span<const double> norm_w) noexcept {
  double s2 = 0.0;
  for (double w : norm_w) s2 += w * w;
  return s2 > 0.0 ? 1.0 / s2 : 0.0;
}

std::optional<std::vector<std::size_t>> multinomial_resample(std::span<const double> norm_w,
                                                             std::size_t n_draws, Rng& rng) {
  std::vector<double> cdf(norm_w.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < norm_w.size(); ++i) {
    acc += norm_w[i];
    cdf[i] = acc;
  }
  if (!(acc > 0.0)) return std::nullopt;
  std::vector<std::size_t> idx(n_draws);
  for (auto& k : idx) {
    const double u = rng.uniform() * acc;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    k = static_cast<std::size_t>(it - cdf.begin());
    // Rounding can push u onto the total; fall back to the last positive weight.
    if (k == cdf.size()) {
      k = cdf.size() - 1;
      while (norm_w[k] == 0.0) --k;
    }
  }
  return idx;
}

double dmis_logweight(double target_logdensity, std::span<const MixtureTerm> terms,
                      double log_total) noexcept {
  double mx = kNegInf;
  for (const auto& t : terms) mx = std::max(mx, t.log_count + t.log_density);
  if (mx == kNegInf) return kNegInf;
  double s = 0.0;
  for (const auto& t : terms) s += std::exp(t.log_count + t.log_density - mx);
  const double log_mixture = mx + std::log(s) - log_total;
  return target_logdensity - log_mixture;
}

double loglik_accumulate(std::span<const double> per_step_log_means) noexcept {
  double total = 0.0;
  for (double v : per_step_log_means) {
    if (v == kNegInf) return kNegInf;
    total += v;
  }
  return total;
}

namespace {

double mixture_logdensity(Count x, std::span<const DiscreteComponent> components,
                          std::vector<MixtureTerm>& scratch) {
  scratch.clear();
  for (const auto& c : components) {
    if (c.count == 0) continue;
    scratch.push_back({std::log(static_cast<double>(c.count)), c.logpmf(x)});
  }
  double mx = kNegInf;
  for (const auto& t : scratch) mx = std::max(mx, t.log_count + t.log_density);
  if (mx == kNegInf) return kNegInf;
  double s = 0.0;
  for (const auto& t : scratch) s += std::exp(t.log_count + t.log_density - mx);
  return mx + std::log(s);
}

}  // namespace

double dmis_static_estimate(const std::function<double(Count)>& h,
                            const std::function<double(Count)>& target_logpmf,
                            std::span<const DiscreteComponent> components, std::uint64_t seed) {
  std::size_t total = 0;
  for (const auto& c : components) total += c.count;
  if (total == 0) throw ConfigError("dmis_static_estimate needs at least one draw");
  const double log_total = std::log(static_cast<double>(total));

  std::vector<MixtureTerm> terms;
  double sum = 0.0;
  std::uint64_t g = 0;
  for (const auto& c : components) {
    Rng rng(seed, {g++});
    for (std::size_t i = 0; i < c.count; ++i) {
      const Count x = c.sample(rng);
      const double log_mix = mixture_logdensity(x, components, terms) - log_total;
      const double lw = target_logpmf(x) - log_mix;
      if (lw != kNegInf) sum += std::exp(lw) * h(x);
    }
  }
  return sum / static_cast<double>(total);
}

std::optional<Count> find_uncovered(const std::function<double(Count)>& target_logpmf,
                                    std::span<const DiscreteComponent> components, Count lo,
                                    Count hi) {
  std::vector<MixtureTerm> terms;
  for (Count x = lo; x <= hi; ++x) {
    if (target_logpmf(x) == kNegInf) continue;
    if (mixture_logdensity(x, components, terms) == kNegInf) return x;
  }
  return std::nullopt;
}

}  // namespace lifebelt
