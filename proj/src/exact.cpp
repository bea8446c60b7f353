#include "lifebelt/exact.hpp"

#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "lifebelt/errors.hpp"

namespace lifebelt {

Count exact_support_bound(const Dataset& data, const ExactOptions& opts) {
  return data.x0_prior.upper_cap(opts.tail_mass) +
         std::accumulate(data.h.begin(), data.h.end(), Count{0});
}

double exact_loglik(const Dataset& data, const Theta& theta, const ExactOptions& opts) {
  data.validate();
  const Count bound = exact_support_bound(data, opts);
  if (bound + 1 > opts.max_support) {
    throw ConfigError("exact_loglik needs a support of " + std::to_string(bound + 1) +
                      " states, above the limit of " + std::to_string(opts.max_support));
  }
  const ThetaLogs logs(theta);
  const LogFactorial lf(bound + 1);
  const auto S = static_cast<std::size_t>(bound + 1);

  // alpha is kept normalised; its log scale is accumulated in loglik.
  std::vector<double> alpha(S, 0.0);
  std::vector<double> next(S, 0.0);
  const Count x0_cap = data.x0_prior.upper_cap(opts.tail_mass);
  for (Count x = 0; x <= x0_cap; ++x) alpha[x] = std::exp(data.x0_prior.logpmf(x));
  double loglik = 0.0;
  Count reach = x0_cap;  // occupancy values above reach carry no mass

  for (std::size_t t = 1; t <= data.T(); ++t) {
    const Count h = data.h_prev(t);
    const Count y = data.y_at(t);
    std::fill(next.begin(), next.end(), 0.0);
    for (Count x = 0; x <= reach; ++x) {
      if (alpha[x] == 0.0) continue;
      const Count n = x + h;
      const Count m = n - y;
      if (m < 0) continue;
      const double death = binomial_logpmf(y, n, logs.log_p_d, logs.log_p_not_d, lf);
      if (death == kNegInf) continue;
      const double base = std::log(alpha[x]) + death;
      for (Count xn = 0; xn <= m; ++xn) {
        const double lq = binomial_logpmf(xn, m, logs.log_stay, logs.log_leave, lf);
        if (lq != kNegInf) next[xn] += std::exp(base + lq);
      }
    }
    reach += h;
    const double total = std::accumulate(next.begin(), next.begin() + reach + 1, 0.0);
    if (!(total > 0.0)) return kNegInf;
    loglik += std::log(total);
    for (Count x = 0; x <= reach; ++x) alpha[x] = next[x] / total;
  }
  return loglik;
}

}  // namespace lifebelt
