#pragma once

#include "lifebelt/model.hpp"

namespace lifebelt {

struct ExactOptions {
  double tail_mass = 1e-12;       // Poisson upper-tail mass dropped from the x0 support
  Count max_support = 20000;      // refuse larger state spaces
};

/// Largest reachable occupancy under the truncated prior: x0_cap + sum(h).
Count exact_support_bound(const Dataset& data, const ExactOptions& opts = {});

/// Exact log p(y_{1:T} | theta) by forward summation over the bounded
/// occupancy space. Deterministic. Throws ConfigError when the required
/// support exceeds opts.max_support.
double exact_loglik(const Dataset& data, const Theta& theta, const ExactOptions& opts = {});

}  // namespace lifebelt
