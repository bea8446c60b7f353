#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "lifebelt/filters.hpp"
#include "lifebelt/model.hpp"

namespace lifebelt {

/// Unconstrained coordinates of the open simplex:
/// gamma1 = logit(p_d / (p_d + p_r)), gamma2 = logit(p_d + p_r).
struct GammaPoint {
  double g1 = 0.0;
  double g2 = 0.0;
};

/// Throws ConfigError unless theta is interior to the simplex.
GammaPoint to_gamma(const Theta& theta);
Theta from_gamma(GammaPoint gamma) noexcept;

/// d(p_d, p_r) / d(gamma1, gamma2), row-major.
std::array<std::array<double, 2>, 2> gamma_jacobian(GammaPoint gamma) noexcept;

/// Flat Dirichlet(1,1,1) density (value 2 on the (p_d, p_r) triangle) pushed
/// to gamma space: log 2 + log |det J|.
double log_prior_gamma(GammaPoint gamma) noexcept;

struct ChainState {
  GammaPoint gamma;
  Theta theta;
  double loglik = kNegInf;  // recycled estimate from the iteration that accepted this state
  double log_prior = kNegInf;
};

/// Filter diagnostics for the proposed theta of one iteration.
struct ProposalDiagnostics {
  Theta theta;
  bool filter_ran = false;  // false for self-moves and boundary proposals
  double loglik = kNegInf;
  double mean_ess = 0.0;  // averaged over the T steps; collapsed steps count as 0
  double final_ess = 0.0;
  std::size_t total_attempts = 0;
  std::optional<std::size_t> collapsed_at;
  bool cap_reached = false;
  double elapsed_us = 0.0;  // informational, not reproducible
};

struct StepOutcome {
  ChainState state;
  bool accepted = false;
  ProposalDiagnostics proposal;
};

/// One grouped-independence MH step: Gaussian random walk in gamma space,
/// one filter run at the proposal, the current estimate is never refreshed.
StepOutcome gimh_step(const ChainState& current, const Dataset& data,
                      const FilterConfig& filter_cfg, double step_scale, std::uint64_t seed,
                      std::size_t iteration);

struct PmcmcConfig {
  std::size_t iterations = 10000;
  double step_scale = 0.3;
  double burn_in = 0.1;  // fraction discarded by summaries
  std::size_t thin = 1;
  std::size_t init_retries = 100;
  std::uint64_t seed = 0;

  void validate() const;
};

struct ChainRecord {
  std::size_t iter;
  ChainState state;
  bool accepted;
  ProposalDiagnostics proposal;
};

struct ChainTrace {
  PmcmcConfig config;
  FilterConfig filter;
  ChainState initial;
  std::vector<ChainRecord> records;

  double acceptance_rate() const noexcept;
  /// Longest run of consecutive iterations spent at one state.
  std::size_t longest_stuck_run() const noexcept;
};

/// Iterates gimh_step from init_theta. Throws ConfigError when the initial
/// estimate is -inf on every one of config.init_retries attempts.
ChainTrace run_pmcmc(const Dataset& data, const Theta& init_theta, const PmcmcConfig& config,
                     const FilterConfig& filter_cfg);

struct Quantiles {
  double mean, q025, q05, q50, q95, q975;
};

/// Linear-interpolation quantile of unsorted data (copies).
double quantile(std::span<const double> v, double q);
Quantiles summarize(std::span<const double> v);

struct PosteriorSummary {
  std::size_t n_samples = 0;
  double acceptance_rate = 0.0;
  std::size_t longest_stuck_run = 0;
  Quantiles p_h, p_d, p_r, gamma1, gamma2;
};

/// Summary over post-burn-in, thinned records.
PosteriorSummary summarize(const ChainTrace& trace);

}  // namespace lifebelt
