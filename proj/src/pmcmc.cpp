#include "lifebelt/pmcmc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include "lifebelt/errors.hpp"
#include "lifebelt/rng.hpp"

namespace lifebelt {

namespace {

double logit(double p) { return std::log(p) - std::log1p(-p); }

// log sigmoid(x) and log(1 - sigmoid(x)) without overflow.
double log_sigmoid(double x) noexcept { return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }
double log_sigmoid_c(double x) noexcept { return log_sigmoid(-x); }
double sigmoid(double x) noexcept { return std::exp(log_sigmoid(x)); }

ProposalDiagnostics diagnose(const Theta& theta, const FilterResult& r, std::size_t T) {
  ProposalDiagnostics d;
  d.theta = theta;
  d.filter_ran = true;
  d.loglik = r.loglik;
  d.total_attempts = r.total_attempts;
  d.collapsed_at = r.collapsed_at;
  d.cap_reached = r.cap_reached;
  // Steps after a collapse never ran; they count as ESS 0.
  const double sum = std::accumulate(r.ess_per_t.begin(), r.ess_per_t.end(), 0.0);
  d.mean_ess = sum / static_cast<double>(T);
  d.final_ess = (r.ess_per_t.size() == T && !r.collapsed_at) ? r.ess_per_t.back() : 0.0;
  return d;
}

}  // namespace

GammaPoint to_gamma(const Theta& theta) {
  if (!theta.interior()) throw ConfigError("to_gamma requires theta interior to the simplex");
  const double s = theta.p_d + theta.p_r;
  return {logit(theta.p_d / s), logit(s)};
}

Theta from_gamma(GammaPoint gamma) noexcept {
  const double r = sigmoid(gamma.g1);
  const double s = sigmoid(gamma.g2);
  const double p_d = r * s;
  const double p_r = (1.0 - r) * s;
  // 1 - s directly, not 1 - p_d - p_r, to keep precision for small p_h.
  return Theta{sigmoid(-gamma.g2), p_d, p_r};
}

std::array<std::array<double, 2>, 2> gamma_jacobian(GammaPoint gamma) noexcept {
  const double r = sigmoid(gamma.g1);
  const double s = sigmoid(gamma.g2);
  const double dr = r * (1.0 - r);
  const double ds = s * (1.0 - s);
  // p_d = r s, p_r = (1 - r) s
  return {{{dr * s, r * ds}, {-dr * s, (1.0 - r) * ds}}};
}

double log_prior_gamma(GammaPoint gamma) noexcept {
  // |det J| = s * r(1-r) * s(1-s)
  const double ls = log_sigmoid(gamma.g2);
  return std::log(2.0) + 2.0 * ls + log_sigmoid_c(gamma.g2) + log_sigmoid(gamma.g1) +
         log_sigmoid_c(gamma.g1);
}

StepOutcome gimh_step(const ChainState& current, const Dataset& data,
                      const FilterConfig& filter_cfg, double step_scale, std::uint64_t seed,
                      std::size_t iteration) {
  Rng prng(seed, {stream::mcmc_proposal, iteration});
  std::normal_distribution<double> noise(0.0, 1.0);
  const double e1 = noise(prng);
  const double e2 = noise(prng);
  const GammaPoint prop{current.gamma.g1 + step_scale * e1, current.gamma.g2 + step_scale * e2};
  const Theta theta = from_gamma(prop);

  StepOutcome out;
  out.state = current;
  FilterConfig fc = filter_cfg;
  fc.seed = derive_seed(seed, {stream::mcmc_filter, iteration});

  // Proposing the current point (step_scale 0) is a trivially accepted
  // move; the recycled estimate stays and no filter is run.
  if (prop.g1 == current.gamma.g1 && prop.g2 == current.gamma.g2) {
    out.proposal.theta = current.theta;
    out.proposal.loglik = current.loglik;
    out.accepted = true;
    return out;
  }
  // A proposal that rounds onto the simplex boundary has zero prior density.
  if (!theta.interior()) {
    out.proposal.theta = theta;
    return out;
  }
  const auto t0 = std::chrono::steady_clock::now();
  const FilterResult fr = run_filter(data, theta, fc);
  out.proposal = diagnose(theta, fr, data.T());
  out.proposal.elapsed_us =
      std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - t0).count();

  if (fr.loglik == kNegInf) return out;
  const double lp = log_prior_gamma(prop);
  const double log_ratio = fr.loglik + lp - current.loglik - current.log_prior;
  Rng arng(seed, {stream::mcmc_accept, iteration});
  if (log_ratio >= 0.0 || std::log(arng.uniform()) < log_ratio) {
    out.state = ChainState{prop, theta, fr.loglik, lp};
    out.accepted = true;
  }
  return out;
}

void PmcmcConfig::validate() const {
  if (iterations < 1) throw ConfigError("pmcmc needs at least one iteration");
  if (!(step_scale >= 0.0) || !std::isfinite(step_scale)) {
    throw ConfigError("step_scale must be a non-negative finite number");
  }
  if (!(burn_in >= 0.0 && burn_in < 1.0)) throw ConfigError("burn_in must lie in [0,1)");
  if (thin < 1) throw ConfigError("thin must be at least 1");
}

double ChainTrace::acceptance_rate() const noexcept {
  if (records.empty()) return 0.0;
  const auto acc = std::count_if(records.begin(), records.end(),
                                 [](const ChainRecord& r) { return r.accepted; });
  return static_cast<double>(acc) / static_cast<double>(records.size());
}

std::size_t ChainTrace::longest_stuck_run() const noexcept {
  // The initial state counts as the start of the first run.
  std::size_t best = 0;
  std::size_t run = 1;
  for (const auto& r : records) {
    run = r.accepted ? 1 : run + 1;
    best = std::max(best, run);
  }
  return best;
}

ChainTrace run_pmcmc(const Dataset& data, const Theta& init_theta, const PmcmcConfig& config,
                     const FilterConfig& filter_cfg) {
  config.validate();
  data.validate();
  ChainTrace trace;
  trace.config = config;
  trace.filter = filter_cfg;

  ChainState state;
  state.gamma = to_gamma(init_theta);
  state.theta = init_theta;
  state.log_prior = log_prior_gamma(state.gamma);
  for (std::size_t attempt = 0; attempt < config.init_retries; ++attempt) {
    FilterConfig fc = filter_cfg;
    fc.seed = derive_seed(config.seed, {stream::init, attempt});
    state.loglik = run_filter(data, init_theta, fc).loglik;
    if (state.loglik > kNegInf) break;
  }
  if (state.loglik == kNegInf) {
    throw ConfigError("initial likelihood estimate is -inf after " +
                      std::to_string(config.init_retries) +
                      " attempts; choose a different initial theta or filter variant");
  }
  trace.initial = state;

  trace.records.reserve(config.iterations);
  for (std::size_t it = 1; it <= config.iterations; ++it) {
    StepOutcome out = gimh_step(state, data, filter_cfg, config.step_scale, config.seed, it);
    state = out.state;
    trace.records.push_back({it, state, out.accepted, out.proposal});
  }
  return trace;
}

double quantile(std::span<const double> v, double q) {
  if (v.empty()) throw ConfigError("quantile of an empty sample");
  std::vector<double> s(v.begin(), v.end());
  std::sort(s.begin(), s.end());
  const double pos = q * static_cast<double>(s.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, s.size() - 1);
  return s[lo] + (pos - static_cast<double>(lo)) * (s[hi] - s[lo]);
}

Quantiles summarize(std::span<const double> v) {
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  return {mean,           quantile(v, 0.025), quantile(v, 0.05),
          quantile(v, 0.5), quantile(v, 0.95), quantile(v, 0.975)};
}

PosteriorSummary summarize(const ChainTrace& trace) {
  PosteriorSummary out;
  out.acceptance_rate = trace.acceptance_rate();
  out.longest_stuck_run = trace.longest_stuck_run();
  const auto skip = static_cast<std::size_t>(trace.config.burn_in *
                                             static_cast<double>(trace.records.size()));
  std::vector<double> ph, pd, pr, g1, g2;
  for (std::size_t i = skip; i < trace.records.size(); i += trace.config.thin) {
    const auto& s = trace.records[i].state;
    ph.push_back(s.theta.p_h);
    pd.push_back(s.theta.p_d);
    pr.push_back(s.theta.p_r);
    g1.push_back(s.gamma.g1);
    g2.push_back(s.gamma.g2);
  }
  out.n_samples = ph.size();
  if (ph.empty()) throw ConfigError("no samples left after burn-in and thinning");
  out.p_h = summarize(ph);
  out.p_d = summarize(pd);
  out.p_r = summarize(pr);
  out.gamma1 = summarize(g1);
  out.gamma2 = summarize(g2);
  return out;
}

}  // namespace lifebelt
