#include "lifebelt/commands.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <optional>

#include "lifebelt/errors.hpp"
#include "lifebelt/exact.hpp"
#include "lifebelt/filters.hpp"
#include "lifebelt/io.hpp"

namespace lifebelt {

namespace {

using Keys = std::vector<std::string_view>;

const Keys kRunKeys = {"run.seed", "run.out", "run.threads", "run.id"};
const Keys kDataKeys = {"data.path", "data.x0_rate", "data.x0_fixed"};
const Keys kThetaKeys = {"theta.p_h", "theta.p_d", "theta.p_r"};
const Keys kFilterKeys = {"filter.variant",        "filter.N",           "filter.apf_cap",
                          "filter.record_trajectories", "filter.exact_t0_weights",
                          "filter.weight_rule",    "filter.n_persistent"};
const Keys kPmcmcKeys = {"pmcmc.iterations", "pmcmc.step_scale",   "pmcmc.burn_in",
                         "pmcmc.thin",       "pmcmc.init_retries", "pmcmc.init_p_h",
                         "pmcmc.init_p_d",   "pmcmc.init_p_r"};

void require_keys(const RunConfig& cfg, std::initializer_list<const Keys*> groups,
                  const Keys& extra = {}) {
  Keys all = extra;
  for (const Keys* g : groups) all.insert(all.end(), g->begin(), g->end());
  cfg.require_known(all);
}

std::size_t to_size(std::int64_t v, const char* key) {
  if (v < 0) throw ConfigError(std::string(key) + " must be non-negative");
  return static_cast<std::size_t>(v);
}

struct RunInfo {
  std::uint64_t seed;
  std::filesystem::path out;
  std::string id;
  int threads;

  std::filesystem::path file(std::string_view suffix) const {
    return out / (id + "." + std::string(suffix));
  }
};

RunInfo run_info(RunConfig& cfg, std::string_view command) {
  RunInfo r;
  r.seed = cfg.get_uint("run.seed", 0);
  r.out = cfg.get_string("run.out", ".");
  r.id = cfg.get_string("run.id", std::string(command) + "-" + std::to_string(r.seed));
  const auto threads = cfg.get_int("run.threads", 1);
  if (threads < 0) throw ConfigError("run.threads must be non-negative");
  r.threads = static_cast<int>(threads);
  return r;
}

std::filesystem::path write_echo(const RunConfig& cfg, const RunInfo& run) {
  const auto path = run.file("config");
  write_text(path, cfg.echo());
  return path;
}

X0Prior read_prior(RunConfig& cfg, const std::string& section) {
  if (cfg.has(section + ".x0_fixed")) {
    if (cfg.has(section + ".x0_rate")) {
      throw ConfigError(section + ".x0_fixed and " + section + ".x0_rate are exclusive");
    }
    const auto v = cfg.get_int(section + ".x0_fixed");
    if (v < 0) throw ConfigError(section + ".x0_fixed must be non-negative");
    return X0Prior::fixed(v);
  }
  return X0Prior::poisson(cfg.get_double(section + ".x0_rate", 1.5));
}

Theta read_theta(RunConfig& cfg, const std::string& prefix, std::optional<Theta> fallback = {}) {
  if (fallback) {
    return Theta::make(cfg.get_double(prefix + "p_h", fallback->p_h),
                       cfg.get_double(prefix + "p_d", fallback->p_d),
                       cfg.get_double(prefix + "p_r", fallback->p_r));
  }
  return Theta::make(cfg.get_double(prefix + "p_h"), cfg.get_double(prefix + "p_d"),
                     cfg.get_double(prefix + "p_r"));
}

Dataset read_data(RunConfig& cfg) {
  const X0Prior prior = read_prior(cfg, "data");
  Dataset data = read_dataset_csv(cfg.get_string("data.path"), prior);
  data.validate();
  return data;
}

WeightRule parse_weight_rule(const std::string& s) {
  if (s == "ancestor") return WeightRule::ancestor_mixture;
  if (s == "own_history") return WeightRule::own_history_mixture;
  throw ConfigError("unknown weight rule '" + s + "' (ancestor or own_history)");
}

FilterConfig read_filter(RunConfig& cfg, const RunInfo& run, Variant default_variant) {
  FilterConfig fc;
  fc.variant = parse_variant(cfg.get_string("filter.variant", std::string(to_string(default_variant))));
  fc.N = to_size(cfg.get_int("filter.N", 500), "filter.N");
  fc.apf_cap = to_size(cfg.get_int("filter.apf_cap", 1'000'000), "filter.apf_cap");
  fc.record_trajectories = cfg.get_bool("filter.record_trajectories", false);
  fc.exact_t0_weights = cfg.get_bool("filter.exact_t0_weights", false);
  fc.weight_rule = parse_weight_rule(cfg.get_string("filter.weight_rule", "ancestor"));
  if (cfg.has("filter.n_persistent")) {
    fc.n_persistent = to_size(cfg.get_int("filter.n_persistent"), "filter.n_persistent");
  }
  fc.seed = run.seed;
  fc.threads = run.threads;
  return fc;
}

PmcmcConfig read_pmcmc(RunConfig& cfg, const RunInfo& run) {
  PmcmcConfig pc;
  pc.iterations = to_size(cfg.get_int("pmcmc.iterations", 10000), "pmcmc.iterations");
  pc.step_scale = cfg.get_double("pmcmc.step_scale", 0.3);
  pc.burn_in = cfg.get_double("pmcmc.burn_in", 0.1);
  pc.thin = to_size(cfg.get_int("pmcmc.thin", 1), "pmcmc.thin");
  pc.init_retries = to_size(cfg.get_int("pmcmc.init_retries", 100), "pmcmc.init_retries");
  pc.seed = run.seed;
  pc.validate();
  return pc;
}

Theta read_init(RunConfig& cfg) {
  const Theta t = read_theta(cfg, "pmcmc.init_", Theta{1.0 / 3, 1.0 / 3, 1.0 / 3});
  if (!t.interior()) throw ConfigError("pmcmc initial theta must be interior to the simplex");
  return t;
}

std::string opt_str(const std::optional<std::size_t>& v) {
  return v ? std::to_string(*v) : std::string();
}

// Runs body(i) for i in [0, n), in parallel when threads != 1. The first
// exception (by index) is rethrown after the loop.
template <class F>
void parallel_tasks(std::size_t n, int threads, F&& body) {
  std::vector<std::exception_ptr> errors(n);
  auto guarded = [&](std::size_t i) {
    try {
      body(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
#ifdef LIFEBELT_USE_OPENMP
  if (threads != 1) {
    const int nt = threads > 0 ? threads : 0;
    if (nt > 0) {
#pragma omp parallel for schedule(dynamic) num_threads(nt)
      for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
        guarded(static_cast<std::size_t>(i));
      }
    } else {
#pragma omp parallel for schedule(dynamic)
      for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
        guarded(static_cast<std::size_t>(i));
      }
    }
  } else
#endif
  {
    (void)threads;
    for (std::size_t i = 0; i < n; ++i) guarded(i);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

CommandResult cmd_simulate(RunConfig& cfg) {
  require_keys(cfg, {&kRunKeys},
               {"model.p_h", "model.p_d", "model.p_r", "model.T", "model.x0_rate",
                "model.x0_fixed", "admissions.values", "admissions.peak", "admissions.center",
                "admissions.width", "admissions.baseline"});
  const RunInfo run = run_info(cfg, "simulate");
  const Theta theta = read_theta(cfg, "model.");
  const X0Prior prior = read_prior(cfg, "model");

  std::vector<Count> h;
  std::size_t T = 0;
  if (cfg.has("admissions.values")) {
    for (const char* k : {"admissions.peak", "admissions.center", "admissions.width",
                          "admissions.baseline"}) {
      if (cfg.has(k)) throw ConfigError("admissions.values excludes the generator keys");
    }
    h = parse_int_list(cfg.get_string("admissions.values"));
    T = to_size(cfg.get_int("model.T", static_cast<std::int64_t>(h.size())), "model.T");
    if (h.size() != T) {
      throw ConfigError("admissions.values has " + std::to_string(h.size()) +
                        " entries, model.T = " + std::to_string(T));
    }
  } else {
    T = to_size(cfg.get_int("model.T"), "model.T");
    const double Td = static_cast<double>(T);
    h = pulse_admissions(T, cfg.get_double("admissions.peak", 10.0),
                         cfg.get_double("admissions.center", Td / 2.0),
                         cfg.get_double("admissions.width", std::max(1.0, Td / 6.0)),
                         cfg.get_double("admissions.baseline", 0.0));
  }
  if (T < 1) throw ConfigError("model.T must be at least 1");

  const Simulation sim = simulate(theta, h, T, prior, run.seed);
  CommandResult res;
  res.files = {run.file("data.csv"), run.file("latent.csv")};
  write_text(res.files[0], dataset_csv(sim.data, cfg));
  write_text(res.files[1], latent_csv(sim.path, cfg));
  res.files.push_back(write_echo(cfg, run));

  const Count admitted = std::accumulate(sim.data.h.begin(), sim.data.h.end(), Count{0});
  const Count died = std::accumulate(sim.data.y.begin(), sim.data.y.end(), Count{0});
  const Count peak = *std::max_element(sim.path.x.begin(), sim.path.x.end());
  res.message = "T = " + std::to_string(T) + ", x0 = " + std::to_string(sim.path.x[0]) +
                ", admissions = " + std::to_string(admitted) + ", deaths = " +
                std::to_string(died) + ", peak occupancy = " + std::to_string(peak);
  return res;
}

CommandResult cmd_filter(RunConfig& cfg) {
  require_keys(cfg, {&kRunKeys, &kDataKeys, &kThetaKeys, &kFilterKeys});
  const RunInfo run = run_info(cfg, "filter");
  const Dataset data = read_data(cfg);
  const Theta theta = read_theta(cfg, "theta.");
  const FilterConfig fc = read_filter(cfg, run, Variant::lbpf);

  const FilterResult fr = run_filter(data, theta, fc);
  CommandResult res;
  res.files.push_back(run.file("filter.json"));
  write_text(res.files.back(), filter_result_json(fr, cfg).dump(2) + "\n");
  if (fc.record_trajectories) {
    res.files.push_back(run.file("trajectories.csv"));
    write_text(res.files.back(), trajectories_csv(fr, cfg));
  }
  res.files.push_back(write_echo(cfg, run));
  res.message = std::string(to_string(fr.variant)) + " loglik = " + format_double(fr.loglik);
  if (fr.collapsed_at) res.message += " (collapsed at t = " + std::to_string(*fr.collapsed_at) + ")";
  return res;
}

CommandResult cmd_grid(RunConfig& cfg) {
  require_keys(cfg, {&kRunKeys, &kDataKeys, &kThetaKeys, &kFilterKeys},
               {"grid.p_d", "grid.p_r", "grid.replicates", "grid.comparator", "grid.exact"});
  const RunInfo run = run_info(cfg, "grid");
  const Dataset data = read_data(cfg);
  const FilterConfig fc = read_filter(cfg, run, Variant::lbpf);
  const auto R = to_size(cfg.get_int("grid.replicates", 20), "grid.replicates");
  if (R < 1) throw ConfigError("grid.replicates must be at least 1");
  const std::string comparator = cfg.get_string("grid.comparator", "none");
  const bool with_exact = cfg.get_bool("grid.exact", false);

  if (!cfg.has("grid.p_d") && !cfg.has("grid.p_r")) {
    throw ConfigError("grid needs grid.p_d and/or grid.p_r");
  }
  // An axis that is not gridded is held at theta.<axis>.
  const auto axis = [&](const char* key, const char* base) {
    return cfg.has(key) ? parse_real_list(cfg.get_string(key))
                        : std::vector<double>{cfg.get_double(base)};
  };
  const auto pd_axis = axis("grid.p_d", "theta.p_d");
  const auto pr_axis = axis("grid.p_r", "theta.p_r");
  std::vector<Theta> points;
  for (double pd : pd_axis) {
    for (double pr : pr_axis) {
      const Theta th{1.0 - pd - pr, pd, pr};
      if (!(th.p_h > 0.0 && pd > 0.0 && pr > 0.0 && pd < 1.0 && pr < 1.0)) {
        throw ConfigError("grid point (p_d = " + format_double(pd) + ", p_r = " +
                          format_double(pr) + ") is not interior to the simplex");
      }
      points.push_back(th);
    }
  }

  std::vector<FilterConfig> variants{fc};
  if (comparator != "none") {
    FilterConfig other = fc;
    other.variant = parse_variant(comparator);
    other.n_persistent.reset();
    variants.push_back(other);
  }
  for (const auto& v : variants) v.validate(data.T());

  const std::size_t V = variants.size();
  const std::size_t n_tasks = points.size() * V * R;
  std::vector<FilterResult> results(n_tasks);
  parallel_tasks(n_tasks, run.threads, [&](std::size_t i) {
    const std::size_t p = i / (V * R);
    const std::size_t v = (i / R) % V;
    const std::size_t r = i % R;
    FilterConfig c = variants[v];
    c.seed = run.seed + r;
    c.threads = 1;
    results[i] = run_filter(data, points[p], c);
  });
  std::vector<double> exact(points.size(), 0.0);
  if (with_exact) {
    parallel_tasks(points.size(), run.threads,
                   [&](std::size_t p) { exact[p] = exact_loglik(data, points[p]); });
  }

  std::string csv = echo_comment(cfg) + "point,p_h,p_d,p_r,variant,replicate,seed,loglik,collapsed_at";
  csv += with_exact ? ",exact_loglik\n" : "\n";
  for (std::size_t i = 0; i < n_tasks; ++i) {
    const std::size_t p = i / (V * R);
    const auto& r = results[i];
    csv += std::to_string(p) + "," + format_double(points[p].p_h) + "," +
           format_double(points[p].p_d) + "," + format_double(points[p].p_r) + "," +
           std::string(to_string(r.variant)) + "," + std::to_string(i % R) + "," +
           std::to_string(r.seed) + "," + format_double(r.loglik) + "," +
           opt_str(r.collapsed_at);
    csv += with_exact ? "," + format_double(exact[p]) + "\n" : "\n";
  }
  CommandResult res;
  res.files.push_back(run.file("grid.csv"));
  write_text(res.files.back(), csv);
  res.files.push_back(write_echo(cfg, run));
  res.message = std::to_string(points.size()) + " points x " + std::to_string(V) +
                " variants x " + std::to_string(R) + " replicates";
  return res;
}

CommandResult cmd_pmcmc(RunConfig& cfg) {
  require_keys(cfg, {&kRunKeys, &kDataKeys, &kFilterKeys, &kPmcmcKeys});
  const RunInfo run = run_info(cfg, "pmcmc");
  const Dataset data = read_data(cfg);
  const FilterConfig fc = read_filter(cfg, run, Variant::lbpf);
  fc.validate(data.T());
  const PmcmcConfig pc = read_pmcmc(cfg, run);
  const Theta init = read_init(cfg);

  const ChainTrace trace = run_pmcmc(data, init, pc, fc);
  const PosteriorSummary summary = summarize(trace);
  CommandResult res;
  res.files = {run.file("trace.csv"), run.file("summary.json")};
  write_text(res.files[0], trace_csv(trace, cfg));
  write_text(res.files[1], summary_json(summary, trace, cfg).dump(2) + "\n");
  res.files.push_back(write_echo(cfg, run));
  res.message = "acceptance rate " + format_double(summary.acceptance_rate) + ", p_d mean " +
                format_double(summary.p_d.mean) + " [" + format_double(summary.p_d.q025) + ", " +
                format_double(summary.p_d.q975) + "]";
  return res;
}

nlohmann::json compare_report(const ChainTrace& lbpf, const ChainTrace& apf,
                              const CompareOptions& opts) {
  const double minimal = static_cast<double>(opts.N * opts.T);
  const double lo = std::log10(minimal);
  const double hi = std::log10(static_cast<double>(opts.apf_cap) * static_cast<double>(opts.T) + 1.0);
  const double width = (hi - lo) / static_cast<double>(opts.hist_bins);

  auto chain_stats = [&](const ChainTrace& tr, bool histogram) {
    std::size_t ran = 0, collapsed = 0, low_ess = 0, minimal_n = 0, terminated = 0,
                saturated = 0, other = 0, below_minimal = 0;
    double total = 0.0, elapsed = 0.0, min_total = HUGE_VAL, max_total = 0.0;
    std::vector<std::size_t> counts(opts.hist_bins, 0);
    for (const auto& r : tr.records) {
      const auto& d = r.proposal;
      if (!d.filter_ran) continue;
      ++ran;
      const double n = static_cast<double>(d.total_attempts);
      total += n;
      elapsed += d.elapsed_us;
      min_total = std::min(min_total, n);
      max_total = std::max(max_total, n);
      if (d.collapsed_at) ++collapsed;
      if (d.final_ess < opts.ess_threshold) ++low_ess;
      if (n < minimal) ++below_minimal;
      if (d.collapsed_at) {
        ++terminated;
      } else if (d.cap_reached) {
        ++saturated;
      } else if (n == minimal) {
        ++minimal_n;
      } else {
        ++other;
      }
      if (histogram) {
        auto b = static_cast<std::ptrdiff_t>(std::floor((std::log10(n) - lo) / width));
        b = std::clamp<std::ptrdiff_t>(b, 0, static_cast<std::ptrdiff_t>(opts.hist_bins) - 1);
        ++counts[static_cast<std::size_t>(b)];
      }
    }
    const double denom = ran ? static_cast<double>(ran) : 1.0;
    nlohmann::json j;
    j["iterations"] = tr.records.size();
    j["filter_runs"] = ran;
    j["acceptance_rate"] = tr.acceptance_rate();
    j["longest_stuck_run"] = tr.longest_stuck_run();
    j["collapse_fraction"] = static_cast<double>(collapsed) / denom;
    j["final_ess_below_threshold_fraction"] = static_cast<double>(low_ess) / denom;
    j["total_proposals"] = total;
    j["min_proposals"] = ran ? min_total : 0.0;
    j["max_proposals"] = max_total;
    j["runs_below_minimal_cost"] = below_minimal;
    j["elapsed_us_total"] = elapsed;
    if (histogram) {
      j["attempt_classes"] = {{"minimal", minimal_n},
                              {"terminated", terminated},
                              {"saturated", saturated},
                              {"other", other}};
      nlohmann::json edges = nlohmann::json::array();
      for (std::size_t b = 0; b <= opts.hist_bins; ++b) {
        edges.push_back(std::pow(10.0, lo + width * static_cast<double>(b)));
      }
      j["attempts_histogram"] = {{"log10_edges_from", lo},
                                 {"log10_bin_width", width},
                                 {"edges", edges},
                                 {"counts", counts}};
    }
    return j;
  };

  nlohmann::json j;
  j["N"] = opts.N;
  j["T"] = opts.T;
  j["lbpf_cost_per_run"] = opts.N * opts.T;
  j["apf_cap"] = opts.apf_cap;
  j["ess_threshold"] = opts.ess_threshold;
  j["lbpf"] = chain_stats(lbpf, false);
  j["apf"] = chain_stats(apf, true);
  return j;
}

CommandResult cmd_compare(RunConfig& cfg) {
  require_keys(cfg, {&kRunKeys, &kDataKeys, &kPmcmcKeys},
               {"filter.N", "filter.apf_cap", "filter.exact_t0_weights", "filter.weight_rule",
                "compare.ess_threshold", "compare.hist_bins"});
  const RunInfo run = run_info(cfg, "compare");
  const Dataset data = read_data(cfg);
  FilterConfig lb = read_filter(cfg, run, Variant::lbpf);
  lb.variant = Variant::lbpf;
  lb.threads = 1;
  FilterConfig ap = lb;
  ap.variant = Variant::apf;
  lb.validate(data.T());
  ap.validate(data.T());
  const PmcmcConfig pc = read_pmcmc(cfg, run);
  const Theta init = read_init(cfg);
  CompareOptions opts;
  opts.N = lb.N;
  opts.T = data.T();
  opts.apf_cap = lb.apf_cap;
  opts.ess_threshold = cfg.get_double("compare.ess_threshold", 5.0);
  opts.hist_bins = to_size(cfg.get_int("compare.hist_bins", 30), "compare.hist_bins");
  if (opts.hist_bins < 1) throw ConfigError("compare.hist_bins must be at least 1");

  // Matched seeds: both chains share pmcmc seed, proposal noise and uniforms.
  std::vector<ChainTrace> traces(2);
  parallel_tasks(2, run.threads == 1 ? 1 : 2, [&](std::size_t i) {
    traces[i] = run_pmcmc(data, init, pc, i == 0 ? lb : ap);
  });

  std::string csv = echo_comment(cfg) +
                    "iter,chain,p_h,p_d,p_r,filter_ran,loglik,accepted,mean_ess,final_ess,"
                    "total_proposals,collapsed_at,cap_reached,elapsed_us\n";
  for (std::size_t c = 0; c < 2; ++c) {
    const char* name = c == 0 ? "lbpf" : "apf";
    for (const auto& r : traces[c].records) {
      const auto& d = r.proposal;
      csv += std::to_string(r.iter) + "," + name + "," + format_double(d.theta.p_h) + "," +
             format_double(d.theta.p_d) + "," + format_double(d.theta.p_r) + "," +
             (d.filter_ran ? "1" : "0") + "," + format_double(d.loglik) + "," +
             (r.accepted ? "1" : "0") + "," + format_double(d.mean_ess) + "," +
             format_double(d.final_ess) + "," + std::to_string(d.total_attempts) + "," +
             opt_str(d.collapsed_at) + "," + (d.cap_reached ? "1" : "0") + "," +
             format_double(std::round(d.elapsed_us)) + "\n";
    }
  }
  nlohmann::json report = compare_report(traces[0], traces[1], opts);
  report["seed"] = run.seed;
  report["config"] = config_json(cfg);

  CommandResult res;
  res.files = {run.file("compare.json"), run.file("diagnostics.csv")};
  write_text(res.files[0], report.dump(2) + "\n");
  write_text(res.files[1], csv);
  res.files.push_back(write_echo(cfg, run));
  const auto& classes = report["apf"]["attempt_classes"];
  res.message = "apf classes: minimal " + classes["minimal"].dump() + ", terminated " +
                classes["terminated"].dump() + ", saturated " + classes["saturated"].dump() +
                "; final ESS < " + format_double(opts.ess_threshold) + ": lbpf " +
                report["lbpf"]["final_ess_below_threshold_fraction"].dump() + ", apf " +
                report["apf"]["final_ess_below_threshold_fraction"].dump();
  return res;
}

CommandResult run_command(std::string_view name, RunConfig& cfg) {
  if (name == "simulate") return cmd_simulate(cfg);
  if (name == "filter") return cmd_filter(cfg);
  if (name == "grid") return cmd_grid(cfg);
  if (name == "pmcmc") return cmd_pmcmc(cfg);
  if (name == "compare") return cmd_compare(cfg);
  throw ConfigError("unknown command '" + std::string(name) + "'");
}

}  // namespace lifebelt
