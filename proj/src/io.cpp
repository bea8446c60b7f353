#include "lifebelt/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "lifebelt/errors.hpp"

namespace lifebelt {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  while (true) {
    const auto comma = line.find(',');
    out.push_back(trim(line.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    line = line.substr(comma + 1);
  }
  return out;
}

const char* group_name(Group g) { return g == Group::persistent ? "persistent" : "resampled"; }

}  // namespace

std::string echo_comment(const RunConfig& echo) {
  std::string out;
  for (const auto& [key, value] : echo.entries()) out += "# " + key + " = " + value + "\n";
  return out;
}

Dataset parse_dataset_csv(std::string_view text, std::string_view origin, const X0Prior& prior) {
  Dataset data{{}, {}, prior};
  std::size_t line_no = 0;
  bool header_seen = false;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    const std::string_view line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto where = std::string(origin) + ":" + std::to_string(line_no) + ": ";
    const auto cells = split(line);
    if (!header_seen) {
      if (cells.size() != 3 || cells[0] != "t" || cells[1] != "h_in" || cells[2] != "y_deaths") {
        throw IoError(where + "expected header 't,h_in,y_deaths'");
      }
      header_seen = true;
      continue;
    }
    if (cells.size() != 3) {
      throw IoError(where + "expected 3 fields, found " + std::to_string(cells.size()));
    }
    Count v[3];
    for (int i = 0; i < 3; ++i) {
      auto [p, ec] = std::from_chars(cells[i].data(), cells[i].data() + cells[i].size(), v[i]);
      if (ec != std::errc{} || p != cells[i].data() + cells[i].size() || cells[i].empty()) {
        throw IoError(where + "field " + std::to_string(i + 1) + " is not an integer: '" +
                      std::string(cells[i]) + "'");
      }
    }
    if (v[0] != static_cast<Count>(data.y.size()) + 1) {
      throw IoError(where + "expected t = " + std::to_string(data.y.size() + 1) + ", found " +
                    std::to_string(v[0]));
    }
    if (v[1] < 0 || v[2] < 0) throw IoError(where + "counts must be non-negative");
    data.h.push_back(v[1]);
    data.y.push_back(v[2]);
  }
  if (!header_seen) throw IoError(std::string(origin) + ": missing header 't,h_in,y_deaths'");
  if (data.y.empty()) throw IoError(std::string(origin) + ": no data rows");
  return data;
}

Dataset read_dataset_csv(const std::filesystem::path& path, const X0Prior& prior) {
  return parse_dataset_csv(read_text(path), path.string(), prior);
}

std::string dataset_csv(const Dataset& data, const RunConfig& echo) {
  std::string out = echo_comment(echo) + "t,h_in,y_deaths\n";
  for (std::size_t t = 1; t <= data.T(); ++t) {
    out += std::to_string(t) + "," + std::to_string(data.h_prev(t)) + "," +
           std::to_string(data.y_at(t)) + "\n";
  }
  return out;
}

std::string latent_csv(const LatentPath& path, const RunConfig& echo) {
  std::string out = echo_comment(echo) + "t,x\n";
  for (std::size_t t = 0; t < path.x.size(); ++t) {
    out += std::to_string(t) + "," + std::to_string(path.x[t]) + "\n";
  }
  return out;
}

std::string trajectories_csv(const FilterResult& result, const RunConfig& echo) {
  std::string out = echo_comment(echo) + "t,particle,x,norm_w,group,resampled_from\n";
  for (const auto& r : result.trajectories) {
    out += std::to_string(r.t) + "," + std::to_string(r.particle) + "," + std::to_string(r.x) +
           "," + format_double(r.norm_w) + "," + group_name(r.group) + "," +
           std::to_string(r.resampled_from) + "\n";
  }
  return out;
}

std::string trace_csv(const ChainTrace& trace, const RunConfig& echo) {
  std::string out = echo_comment(echo) + "iter,gamma1,gamma2,p_h,p_d,p_r,loglik,accepted\n";
  auto row = [&out](std::size_t it, const ChainState& s, bool acc) {
    out += std::to_string(it) + "," + format_double(s.gamma.g1) + "," +
           format_double(s.gamma.g2) + "," + format_double(s.theta.p_h) + "," +
           format_double(s.theta.p_d) + "," + format_double(s.theta.p_r) + "," +
           format_double(s.loglik) + "," + (acc ? "1" : "0") + "\n";
  };
  row(0, trace.initial, true);
  for (const auto& r : trace.records) row(r.iter, r.state, r.accepted);
  return out;
}

nlohmann::json json_real(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

nlohmann::json config_json(const RunConfig& echo) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [key, value] : echo.entries()) j[key] = value;
  return j;
}

nlohmann::json filter_result_json(const FilterResult& result, const RunConfig& echo) {
  nlohmann::json j;
  j["variant"] = std::string(to_string(result.variant));
  j["seed"] = result.seed;
  j["loglik"] = json_real(result.loglik);
  j["collapsed_at"] = result.collapsed_at ? nlohmann::json(*result.collapsed_at) : nullptr;
  nlohmann::json ess = nlohmann::json::array();
  for (double e : result.ess_per_t) ess.push_back(json_real(e));
  j["ess_per_t"] = ess;
  j["attempts_per_t"] = result.attempts_per_t;
  j["total_attempts"] = result.total_attempts;
  j["cap_reached"] = result.cap_reached;
  if (!result.lifebelt_logw.empty()) {
    nlohmann::json lw = nlohmann::json::array();
    for (double w : result.lifebelt_logw) lw.push_back(json_real(w));
    j["lifebelt_logw"] = lw;
  }
  j["config"] = config_json(echo);
  return j;
}

nlohmann::json summary_json(const PosteriorSummary& summary, const ChainTrace& trace,
                            const RunConfig& echo) {
  auto q = [](const Quantiles& v) {
    return nlohmann::json{{"mean", v.mean}, {"q025", v.q025}, {"q05", v.q05},
                          {"q50", v.q50},   {"q95", v.q95},   {"q975", v.q975}};
  };
  nlohmann::json j;
  j["seed"] = trace.config.seed;
  j["iterations"] = trace.records.size();
  j["n_samples"] = summary.n_samples;
  j["acceptance_rate"] = summary.acceptance_rate;
  j["longest_stuck_run"] = summary.longest_stuck_run;
  j["p_h"] = q(summary.p_h);
  j["p_d"] = q(summary.p_d);
  j["p_r"] = q(summary.p_r);
  j["gamma1"] = q(summary.gamma1);
  j["gamma2"] = q(summary.gamma2);
  j["config"] = config_json(echo);
  return j;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, std::string_view content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace lifebelt
