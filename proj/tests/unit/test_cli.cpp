#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "lifebelt/commands.hpp"
#include "lifebelt/config.hpp"
#include "lifebelt/errors.hpp"
#include "lifebelt/io.hpp"

using namespace lifebelt;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("lifebelt_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(LIFEBELT_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string strip_comments(const std::string& text) {
  std::string out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string::npos) nl = text.size();
    if (text[pos] != '#') out += text.substr(pos, nl - pos + 1);
    pos = nl + 1;
  }
  return out;
}

const char* kSimArgs =
    "--set model.p_h=0.3 --set model.p_d=0.5 --set model.p_r=0.2 --set model.T=15 "
    "--set admissions.peak=8";

}  // namespace

TEST_CASE("config parsing") {
  auto c = RunConfig::parse("# comment\n\nfilter.N = 50\n  theta.p_d=0.5  \n", "x");
  CHECK(c.get_int("filter.N") == 50);
  CHECK(c.get_double("theta.p_d") == 0.5);
  CHECK(c.get_double("theta.p_r", 0.25) == 0.25);
  CHECK(c.echo().find("theta.p_r = 0.25") != std::string::npos);
  CHECK_THROWS_WITH_AS(RunConfig::parse("a.b = 1\nbroken line\n", "cfg"),
                       doctest::Contains("cfg:2"), ConfigError);
  CHECK_THROWS_AS(RunConfig::parse("nosection = 1\n"), ConfigError);
  CHECK_THROWS_AS(RunConfig::parse("a.b = 1\na.b = 2\n"), ConfigError);
  CHECK_THROWS_AS(c.get_string("missing.key"), ConfigError);
  c.set("filter.N", "many");
  CHECK_THROWS_AS(c.get_int("filter.N"), ConfigError);
  const std::vector<std::string_view> allowed{"filter.N"};
  CHECK_THROWS_WITH_AS(c.require_known(allowed), doctest::Contains("theta.p_d"), ConfigError);
}

TEST_CASE("value lists and number formatting") {
  CHECK(parse_real_list("0.1,0.2, 0.3") == std::vector<double>{0.1, 0.2, 0.3});
  const auto r = parse_real_list("0.2:0.6:5");
  REQUIRE(r.size() == 5);
  CHECK(r[2] == doctest::Approx(0.4));
  CHECK(r[4] == doctest::Approx(0.6));
  CHECK(parse_int_list("1,2,30") == std::vector<std::int64_t>{1, 2, 30});
  CHECK_THROWS_AS(parse_int_list("1,x"), ConfigError);
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(-HUGE_VAL) == "-inf");
  for (double v : {1.0 / 3.0, -31.869723788353433, 1e-300}) {
    CHECK(std::stod(format_double(v)) == v);
  }
}

TEST_CASE("dataset csv round trip and error lines") {
  Dataset d{{0, 4, 2}, {1, 0, 3}, X0Prior::poisson()};
  RunConfig echo;
  echo.set("run.seed", "1");
  const std::string text = dataset_csv(d, echo);
  CHECK(text.rfind("# run.seed = 1\n", 0) == 0);
  const auto back = parse_dataset_csv(text, "d.csv", X0Prior::poisson());
  CHECK(back.h == d.h);
  CHECK(back.y == d.y);

  CHECK_THROWS_WITH_AS(parse_dataset_csv("t,h_in,y_deaths\n1,0,1\n2,x,0\n", "d.csv", X0Prior::poisson()),
                       doctest::Contains("d.csv:3"), IoError);
  CHECK_THROWS_WITH_AS(parse_dataset_csv("# c\nt,h_in,y_deaths\n1,0,1\n3,0,0\n", "d.csv", X0Prior::poisson()),
                       doctest::Contains("d.csv:4"), IoError);
  CHECK_THROWS_WITH_AS(parse_dataset_csv("t,h_in,y_deaths\n1,0\n", "d.csv", X0Prior::poisson()),
                       doctest::Contains("d.csv:2"), IoError);
  CHECK_THROWS_WITH_AS(parse_dataset_csv("t,h,y\n1,0,0\n", "d.csv", X0Prior::poisson()),
                       doctest::Contains("d.csv:1"), IoError);
  CHECK_THROWS_WITH_AS(parse_dataset_csv("t,h_in,y_deaths\n1,-1,0\n", "d.csv", X0Prior::poisson()),
                       doctest::Contains("d.csv:2"), IoError);
  CHECK_THROWS_AS(parse_dataset_csv("t,h_in,y_deaths\n", "d.csv", X0Prior::poisson()), IoError);
}

TEST_CASE("json encodes non-finite reals as strings") {
  CHECK(json_real(-HUGE_VAL) == "-inf");
  CHECK(json_real(1.5) == 1.5);
  FilterResult r;
  r.loglik = kNegInf;
  r.collapsed_at = 3;
  const auto j = filter_result_json(r, RunConfig{});
  CHECK(j["loglik"] == "-inf");
  CHECK(j["collapsed_at"] == 3);
  CHECK(j.contains("config"));
}

TEST_CASE("cli simulate is deterministic and reruns from its echo") {
  const auto dir = scratch("sim");
  const std::string out = dir.string();
  REQUIRE(run_cli(std::string("simulate ") + kSimArgs + " --seed 5 --out " + out + "/a") == 0);
  REQUIRE(run_cli(std::string("simulate ") + kSimArgs + " --seed 5 --out " + out + "/b") == 0);
  CHECK(strip_comments(read_text(dir / "a/simulate-5.data.csv")) ==
        strip_comments(read_text(dir / "b/simulate-5.data.csv")));
  CHECK(strip_comments(read_text(dir / "a/simulate-5.latent.csv")) ==
        strip_comments(read_text(dir / "b/simulate-5.latent.csv")));
  // The echo alone reproduces the run.
  REQUIRE(run_cli("simulate --config " + (dir / "a/simulate-5.config").string() + " --out " + out + "/c") == 0);
  CHECK(strip_comments(read_text(dir / "a/simulate-5.data.csv")) ==
        strip_comments(read_text(dir / "c/simulate-5.data.csv")));
  CHECK(fs::exists(dir / "a/simulate-5.config"));
}

TEST_CASE("cli filter, grid agreement and echo reruns") {
  const auto dir = scratch("filter");
  const std::string out = dir.string();
  REQUIRE(run_cli(std::string("simulate ") + kSimArgs + " --seed 2 --out " + out) == 0);
  const std::string data = "--set data.path=" + (dir / "simulate-2.data.csv").string();
  const std::string theta = " --set theta.p_h=0.3 --set theta.p_d=0.5 --set theta.p_r=0.2";
  REQUIRE(run_cli("filter " + data + theta + " --set filter.N=200 --seed 8 --out " + out +
                  " --set filter.record_trajectories=true") == 0);
  const auto fj = nlohmann::json::parse(read_text(dir / "filter-8.filter.json"));
  CHECK(fj["variant"] == "lbpf");
  CHECK(fj["seed"] == 8);
  CHECK(fj["collapsed_at"].is_null());
  CHECK(fj["ess_per_t"].size() == 15);
  CHECK(fj["config"]["filter.N"] == "200");
  CHECK(fs::exists(dir / "filter-8.trajectories.csv"));

  REQUIRE(run_cli("grid " + data + theta + " --set filter.N=200 --set grid.p_d=0.5 "
                  "--set grid.replicates=1 --seed 8 --out " + out) == 0);
  const std::string grid = strip_comments(read_text(dir / "grid-8.grid.csv"));
  const double loglik = fj["loglik"].get<double>();
  CHECK(grid.find("," + format_double(loglik) + ",") != std::string::npos);

  // Rerun the filter from its echo into another directory.
  REQUIRE(run_cli("filter --config " + (dir / "filter-8.config").string() + " --out " + out + "/again") == 0);
  auto again = nlohmann::json::parse(read_text(dir / "again/filter-8.filter.json"));
  again.erase("config");
  auto first = fj;
  first.erase("config");
  CHECK(again == first);
}

TEST_CASE("cli exit codes") {
  const auto dir = scratch("codes");
  const std::string out = " --out " + dir.string();
  CHECK(run_cli("filter --set bogus.key=1" + out) == 2);
  CHECK(run_cli("filter --set data.path=/nonexistent/x.csv --set theta.p_h=0.3 "
                "--set theta.p_d=0.5 --set theta.p_r=0.2" + out) == 3);
  CHECK(run_cli("simulate --set model.p_h=0.5 --set model.p_d=0.5 --set model.p_r=0.5 "
                "--set model.T=3" + out) == 2);
  CHECK(run_cli("--config /nonexistent.cfg simulate" + out) == 3);
  CHECK(run_cli("nosuchcommand") == 2);
  write_text(dir / "bad.csv", "t,h_in,y_deaths\n1,0,0\n2,0\n");
  CHECK(run_cli("filter --set data.path=" + (dir / "bad.csv").string() +
                " --set theta.p_h=0.3 --set theta.p_d=0.5 --set theta.p_r=0.2" + out) == 3);
  CHECK(run_cli("grid --set data.path=" + (dir / "bad.csv").string()) == 3);
}

TEST_CASE("cli filter reports a collapse with exit code zero") {
  const auto dir = scratch("collapse");
  write_text(dir / "d.csv", "t,h_in,y_deaths\n1,0,0\n2,0,9\n");
  REQUIRE(run_cli("filter --set data.path=" + (dir / "d.csv").string() +
                  " --set data.x0_fixed=0 --set filter.variant=bpf --set filter.N=20"
                  " --set theta.p_h=0.3 --set theta.p_d=0.5 --set theta.p_r=0.2 --out " +
                  dir.string()) == 0);
  const auto j = nlohmann::json::parse(read_text(dir / "filter-0.filter.json"));
  CHECK(j["loglik"] == "-inf");
  CHECK(j["collapsed_at"] == 2);
}

TEST_CASE("grid rejects boundary points") {
  const auto dir = scratch("grid");
  write_text(dir / "d.csv", "t,h_in,y_deaths\n1,2,1\n2,0,1\n");
  RunConfig c;
  c.set("data.path", (dir / "d.csv").string());
  c.set("theta.p_r", "0.2");
  c.set("grid.p_d", "0.5,0.8");
  c.set("run.out", dir.string());
  CHECK_THROWS_WITH_AS(cmd_grid(c), doctest::Contains("not interior"), ConfigError);
}

TEST_CASE("grid with comparator and exact column") {
  const auto dir = scratch("grid2");
  write_text(dir / "d.csv", "t,h_in,y_deaths\n1,2,1\n2,1,1\n3,0,1\n");
  RunConfig c;
  c.set("data.path", (dir / "d.csv").string());
  c.set("theta.p_r", "0.2");
  c.set("grid.p_d", "0.3:0.5:3");
  c.set("grid.replicates", "4");
  c.set("grid.comparator", "bpf");
  c.set("grid.exact", "true");
  c.set("filter.N", "50");
  c.set("run.out", dir.string());
  c.set("run.threads", "2");
  const auto res = cmd_grid(c);
  const std::string csv = strip_comments(read_text(res.files.front()));
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 3 * 2 * 4);
  CHECK(csv.find("exact_loglik") != std::string::npos);
  CHECK(csv.find(",bpf,") != std::string::npos);

  // Output does not depend on the thread count.
  c.set("run.threads", "1");
  c.set("run.out", (dir / "serial").string());
  CHECK(strip_comments(read_text(cmd_grid(c).files.front())) == csv);
}

TEST_CASE("pmcmc command writes a monotone summary") {
  const auto dir = scratch("pmcmc");
  write_text(dir / "d.csv", "t,h_in,y_deaths\n1,3,1\n2,4,2\n3,1,3\n4,0,1\n5,2,0\n");
  RunConfig c;
  c.set("data.path", (dir / "d.csv").string());
  c.set("filter.N", "50");
  c.set("pmcmc.iterations", "200");
  c.set("run.out", dir.string());
  const auto res = cmd_pmcmc(c);
  const auto j = nlohmann::json::parse(read_text(dir / "pmcmc-0.summary.json"));
  for (const char* p : {"p_h", "p_d", "p_r"}) {
    CHECK(j[p]["q05"].get<double>() <= j[p]["q50"].get<double>());
    CHECK(j[p]["q50"].get<double>() <= j[p]["q95"].get<double>());
  }
  CHECK(j["iterations"] == 200);
  const std::string trace = strip_comments(read_text(dir / "pmcmc-0.trace.csv"));
  CHECK(trace.rfind("iter,gamma1,gamma2,p_h,p_d,p_r,loglik,accepted\n", 0) == 0);
  CHECK(std::count(trace.begin(), trace.end(), '\n') == 202);
}

TEST_CASE("compare command: apf never cheaper than lbpf") {
  const auto dir = scratch("compare");
  write_text(dir / "d.csv", "t,h_in,y_deaths\n1,0,0\n2,12,1\n3,0,7\n4,0,3\n5,1,1\n6,0,0\n");
  RunConfig c;
  c.set("data.path", (dir / "d.csv").string());
  c.set("filter.N", "50");
  c.set("filter.apf_cap", "20000");
  c.set("pmcmc.iterations", "150");
  c.set("pmcmc.step_scale", "0.8");
  c.set("run.out", dir.string());
  cmd_compare(c);
  const auto j = nlohmann::json::parse(read_text(dir / "compare-0.compare.json"));
  CHECK(j["lbpf_cost_per_run"] == 300);
  CHECK(j["apf"]["runs_below_minimal_cost"] == 0);
  CHECK(j["lbpf"]["collapse_fraction"] == 0.0);
  std::size_t total = 0;
  for (auto& v : j["apf"]["attempts_histogram"]["counts"]) total += v.get<std::size_t>();
  CHECK(total == j["apf"]["filter_runs"].get<std::size_t>());
  const std::string diag = strip_comments(read_text(dir / "compare-0.diagnostics.csv"));
  CHECK(std::count(diag.begin(), diag.end(), '\n') == 1 + 2 * 150);
}

TEST_CASE("unknown keys are errors for every command") {
  for (const char* cmd : {"simulate", "filter", "grid", "pmcmc", "compare"}) {
    RunConfig c;
    c.set("filter.nonsense", "1");
    CHECK_THROWS_AS(run_command(cmd, c), ConfigError);
  }
  RunConfig c;
  CHECK_THROWS_AS(run_command("render", c), ConfigError);
}
