#include "doctest.h"
#include "test_support.hpp"

#include <json.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

using namespace lapb;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string with(const std::string& base, const json& patch) {
  json j = json::parse(base);
  j.merge_patch(patch);
  return j.dump();
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("lapb_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string write(const std::string& name, const std::string& text) const {
    fs::path p = path / name;
    std::ofstream(p) << text;
    return p.string();
  }
};

struct Run {
  int code = -1;
  std::string out, err;
};

Run run_binary(const TempDir& tmp, const std::string& args) {
  const std::string o = (tmp.path / "stdout.txt").string(), e = (tmp.path / "stderr.txt").string();
  std::string cmd = std::string(LAPB_CLI_PATH) + " " + args + " >" + o + " 2>" + e;
  int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::stringstream so, se;
  so << std::ifstream(o).rdbuf();
  se << std::ifstream(e).rdbuf();
  r.out = so.str();
  r.err = se.str();
  return r;
}

struct CmdRun {
  int code = -1;
  std::string out, err;
};

template <class F>
CmdRun call(F f, const std::string& config) {
  cli::RunConfig cfg = cli::parse_config(config);
  std::ostringstream out, err;
  CmdRun r;
  r.code = f(cfg, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

// rows of a CSV document keyed by column name, comment lines skipped
std::vector<std::map<std::string, std::string>> csv_rows(const std::string& text) {
  std::vector<std::map<std::string, std::string>> rows;
  std::vector<std::string> header;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (header.empty()) {
      header = cells;
      continue;
    }
    std::map<std::string, std::string> row;
    for (size_t i = 0; i < header.size() && i < cells.size(); ++i) row[header[i]] = cells[i];
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("config parsing rejects malformed documents") {
    CHECK_THROWS_WITH_AS(cli::parse_config("{"), doctest::Contains("not valid JSON"), cli::InputError);
    CHECK_THROWS_WITH_AS(cli::parse_config(R"({"family":"probit"})"), doctest::Contains("unknown family"),
                         cli::InputError);
    CHECK_THROWS_WITH_AS(cli::parse_config(R"({"famly":"poisson_gamma"})"), doctest::Contains("famly"),
                         cli::InputError);
    CHECK_THROWS_AS(cli::parse_config(R"({"sweep":{"n_grid":[10,5]}})"), cli::InputError);
    CHECK_THROWS_AS(cli::parse_config(R"({"data":{"path":"x.csv","generator":"exp"}})"), cli::InputError);
    CHECK_THROWS_AS(cli::parse_config(R"({"data":{"dim":2}})"), cli::InputError);
    CHECK_THROWS_WITH_AS(cli::parse_config(R"({"seed":"one"})"), doctest::Contains("wrong type"), cli::InputError);
    auto c = cli::parse_config(R"({"sweep":{"n_min":10,"n_max":1000,"points":3}})");
    CHECK(c.n_grid == std::vector<int>{10, 100, 1000});
    CHECK_FALSE(c.seed_set);
    CHECK(cli::parse_config(test::kPoissonConfig).seed_set);
  }

  TEST_CASE("runs that draw random numbers require a seed") {
    auto cfg = cli::parse_config(R"({"family":"poisson_gamma","data":{"generator":"exp","n":100}})");
    CHECK(cli::monte_carlo_reachable(cfg));
    CHECK_THROWS_WITH_AS(cli::require_seed(cfg), doctest::Contains("seed is required"), cli::InputError);
    TempDir tmp;
    std::string data = tmp.write("data.csv", "1\n2\n3\n");
    auto file_cfg = cli::parse_config(R"({"family":"poisson_gamma","data":{"path":")" + data + R"("}})");
    CHECK_FALSE(cli::monte_carlo_reachable(file_cfg));
    CHECK_NOTHROW(cli::require_seed(file_cfg));

    std::string conf = tmp.write("noseed.json", R"({"family":"poisson_gamma","data":{"generator":"exp","n":100}})");
    Run r = run_binary(tmp, "audit --config " + conf);
    CHECK(r.code == cli::kInputError);
    CHECK(r.err.find("seed is required") != std::string::npos);
    Run s = run_binary(tmp, "audit --seed 1 --config " + conf);
    CHECK(s.code == cli::kOk);
  }

  TEST_CASE("audit certifies the Poisson fixture at n = 1000") {
    CmdRun r = call(cli::cmd_audit, with(test::kPoissonConfig, {{"data", {{"n", 1000}}}}));
    REQUIRE(r.code == cli::kOk);
    json j = json::parse(r.out);
    CHECK(j["schema_version"] == cli::kSchemaVersion);
    CHECK(j["exit_code"] == 0);
    for (auto& c : j["centrics"]) {
      CHECK(c["status"] == "ok");
      for (auto& [kind, b] : c["bounds"].items()) {
        CHECK(b["status"] == "ok");
        CHECK(b["total"].is_number());
        const bool map = c["centric"] == "map";
        const std::vector<std::string> required =
            map ? std::vector<std::string>{"A1", "A2", "A3", "A4", "A4a", "A4b", "A5", "A6"}
                : std::vector<std::string>{"A1", "A2", "A7", "A8", "A9", "A10"};
        for (const auto& id : required) {
          INFO(c["centric"], " ", kind, " ", id);
          REQUIRE(b["assumptions"].contains(id));
          CHECK(b["assumptions"][id]["flag"] == true);
        }
      }
    }
  }

  TEST_CASE("audit at n = 2 is infeasible and points to min-n") {
    CmdRun r = call(cli::cmd_audit, with(test::kPoissonConfig, {{"data", {{"n", 2}}}}));
    CHECK(r.code == cli::kInfeasible);
    CHECK(r.err.find("min-n") != std::string::npos);
    CHECK(json::parse(r.out)["exit_code"] == cli::kInfeasible);
  }

  TEST_CASE("a malformed dataset row is an input error naming the row") {
    TempDir tmp;
    std::string data = tmp.write("bad.csv", "# counts\n3\n4\nfive\n");
    std::string conf = tmp.write("bad.json", R"({"family":"poisson_gamma","data":{"path":")" + data + R"("}})");
    Run r = run_binary(tmp, "audit --config " + conf);
    CHECK(r.code == cli::kInputError);
    CHECK(r.err.find("row 4") != std::string::npos);

    Run missing = run_binary(tmp, "audit --config " + (tmp.path / "absent.json").string());
    CHECK(missing.code == cli::kInputError);
    Run noargs = run_binary(tmp, "audit");
    CHECK(noargs.code == cli::kInputError);
  }

  TEST_CASE("sweep output is byte-identical for a fixed seed and agrees with audit") {
    const std::string conf = with(test::kPoissonConfig, {{"sweep", {{"n_grid", {200, 1000}}}}, {"workers", 1}});
    CmdRun a = call(cli::cmd_sweep, conf);
    CmdRun b = call(cli::cmd_sweep, conf);
    CHECK(a.code == cli::kOk);
    CHECK(a.out == b.out);
    CHECK(a.out.rfind(std::string("# ") + cli::kCsvVersion, 0) == 0);
    auto rows = csv_rows(a.out);
    REQUIRE(rows.size() == 4);

    CmdRun au = call(cli::cmd_audit, with(test::kPoissonConfig, {{"data", {{"n", 1000}}}, {"format", "csv"}}));
    REQUIRE(au.code == cli::kOk);
    auto arows = csv_rows(au.out);
    REQUIRE(arows.size() == 2);
    for (size_t i = 0; i < 2; ++i) {
      const auto& s = rows[2 + i];
      const auto& t = arows[i];
      CHECK(s.at("n") == "1000");
      CHECK(s.at("centric") == t.at("centric"));
      for (const char* col : {"tv", "w1", "cov"}) {
        INFO(col);
        CHECK(std::stod(s.at(col)) == doctest::Approx(std::stod(t.at(col))).epsilon(1e-12));
      }
      CHECK_FALSE(s.at("truth_tv").empty());
      CHECK(t.at("truth_tv").empty());
    }
  }

  TEST_CASE("min-n with an empty dimension range prints only the header") {
    CmdRun r = call(cli::cmd_min_n, with(test::kPoissonConfig, {{"min_n", {{"d_min", 2}, {"d_max", 1}}}}));
    CHECK(r.code == cli::kOk);
    CHECK(csv_rows(r.out).empty());
    CHECK(r.out.find("d,min_n,status,evaluations") != std::string::npos);
  }

  TEST_CASE("min-n in one dimension sits exactly at the feasibility boundary") {
    const std::string conf = with(test::kPoissonConfig, {{"min_n", {{"d_min", 1}, {"d_max", 1}}}});
    CmdRun r = call(cli::cmd_min_n, conf);
    auto rows = csv_rows(r.out);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].at("status") == "ok");
    const long long n = std::stoll(rows[0].at("min_n"));
    CHECK(n > 2);
    cli::RunConfig cfg = cli::parse_config(conf);
    cli::DataStream ds(cfg, 1);
    CHECK(cli::certifiable(cfg, cli::build_model(cfg, ds.prefix(static_cast<size_t>(n)))));
    CHECK_FALSE(cli::certifiable(cfg, cli::build_model(cfg, ds.prefix(static_cast<size_t>(n - 1)))));
    CHECK(cli::search_min_n(cfg, 1).min_n == n);
    CHECK_THROWS_AS(cli::search_min_n(cfg, 2), cli::InputError);

    auto capped = with(conf, {{"min_n", {{"cap", 8}}}});
    auto cr = csv_rows(call(cli::cmd_min_n, capped).out);
    REQUIRE(cr.size() == 1);
    CHECK(cr[0].at("status") == "exceeds cap");
    CHECK(cr[0].at("min_n") == "-1");
  }

  TEST_CASE("oracle-compare exit codes") {
    CmdRun p = call(cli::cmd_oracle_compare, with(test::kPoissonConfig, {{"data", {{"n", 1000}}}}));
    CHECK(p.code == cli::kOk);
    json pj = json::parse(p.out);
    CHECK(pj["all_dominated"] == true);
    CHECK(pj["dominance"].size() > 0);

    CmdRun w = call(cli::cmd_oracle_compare, with(test::kWeibullConfig, {{"data", {{"n", 5000}}}}));
    CHECK(w.code == cli::kOk);

    CmdRun s = call(cli::cmd_oracle_compare,
                    with(test::kPoissonConfig, {{"data", {{"n", 1000}}}, {"debug", {{"scale_bounds", 0.01}}}}));
    CHECK(s.code == cli::kDominanceFailure);
    CHECK(json::parse(s.out)["all_dominated"] == false);
    CHECK(s.err.find("dominance failure") != std::string::npos);

    CmdRun big = call(cli::cmd_oracle_compare, with(test::logistic_config(9), {{"data", {{"n", 500}}}}));
    CHECK(big.code == cli::kOracleUnavailable);
  }
}
