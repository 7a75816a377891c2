#include <doctest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

const fs::path kScratch = fs::temp_directory_path() / "ponsim_cli_test";

int ponsim(const std::string& args) {
  const std::string cmd = std::string("PONSIM_LOG=warn ") + PONSIM_BIN + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path fresh(const std::string& name) {
  const auto dir = kScratch / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::stringstream s(line);
  std::string cell;
  while (std::getline(s, cell, sep)) out.push_back(cell);
  return out;
}

/// Rows of a CSV keyed by header name.
std::vector<std::map<std::string, std::string>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  const auto header = split(line, ',');
  std::vector<std::map<std::string, std::string>> rows;
  while (std::getline(in, line)) {
    const auto cells = split(line, ',');
    REQUIRE(cells.size() == header.size());
    std::map<std::string, std::string> row;
    for (std::size_t i = 0; i < cells.size(); ++i) row[header[i]] = cells[i];
    rows.push_back(row);
  }
  return rows;
}

const std::string kShort = "--set simulation.warmup_cycles=50 --set simulation.measured_cycles=400";

}  // namespace

TEST_CASE("run writes metrics, report and resolved config") {
  const auto dir = fresh("run");
  REQUIRE(ponsim("run " + kShort + " --out " + dir.string()) == 0);
  CHECK(fs::exists(dir / "metrics.csv"));
  CHECK(fs::exists(dir / "report.txt"));
  CHECK(fs::exists(dir / "config.resolved.yaml"));
  const auto rows = read_csv(dir / "metrics.csv");
  REQUIRE(rows.size() == 1);
  const double saving = std::stod(rows[0].at("energy_saving"));
  CHECK(saving > 0.3);
  CHECK(saving < 0.8);
  CHECK(rows[0].at("conservation_violations") == "0");

  // The resolved config reproduces the run.
  const auto again = fresh("run_again");
  REQUIRE(ponsim("run --config " + (dir / "config.resolved.yaml").string() + " --out " + again.string()) == 0);
  CHECK(slurp(again / "metrics.csv") == slurp(dir / "metrics.csv"));
}

TEST_CASE("same seed gives identical bytes, a different seed does not") {
  const auto a = fresh("seed_a");
  const auto b = fresh("seed_b");
  const auto c = fresh("seed_c");
  REQUIRE(ponsim("run --seed 7 " + kShort + " --out " + a.string()) == 0);
  REQUIRE(ponsim("run --seed 7 " + kShort + " --out " + b.string()) == 0);
  REQUIRE(ponsim("run --seed 8 " + kShort + " --out " + c.string()) == 0);
  CHECK(slurp(a / "metrics.csv") == slurp(b / "metrics.csv"));
  CHECK(slurp(a / "metrics.csv") != slurp(c / "metrics.csv"));
}

TEST_CASE("sweep writes one row per value, in order") {
  const auto dir = fresh("sweep");
  REQUIRE(ponsim("sweep " + kShort + " --set sweep.axis=rx_sleep --set 'sweep.values=[1,2,3,4,5,6]' --parallel 3 --out " +
                 dir.string()) == 0);
  const auto rows = read_csv(dir / "sweep.csv");
  REQUIRE(rows.size() == 6);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(std::stod(rows[i].at("axis_value")) == static_cast<double>(i + 1));
    CHECK(rows[i].at("conservation_violations") == "0");
  }
}

TEST_CASE("configuration errors exit with code 2") {
  const auto dir = fresh("errors");
  const std::string out = " --out " + dir.string();
  CHECK(ponsim("run --config /nonexistent.yaml" + out) == 2);
  CHECK(ponsim("validate --set traffic.hurst=1.2" + out) == 2);
  CHECK(ponsim("validate --set power.rl_tl=5" + out) == 2);
  CHECK(ponsim("validate --set nope.key=1" + out) == 2);
  CHECK(ponsim("sweep --set sweep.axis=rx_sleep --set 'sweep.values=[]'" + out) == 2);
  CHECK(ponsim("sweep" + out) == 2);
  CHECK_FALSE(fs::exists(dir / "sweep.csv"));
  CHECK(ponsim("validate" + out) == 0);
  CHECK(ponsim("validate --config " + std::string(PONSIM_DEFAULT_CONFIG)) == 0);
}

TEST_CASE("analyze reports budgets and saturation") {
  const auto idle = fresh("analyze_idle");
  REQUIRE(ponsim("analyze --set traffic.upstream_load_bps=0 --set traffic.downstream_load_bps=0 --out " +
                 idle.string()) == 0);
  auto rows = read_csv(idle / "analysis.csv");
  REQUIRE(rows.size() == 1);
  CHECK(std::stod(rows[0].at("w_cbr_s")) == 0.0);
  const double budget = std::stod(rows[0].at("tx_sleep_s"));
  CHECK(budget > 0.09);
  CHECK(budget < 0.1);
  CHECK(rows[0].at("saturated") == "0");

  const auto hot = fresh("analyze_hot");
  // Each ONU queue is served at the full line rate, so one ONU must offer more than that.
  REQUIRE(ponsim("analyze --set traffic.model=poisson --set traffic.upstream_load_bps=3e9 --out " + hot.string()) ==
          0);
  rows = read_csv(hot / "analysis.csv");
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].at("saturated") == "1");

  const auto swept = fresh("analyze_sweep");
  REQUIRE(ponsim("analyze --set sweep.axis=us_load --set 'sweep.values=[1e6,2e6,4e6]' --out " + swept.string()) == 0);
  rows = read_csv(swept / "analysis.csv");
  REQUIRE(rows.size() == 3);
  CHECK(std::stod(rows[0].at("tx_sleep_s")) >= std::stod(rows[2].at("tx_sleep_s")));
}
