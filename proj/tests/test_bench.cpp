#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include <sys/wait.h>

#include <gtest/gtest.h>

#include "zoq/bench/config.hpp"
#include "zoq/bench/csv.hpp"
#include "zoq/bench/presets.hpp"
#include "zoq/bench/runner.hpp"
#include "zoq/bench/svg.hpp"

namespace fs = std::filesystem;
using namespace zoq::bench;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string first_line(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("zoq_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int count(const std::string& text, const std::string& needle) {
  int n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(ZOQ_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const char* kSmallConfig = R"(name: small
seed: 3
replications: 3
budgets: [40, 13]
objective:
  kind: quadratic
  dim: 6
combos:
  - label: avg_q4
    estimator: avg
    q: 4
  - estimator: align
    schedule: full
    budgets: [40]
  - estimator: single
    schedule: single
)";

}  // namespace

TEST(Csv, FormatsSeventeenDigits) {
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(format_double(2.0), "2");
  EXPECT_EQ(format_double(std::nan("")), "nan");
  EXPECT_EQ(format_double(-INFINITY), "-inf");
}

TEST(Csv, RowWidthIsChecked) {
  const fs::path dir = scratch("csvwidth");
  CsvWriter w(dir / "a.csv", {"x", "y"});
  EXPECT_THROW(w.row({"1"}), zoq::Error);
}

TEST(Config, ParsesMinimalExample) {
  const auto cfg = load_config(fs::path(ZOQ_SOURCE_DIR) / "configs" / "minimal.yaml");
  EXPECT_EQ(cfg.name, "minimal");
  EXPECT_EQ(cfg.seed, 7u);
  EXPECT_EQ(cfg.replications, 2);
  EXPECT_EQ(cfg.budgets, (std::vector<long>{25}));
  EXPECT_EQ(cfg.objective.dim, 5);
  ASSERT_EQ(cfg.combos.size(), 1u);
  EXPECT_EQ(cfg.combos[0].label, "align_full");
  EXPECT_EQ(cfg.combos[0].schedule, ScheduleKind::Full);
}

TEST(Config, AutoLabelsAndBudgetFilter) {
  const auto cfg = parse_config(kSmallConfig, "small.yaml");
  ASSERT_EQ(cfg.combos.size(), 3u);
  EXPECT_EQ(cfg.combos[0].label, "avg_q4");
  EXPECT_FALSE(cfg.combos[1].label.empty());
  EXPECT_NE(cfg.combos[1].label, cfg.combos[2].label);
  EXPECT_TRUE(cfg.combos[1].runs_at(40));
  EXPECT_FALSE(cfg.combos[1].runs_at(13));
}

TEST(Config, ErrorsAreLineAnchored) {
  const std::string unknown_key = "name: x\nbudgets: [10]\nobjective:\n  kind: quadratic\n  dimm: 4\ncombos:\n  - estimator: avg\n";
  try {
    parse_config(unknown_key, "bad.yaml");
    FAIL();
  } catch (const zoq::ConfigError& e) {
    EXPECT_EQ(std::string(e.what()).rfind("bad.yaml:5:", 0), 0u) << e.what();
  }
  const std::string bad_estimator = "budgets: [10]\nobjective:\n  kind: quadratic\ncombos:\n  - estimator: avg\n  - estimator: sideways\n";
  try {
    parse_config(bad_estimator, "bad.yaml");
    FAIL();
  } catch (const zoq::ConfigError& e) {
    EXPECT_EQ(std::string(e.what()).rfind("bad.yaml:6:", 0), 0u) << e.what();
  }
  EXPECT_THROW(parse_config("budgets: [10\n", "broken.yaml"), zoq::ConfigError);
  EXPECT_THROW(parse_config("", "empty.yaml"), zoq::ConfigError);
  const std::string dup = "budgets: [10]\nobjective:\n  kind: quadratic\ncombos:\n  - label: a\n    estimator: avg\n  - label: a\n    estimator: align\n";
  EXPECT_THROW(parse_config(dup, "dup.yaml"), zoq::ConfigError);
}

TEST(Config, ValidationNamesComboBeforeRunning) {
  const std::string text =
      "budgets: [3]\nobjective:\n  kind: quadratic\n  dim: 6\ncombos:\n  - label: too_big\n    estimator: align\n    schedule: full\n";
  const auto cfg = parse_config(text, "v.yaml");
  const auto obj = build_objective(cfg.objective, cfg.objective_seed());
  try {
    validate(cfg, *obj);
    FAIL();
  } catch (const zoq::ConfigError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("v.yaml:6:"), std::string::npos) << msg;
    EXPECT_NE(msg.find("too_big"), std::string::npos) << msg;
  }
  EXPECT_THROW(run_experiment(cfg), zoq::ConfigError);
}

TEST(Config, SeedOverrideFromEnvironment) {
  auto cfg = parse_config(kSmallConfig, "small.yaml");
  ::setenv("ZOQ_SEED", "991", 1);
  apply_seed_override(cfg);
  EXPECT_EQ(cfg.seed, 991u);
  ::setenv("ZOQ_SEED", "abc", 1);
  EXPECT_THROW(apply_seed_override(cfg), zoq::ConfigError);
  ::unsetenv("ZOQ_SEED");
  apply_seed_override(cfg);
  EXPECT_EQ(cfg.seed, 991u);
}

TEST(Config, InitialPointsSharedAcrossCombos) {
  const auto cfg = parse_config(kSmallConfig, "small.yaml");
  EXPECT_EQ(initial_point(cfg, 1), initial_point(cfg, 1));
  EXPECT_NE(initial_point(cfg, 1), initial_point(cfg, 2));
}

TEST(Runner, WritesSchemaAndIsByteIdentical) {
  auto cfg = parse_config(kSmallConfig, "small.yaml");
  const fs::path a = scratch("run_a");
  const fs::path b = scratch("run_b");
  write_results(run_experiment(cfg), a);
  cfg.threads = 1;
  write_results(run_experiment(cfg), b);

  const fs::path golden = fs::path(ZOQ_SOURCE_DIR) / "tests" / "golden";
  EXPECT_EQ(first_line(a / "summary.csv") + "\n", slurp(golden / "summary_header.csv"));
  EXPECT_EQ(first_line(a / "final.csv") + "\n", slurp(golden / "final_header.csv"));
  int trajectories = 0;
  for (const auto& entry : fs::directory_iterator(a)) {
    const auto name = entry.path().filename().string();
    if (name == "summary.csv" || name == "final.csv") continue;
    ++trajectories;
    EXPECT_EQ(first_line(entry.path()) + "\n", slurp(golden / "trajectory_header.csv")) << name;
    EXPECT_EQ(slurp(entry.path()), slurp(b / name)) << name;
  }
  // avg_q4 and single at both budgets, align only at K=40; 3 replications each.
  EXPECT_EQ(trajectories, 15);
  EXPECT_EQ(slurp(a / "summary.csv"), slurp(b / "summary.csv"));
  EXPECT_EQ(slurp(a / "final.csv"), slurp(b / "final.csv"));
}

TEST(Runner, BudgetAccounting) {
  const auto cfg = parse_config(kSmallConfig, "small.yaml");
  const auto result = run_experiment(cfg);
  for (const auto& cell : result.cells) {
    for (const auto& rep : cell.replications) {
      ASSERT_EQ(rep.status, ReplicationStatus::Ok);
      int max_q = 0;
      long max_cum = 0;
      for (const auto& row : rep.trajectory.rows) {
        max_q = std::max(max_q, row.q);
        max_cum = std::max(max_cum, row.cum_queries);
      }
      EXPECT_LE(max_cum, cell.budget) << cell.label;
      EXPECT_GE(max_cum, cell.budget - max_q + 1) << cell.label;
    }
    EXPECT_EQ(cell.curve.cum_queries.back(), cell.budget);
  }
}

TEST(Runner, TrajectoryFileNames) { EXPECT_EQ(trajectory_file_name("align_q10", 500, 3), "align_q10_K500_r3.csv"); }

TEST(Presets, ListAndUnknownName) {
  const auto presets = list_presets();
  ASSERT_GE(presets.size(), 4u);
  for (const auto& p : presets) {
    const auto cfg = make_preset(p.name);
    EXPECT_FALSE(cfg.combos.empty()) << p.name;
    const auto paper = make_preset(p.name, true);
    EXPECT_EQ(paper.objective.dim, 1000) << p.name;
  }
  EXPECT_THROW(make_preset("fig9"), zoq::ConfigError);
  const auto fig1 = make_preset("fig1");
  EXPECT_EQ(fig1.objective.dim, 100);
  EXPECT_EQ(fig1.combos.size(), 6u);
  EXPECT_EQ(fig1.replications, 10);
  for (const auto& c : fig1.combos) EXPECT_FALSE(c.smoothing.has_value());
  for (const auto& c : make_preset("fig1", true).combos) EXPECT_EQ(c.smoothing, 1e-9);
  for (const auto& c : make_preset("fig2", true).combos) EXPECT_FALSE(c.smoothing.has_value());
}

TEST(Plot, OnePolylinePerCombo) {
  const fs::path dir = scratch("plot_one");
  auto cfg = parse_config(
      "name: one\nbudgets: [20]\nreplications: 2\nobjective:\n  kind: quadratic\n  dim: 4\ncombos:\n  - estimator: align\n    schedule: full\n",
      "one.yaml");
  write_results(run_experiment(cfg), dir / "one");
  const auto written = plot_summaries({dir / "one" / "summary.csv"}, dir / "plots");
  ASSERT_EQ(written.size(), 1u);
  const std::string svg = slurp(written[0]);
  EXPECT_EQ(count(svg, "<polyline class=\"series\""), 1);
  EXPECT_EQ(count(svg, "<g class=\"legend\">"), 1);
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
}

TEST(Plot, SixCombosEndAtTheBudget) {
  auto cfg = make_preset("fig1");
  cfg.budgets = {500};
  cfg.replications = 2;
  for (auto& c : cfg.combos) c.budgets.clear();
  const fs::path dir = scratch("plot_six");
  write_results(run_experiment(cfg), dir / "fig1");
  const auto written = plot_summaries({dir / "fig1" / "summary.csv"}, dir / "plots");
  ASSERT_EQ(written.size(), 1u);
  const std::string svg = slurp(written[0]);
  EXPECT_EQ(count(svg, "<polyline class=\"series\""), 6);
  EXPECT_EQ(count(svg, "<g class=\"legend\">"), 6);

  // Every series ends at the same x coordinate.
  std::regex points("points=\"([^\"]*)\"");
  std::set<std::string> last_x;
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), points); it != std::sregex_iterator(); ++it) {
    const std::string pts = (*it)[1];
    const std::string last = pts.substr(pts.rfind(' ') + 1);
    last_x.insert(last.substr(0, last.find(',')));
  }
  EXPECT_EQ(last_x.size(), 1u);
}

TEST(Plot, MismatchedAxesNameBothFiles) {
  const fs::path dir = scratch("plot_mismatch");
  auto one = parse_config("budgets: [20]\nreplications: 1\nobjective:\n  kind: quadratic\n  dim: 4\ncombos:\n  - estimator: avg\n", "a.yaml");
  auto two = one;
  two.budgets = {24};
  write_results(run_experiment(one), dir / "a");
  write_results(run_experiment(two), dir / "b");
  try {
    plot_summaries({dir / "a" / "summary.csv", dir / "b" / "summary.csv"}, dir / "plots");
    FAIL();
  } catch (const zoq::ConfigError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find((dir / "a" / "summary.csv").string()), std::string::npos);
    EXPECT_NE(msg.find((dir / "b" / "summary.csv").string()), std::string::npos);
  }
  EXPECT_THROW(plot_summaries({}, dir / "plots"), zoq::ConfigError);
}

TEST(Cli, ExitCodes) {
  const fs::path dir = scratch("cli");
  const std::string minimal = (fs::path(ZOQ_SOURCE_DIR) / "configs" / "minimal.yaml").string();
  EXPECT_EQ(run_cli("run " + minimal + " -o " + (dir / "m1").string()), 0);
  EXPECT_EQ(run_cli("run " + minimal + " -o " + (dir / "m2").string() + " -j 1"), 0);
  for (const auto& name : {"align_full_K25_r0.csv", "align_full_K25_r1.csv", "summary.csv", "final.csv"}) {
    EXPECT_EQ(slurp(dir / "m1" / name), slurp(dir / "m2" / name)) << name;
  }

  std::ofstream(dir / "bad.yaml") << "budgets: [10]\nobjective:\n  kind: cube\ncombos:\n  - estimator: avg\n";
  EXPECT_EQ(run_cli("run " + (dir / "bad.yaml").string()), 2);
  EXPECT_EQ(run_cli("run " + (dir / "missing.yaml").string()), 2);
  EXPECT_EQ(run_cli("run --preset nope"), 2);
  EXPECT_EQ(run_cli("plot -o " + (dir / "p").string()), 2);
  EXPECT_EQ(run_cli("plot " + (dir / "m1" / "summary.csv").string() + " -o " + (dir / "p").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "p" / "m1_K25.svg"));
  EXPECT_EQ(run_cli("presets list"), 0);
  EXPECT_EQ(run_cli("frobnicate"), 2);
  EXPECT_EQ(run_cli("verify --quick"), 0);
  EXPECT_EQ(run_cli("verify --quick --force-failure"), 1);
}
