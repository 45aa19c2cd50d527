// zoq: run experiment sweeps, verify estimator moments, plot summaries.

#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "zoq/bench/config.hpp"
#include "zoq/bench/presets.hpp"
#include "zoq/bench/runner.hpp"
#include "zoq/bench/svg.hpp"
#include "zoq/bench/verify.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kUsage = 2;

int cmd_run(const std::string& config_path, const std::string& preset, bool paper_scale,
            const std::string& output, int threads) {
  using namespace zoq::bench;
  ExperimentConfig cfg;
  if (!preset.empty()) {
    cfg = make_preset(preset, paper_scale);
  } else {
    cfg = load_config(config_path);
  }
  apply_seed_override(cfg);
  if (!output.empty()) cfg.output_dir = output;
  if (threads > 0) cfg.threads = threads;

  const ExperimentResult result = run_experiment(cfg);
  write_results(result, cfg.output_dir);

  std::size_t files = 0;
  for (const auto& cell : result.cells) files += cell.replications.size();
  std::cout << "wrote " << files << " trajectory files, summary.csv and final.csv to "
            << cfg.output_dir.string() << '\n';
  for (const auto& cell : result.cells) {
    std::cout << "  " << cell.label << " K=" << cell.budget << ": " << cell.successes() << '/'
              << cell.replications.size() << " replications ok";
    if (!cell.curve.mean_f.empty()) std::cout << ", final mean f " << cell.curve.mean_f.back();
    std::cout << '\n';
    for (const auto& rep : cell.replications) {
      if (rep.status != ReplicationStatus::Ok) {
        std::cout << "    replication " << rep.replication << " " << to_string(rep.status) << ": "
                  << rep.message << '\n';
      }
    }
  }
  const auto failed = result.failed_cells();
  if (!failed.empty()) {
    std::cerr << "every replication failed in:";
    for (const auto& f : failed) std::cerr << ' ' << f;
    std::cerr << '\n';
    return kFailure;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"zeroth-order optimization benchmark"};
  app.require_subcommand(1);

  std::string config_path;
  std::string preset;
  std::string output;
  bool paper_scale = false;
  int threads = 0;
  auto* run = app.add_subcommand("run", "run an experiment config or a named preset");
  run->add_option("config", config_path, "YAML experiment file");
  run->add_option("--preset", preset, "named preset instead of a config file");
  run->add_flag("--paper-scale", paper_scale, "preset at d=1000, K=20000/500");
  run->add_option("-o,--output", output, "output directory (overrides the config)");
  run->add_option("-j,--threads", threads, "worker threads (default: all cores)");

  bool quick = false;
  bool force_failure = false;
  auto* verify = app.add_subcommand("verify", "Monte Carlo check of estimator moments and bounds");
  verify->add_flag("--quick", quick, "10^4 samples instead of 10^5");
  verify->add_flag("--force-failure", force_failure, "negative control: wrong constant d+2");
  verify->add_option("-j,--threads", threads, "worker threads");

  std::vector<std::string> summaries;
  std::string plot_dir = "plots";
  auto* plot = app.add_subcommand("plot", "SVG line plots from summary.csv files");
  plot->add_option("summaries", summaries, "summary CSV files");
  plot->add_option("-o,--output", plot_dir, "output directory");

  auto* presets = app.add_subcommand("presets", "named experiments");
  auto* presets_list = presets->add_subcommand("list", "list presets");
  presets->require_subcommand(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (run->parsed()) {
      if (config_path.empty() == preset.empty()) {
        std::cerr << "zoq run: give either a config file or --preset\n";
        return kUsage;
      }
      if (paper_scale && preset.empty()) {
        std::cerr << "zoq run: --paper-scale applies to presets only\n";
        return kUsage;
      }
      return cmd_run(config_path, preset, paper_scale, output, threads);
    }
    if (verify->parsed()) {
      zoq::bench::VerifyOptions opts;
      opts.quick = quick;
      opts.inject_wrong_constant = force_failure;
      opts.threads = threads;
      const auto report = zoq::bench::run_verify(opts);
      zoq::bench::print_verify_report(report, std::cout);
      return report.all_pass() ? kOk : kFailure;
    }
    if (plot->parsed()) {
      if (summaries.empty()) {
        std::cerr << "usage: zoq plot <summary.csv>... -o <dir>\n";
        return kUsage;
      }
      std::vector<std::filesystem::path> inputs(summaries.begin(), summaries.end());
      for (const auto& p : zoq::bench::plot_summaries(inputs, plot_dir)) std::cout << p.string() << '\n';
      return kOk;
    }
    if (presets_list->parsed()) {
      for (const auto& p : zoq::bench::list_presets()) {
        std::cout << p.name << "\t" << p.description << '\n';
      }
      return kOk;
    }
  } catch (const zoq::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kUsage;
}
