#include "zoq/bench/runner.hpp"

#include <algorithm>

#include "zoq/analysis.hpp"
#include "zoq/bench/csv.hpp"

namespace zoq::bench {

std::string_view to_string(ReplicationStatus status) {
  switch (status) {
    case ReplicationStatus::Ok: return "ok";
    case ReplicationStatus::Diverged: return "diverged";
    case ReplicationStatus::Failed: return "failed";
  }
  return "?";
}

int CellResult::successes() const {
  return static_cast<int>(std::count_if(replications.begin(), replications.end(), [](const auto& r) {
    return r.status == ReplicationStatus::Ok;
  }));
}

std::vector<std::string> ExperimentResult::failed_cells() const {
  std::vector<std::string> out;
  for (const auto& cell : cells) {
    if (cell.successes() == 0) out.push_back(cell.label + "@" + std::to_string(cell.budget));
  }
  return out;
}

namespace {

constexpr std::uint64_t kRunStream = 0x7a11;

std::uint64_t label_hash(const std::string& label) {
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a
  for (unsigned char c : label) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

struct Task {
  std::size_t cell;
  int replication;
};

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  const auto obj = build_objective(cfg.objective, cfg.objective_seed());
  return run_experiment(cfg, *obj);
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const Objective& obj) {
  validate(cfg, obj);
  const auto* stochastic = dynamic_cast<const StochasticObjective*>(&obj);
  const bool is_stochastic = cfg.objective.kind == ObjectiveKind::StochasticLogistic;
  if (is_stochastic && !stochastic) throw ConfigError("objective is not stochastic");

  ExperimentResult result;
  result.config = cfg;
  result.objective_name = obj.name();

  struct CellPlan {
    const ComboConfig* combo;
    long budget;
  };
  std::vector<CellPlan> plan;
  for (const auto& combo : cfg.combos) {
    for (long k : cfg.budgets) {
      if (!combo.runs_at(k)) continue;
      plan.push_back({&combo, k});
      CellResult cell;
      cell.label = combo.label;
      cell.budget = k;
      cell.replications.resize(static_cast<std::size_t>(cfg.replications));
      result.cells.push_back(std::move(cell));
    }
  }

  std::vector<Task> tasks;
  for (std::size_t c = 0; c < plan.size(); ++c) {
    for (int r = 0; r < cfg.replications; ++r) tasks.push_back({c, r});
  }

  parallel_for_chunks(
      static_cast<int>(tasks.size()),
      [&](int i) {
        const Task& task = tasks[static_cast<std::size_t>(i)];
        const CellPlan& cell = plan[task.cell];
        ReplicationResult& out = result.cells[task.cell].replications[static_cast<std::size_t>(task.replication)];
        out.replication = task.replication;

        SeededRng rng = SeededRng(cfg.seed, kRunStream)
                            .derive(static_cast<std::uint64_t>(task.replication))
                            .derive(static_cast<std::uint64_t>(cell.budget))
                            .derive(label_hash(cell.combo->label));
        const Vec x0 = initial_point(cfg, task.replication);
        const StepPolicy policy = resolve_policy(*cell.combo, obj, is_stochastic);
        const AllocationSchedule sched = cell.combo->schedule_for(cell.budget);
        const EstimatorConfig est = cell.combo->estimator_config();
        try {
          out.trajectory = is_stochastic ? run_stochastic(*stochastic, est, sched, policy, x0, rng)
                                         : run_deterministic(obj, est, sched, policy, x0, rng);
          out.status = ReplicationStatus::Ok;
        } catch (const DivergenceError& e) {
          out.status = ReplicationStatus::Diverged;
          out.message = e.what();
          out.trajectory = e.partial();
        } catch (const ConfigError&) {
          throw;
        } catch (const Error& e) {
          out.status = ReplicationStatus::Failed;
          out.message = e.what();
        }
      },
      cfg.threads);

  for (auto& cell : result.cells) {
    std::vector<Trajectory> ok;
    for (const auto& rep : cell.replications) {
      if (rep.status == ReplicationStatus::Ok) ok.push_back(rep.trajectory);
    }
    cell.curve = average_on_queries(ok);
  }
  return result;
}

std::string trajectory_file_name(const std::string& label, long budget, int replication) {
  return label + "_K" + std::to_string(budget) + "_r" + std::to_string(replication) + ".csv";
}

void write_results(const ExperimentResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto& f = format_double;

  for (const auto& cell : result.cells) {
    for (const auto& rep : cell.replications) {
      CsvWriter w(dir / trajectory_file_name(cell.label, cell.budget, rep.replication), kTrajectoryColumns);
      for (const auto& row : rep.trajectory.rows) {
        w.row({std::to_string(rep.replication), std::to_string(row.t), std::to_string(row.q),
               std::to_string(row.cum_queries), f(row.eta), f(row.f_value), f(row.gap),
               f(row.grad_norm2)});
      }
      w.close();
    }
  }

  CsvWriter summary(dir / "summary.csv", kSummaryColumns);
  for (const auto& cell : result.cells) {
    const auto& c = cell.curve;
    for (std::size_t i = 0; i < c.cum_queries.size(); ++i) {
      summary.row({cell.label, std::to_string(cell.budget), std::to_string(c.cum_queries[i]),
                   f(c.mean_f[i]), f(c.mean_gap[i]), f(c.stderr_gap[i]),
                   std::to_string(c.replications)});
    }
  }
  summary.close();

  CsvWriter final_csv(dir / "final.csv", kFinalColumns);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& cell : result.cells) {
    for (const auto& rep : cell.replications) {
      const auto& rows = rep.trajectory.rows;
      const TrajectoryRow last = rows.empty() ? TrajectoryRow{} : rows.back();
      const bool have = !rows.empty();
      final_csv.row({cell.label, std::to_string(cell.budget), std::to_string(rep.replication),
                     std::string(to_string(rep.status)), std::to_string(last.t),
                     std::to_string(last.cum_queries), std::to_string(last.raw_evals),
                     f(have ? last.f_value : nan), f(have ? last.gap : nan),
                     f(have ? last.grad_norm2 : nan), f(rep.trajectory.f_avg),
                     f(rep.trajectory.gap_avg)});
    }
  }
  final_csv.close();
}

}  // namespace zoq::bench
