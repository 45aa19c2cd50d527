#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "zoq/bench/config.hpp"
#include "zoq/optimizer.hpp"

namespace zoq::bench {

enum class ReplicationStatus { Ok, Diverged, Failed };

std::string_view to_string(ReplicationStatus status);

struct ReplicationResult {
  int replication = 0;
  ReplicationStatus status = ReplicationStatus::Ok;
  std::string message;
  /// Partial for diverged replications; empty for failed ones.
  Trajectory trajectory;
};

/// One combo at one budget.
struct CellResult {
  std::string label;
  long budget = 0;
  std::vector<ReplicationResult> replications;
  /// Query-aligned mean over the successful replications.
  QueryAlignedCurve curve;

  int successes() const;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::string objective_name;
  std::vector<CellResult> cells;

  /// Labels ("label@K") of cells in which no replication succeeded.
  std::vector<std::string> failed_cells() const;
};

/// Builds the objective, validates every cell, then runs all replications on
/// a worker pool. Results are ordered by (combo, budget, replication) and do
/// not depend on the number of workers.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Same, on an already-built objective (which must match cfg.objective).
ExperimentResult run_experiment(const ExperimentConfig& cfg, const Objective& obj);

std::string trajectory_file_name(const std::string& label, long budget, int replication);

/// Writes <label>_K<budget>_r<replication>.csv per replication plus summary.csv and final.csv.
void write_results(const ExperimentResult& result, const std::filesystem::path& dir);

}  // namespace zoq::bench
