#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "zoq/core.hpp"
#include "zoq/estimators.hpp"
#include "zoq/optimizer.hpp"

namespace zoq::bench {

enum class ObjectiveKind { Quadratic, Logistic, Rosenbrock, StochasticLogistic };

std::string_view to_string(ObjectiveKind kind);

struct ObjectiveConfig {
  ObjectiveKind kind = ObjectiveKind::Quadratic;
  int dim = 20;
  /// Quadratic: A = MᵀM + eps·I.
  double eps = 1.0;
  /// Logistic: number of examples; 0 means 10·dim.
  int samples = 0;
  /// Stochastic logistic.
  int batch_size = 10;
  double rho = 0.1;
  /// Data/instance seed; unset means the experiment seed.
  std::optional<std::uint64_t> seed;
};

enum class ScheduleKind { Constant, Single, Full, Custom };

struct ComboConfig {
  std::string label;
  EstimatorKind estimator = EstimatorKind::Align;
  EstimatorMode mode = EstimatorMode::FiniteDifference;
  std::optional<double> smoothing;
  ScheduleKind schedule = ScheduleKind::Constant;
  int q = 1;
  std::vector<int> custom;
  /// Unset picks the step rule matching the estimator (diminishing for
  /// stochastic objectives).
  std::optional<StepKind> step;
  /// Diminishing rule only; unset means 1/(4L).
  std::optional<double> eta0;
  /// Restricts the combo to these budgets; empty means all.
  std::vector<long> budgets;
  /// Source line in the config file (1-based), 0 when built in code.
  int line = 0;

  bool runs_at(long budget) const;
  AllocationSchedule schedule_for(long budget) const;
  EstimatorConfig estimator_config() const;
};

struct ExperimentConfig {
  std::string name = "experiment";
  /// File the config came from, used in error messages.
  std::string source = "<config>";
  std::uint64_t seed = 1;
  int replications = 10;
  std::vector<long> budgets;
  std::filesystem::path output_dir = "out";
  ObjectiveConfig objective;
  std::vector<ComboConfig> combos;
  /// Worker threads; 0 means hardware concurrency.
  int threads = 0;

  std::uint64_t objective_seed() const { return objective.seed.value_or(seed); }
};

/// Parses YAML text. Errors are ConfigError with "<source>:<line>: ..." text.
ExperimentConfig parse_config(const std::string& text, const std::string& source = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

/// Replaces the seed with $ZOQ_SEED when it is set. Throws ConfigError on a
/// malformed value.
void apply_seed_override(ExperimentConfig& cfg);

/// Structural checks plus optimizer preconditions for every (combo, budget)
/// cell, done before anything runs.
void validate(const ExperimentConfig& cfg, const Objective& obj);

std::unique_ptr<Objective> build_objective(const ObjectiveConfig& cfg, std::uint64_t seed);

/// Starting point for replication r: N(0, I) from a per-replication stream,
/// shared by every combo; the standard start for Rosenbrock.
Vec initial_point(const ExperimentConfig& cfg, int replication);

/// Step rule for a combo on obj (resolves the defaults).
StepPolicy resolve_policy(const ComboConfig& combo, const Objective& obj, bool stochastic);

}  // namespace zoq::bench
