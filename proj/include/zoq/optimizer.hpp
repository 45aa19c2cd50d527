#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "zoq/core.hpp"
#include "zoq/estimators.hpp"

namespace zoq {

enum class AllocationKind { ConstantQ, SingleQuery, FullSubspace, Custom };

/// How a total budget of K paper queries is split across iterations.
struct AllocationSchedule {
  AllocationKind kind = AllocationKind::ConstantQ;
  int q = 1;  // ConstantQ only
  long budget = 0;
  std::vector<int> custom;  // Custom only

  static AllocationSchedule constant(int q, long budget);
  static AllocationSchedule single_query(long budget);
  static AllocationSchedule full_subspace(long budget);
  static AllocationSchedule custom_list(std::vector<int> qs, long budget);

  /// Nominal block size: q for ConstantQ, 1 for SingleQuery, d for FullSubspace,
  /// the first entry for Custom.
  int nominal_q(int dim) const;
  std::string describe() const;
};

/// Per-iteration q_t. When K is not a multiple of the block size the last
/// iteration spends the remainder, e.g. FullSubspace K=10, d=4 → [4, 4, 2].
std::vector<int> allocation_expand(const AllocationSchedule& sched, int dim);

enum class StepKind { AvgOptimal, AlignOptimal, DiminishingSqrt };

struct StepPolicy {
  StepKind kind = StepKind::AlignOptimal;
  double eta0 = 0.0;  // DiminishingSqrt only

  static StepPolicy avg_optimal() { return {StepKind::AvgOptimal, 0.0}; }
  static StepPolicy align_optimal() { return {StepKind::AlignOptimal, 0.0}; }
  static StepPolicy diminishing_sqrt(double eta0) { return {StepKind::DiminishingSqrt, eta0}; }

  /// AvgOptimal q/(L(q+d+1)), AlignOptimal 1/L, DiminishingSqrt η₀/√(t+1).
  double eta(long t, int q, int dim, double L) const;
  std::string describe() const;
};

std::string_view to_string(StepKind kind);

/// Throws ConfigError when the policy does not fit the estimator or the
/// constants (AvgOptimal needs Avg/Single, AlignOptimal needs Align,
/// DiminishingSqrt needs 0 < η₀ ≤ 1/(4L)).
void validate_policy(const StepPolicy& policy, EstimatorKind kind, double L);

/// State after t iterations. Row 0 is the starting point (q_t = 0, η_t = 0).
struct TrajectoryRow {
  long t = 0;
  int q = 0;
  long cum_queries = 0;
  /// Σ(q_t + 1): every estimate also evaluates f at the base point.
  long raw_evals = 0;
  double eta = 0.0;
  double f_value = 0.0;
  /// f − f* (or f minus the known lower bound); NaN when neither is known.
  double gap = std::numeric_limits<double>::quiet_NaN();
  /// ‖∇f(x_t)‖² from the oracle; NaN without one.
  double grad_norm2 = std::numeric_limits<double>::quiet_NaN();
  /// Stochastic runs: mini-batch loss F(x_{t−1}, ξ_{t−1}) seen by the step
  /// that produced this row. NaN otherwise.
  double sample_value = std::numeric_limits<double>::quiet_NaN();
};

struct Trajectory {
  std::vector<TrajectoryRow> rows;
  Vec x_final;
  /// Stochastic runs only: weighted average of x_0 … x_{T−1} and its value.
  Vec x_avg;
  double f_avg = std::numeric_limits<double>::quiet_NaN();
  double gap_avg = std::numeric_limits<double>::quiet_NaN();

  long iterations() const { return rows.empty() ? 0 : rows.back().t; }
};

/// A run left the finite or bounded region. Carries everything logged so far.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, Trajectory partial, Vec last_finite)
      : Error(what), partial_(std::move(partial)), last_finite_(std::move(last_finite)) {}
  const Trajectory& partial() const { return partial_; }
  const Vec& last_finite() const { return last_finite_; }

 private:
  Trajectory partial_;
  Vec last_finite_;
};

struct RunOptions {
  /// Abort once the gap exceeds this multiple of the starting gap (or |f| of
  /// max(|f(x0)|, 1) when no lower bound is known).
  double divergence_factor = 1e6;
  bool log_gradient = true;
};

/// x_{t+1} = x_t − η_t ĝ(x_t) until the budget is spent. A fresh direction
/// block is drawn from rng at every iteration.
Trajectory run_deterministic(const Objective& obj, const EstimatorConfig& est_cfg,
                             const AllocationSchedule& sched, const StepPolicy& policy,
                             const Vec& x0, SeededRng& rng, const RunOptions& options = {});

/// Stream (derived from the run rng) that supplies mini-batch keys.
inline constexpr std::uint64_t kBatchKeyStream = 0xba7c4;

/// Each iteration draws a batch key ξ_t and estimates from F(·, ξ_t). Direction
/// blocks come from rng in the same order as run_deterministic, so a
/// fixed-batch objective reproduces the deterministic run on that batch.
/// f_value/gap/grad_norm2 are measured on obj itself.
Trajectory run_stochastic(const StochasticObjective& obj, const EstimatorConfig& est_cfg,
                          const AllocationSchedule& sched, const StepPolicy& policy,
                          const Vec& x0, SeededRng& rng, const RunOptions& options = {});

/// α_t = η_t(d+1−q_t)/q_t for Avg/Single, η_t q_t/d for Align.
double averaging_weight(EstimatorKind kind, double eta, int q, int dim);

/// Streaming Σα_t x_t / Σα_t.
class WeightedAverager {
 public:
  explicit WeightedAverager(int dim) : sum_(Vec::Zero(dim)) {}
  void add(const Vec& x, double weight);
  Vec mean() const;
  double total_weight() const { return total_; }

 private:
  Vec sum_;
  double total_ = 0.0;
};

/// Pointwise mean of replications on a common cumulative-query axis. Between
/// its own iterations a run holds its last value.
struct QueryAlignedCurve {
  std::vector<long> cum_queries;
  std::vector<double> mean_f;
  std::vector<double> mean_gap;
  std::vector<double> stderr_gap;
  int replications = 0;
};

QueryAlignedCurve average_on_queries(const std::vector<Trajectory>& runs);

}  // namespace zoq
