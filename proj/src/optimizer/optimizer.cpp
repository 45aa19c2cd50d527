#include "zoq/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <numeric>

namespace zoq {

AllocationSchedule AllocationSchedule::constant(int q, long budget) {
  AllocationSchedule s;
  s.kind = AllocationKind::ConstantQ;
  s.q = q;
  s.budget = budget;
  return s;
}

AllocationSchedule AllocationSchedule::single_query(long budget) {
  AllocationSchedule s;
  s.kind = AllocationKind::SingleQuery;
  s.budget = budget;
  return s;
}

AllocationSchedule AllocationSchedule::full_subspace(long budget) {
  AllocationSchedule s;
  s.kind = AllocationKind::FullSubspace;
  s.budget = budget;
  return s;
}

AllocationSchedule AllocationSchedule::custom_list(std::vector<int> qs, long budget) {
  AllocationSchedule s;
  s.kind = AllocationKind::Custom;
  s.custom = std::move(qs);
  s.budget = budget;
  return s;
}

int AllocationSchedule::nominal_q(int dim) const {
  switch (kind) {
    case AllocationKind::ConstantQ: return q;
    case AllocationKind::SingleQuery: return 1;
    case AllocationKind::FullSubspace: return dim;
    case AllocationKind::Custom: return custom.empty() ? 0 : custom.front();
  }
  return 0;
}

std::string AllocationSchedule::describe() const {
  switch (kind) {
    case AllocationKind::ConstantQ: return "constant(" + std::to_string(q) + ")";
    case AllocationKind::SingleQuery: return "single";
    case AllocationKind::FullSubspace: return "full";
    case AllocationKind::Custom: return "custom[" + std::to_string(custom.size()) + "]";
  }
  return "?";
}

std::vector<int> allocation_expand(const AllocationSchedule& sched, int dim) {
  if (dim < 1) throw ConfigError("allocation: dimension must be >= 1");
  if (sched.budget < 1) throw ConfigError("allocation: budget K must be >= 1");

  if (sched.kind == AllocationKind::Custom) {
    if (sched.custom.empty()) throw ConfigError("allocation: custom list is empty");
    long total = 0;
    for (std::size_t t = 0; t < sched.custom.size(); ++t) {
      const int q = sched.custom[t];
      if (q < 1 || q > dim) {
        throw ConfigError("allocation: custom q_" + std::to_string(t) + "=" + std::to_string(q) +
                          " outside [1, " + std::to_string(dim) + "]");
      }
      total += q;
    }
    if (total > sched.budget) {
      throw ConfigError("allocation: custom list spends " + std::to_string(total) +
                        " queries, budget is " + std::to_string(sched.budget));
    }
    return sched.custom;
  }

  const int block = sched.nominal_q(dim);
  if (block < 1 || block > dim) {
    throw ConfigError("allocation: block size " + std::to_string(block) + " outside [1, " +
                      std::to_string(dim) + "]");
  }
  std::vector<int> qs(static_cast<std::size_t>(sched.budget / block), block);
  if (const long rest = sched.budget % block; rest > 0) qs.push_back(static_cast<int>(rest));
  return qs;
}

std::string_view to_string(StepKind kind) {
  switch (kind) {
    case StepKind::AvgOptimal: return "avg_optimal";
    case StepKind::AlignOptimal: return "align_optimal";
    case StepKind::DiminishingSqrt: return "diminishing_sqrt";
  }
  return "?";
}

double StepPolicy::eta(long t, int q, int dim, double L) const {
  switch (kind) {
    case StepKind::AvgOptimal: return q / (L * (q + dim + 1.0));
    case StepKind::AlignOptimal: return 1.0 / L;
    case StepKind::DiminishingSqrt: return eta0 / std::sqrt(t + 1.0);
  }
  return 0.0;
}

std::string StepPolicy::describe() const {
  std::string s(to_string(kind));
  if (kind == StepKind::DiminishingSqrt) s += "(" + std::to_string(eta0) + ")";
  return s;
}

void validate_policy(const StepPolicy& policy, EstimatorKind kind, double L) {
  if (!(L > 0.0) || !std::isfinite(L)) throw ConfigError("smoothness constant L must be positive");
  switch (policy.kind) {
    case StepKind::AvgOptimal:
      if (kind == EstimatorKind::Align) {
        throw ConfigError("step policy avg_optimal requires the avg or single estimator");
      }
      break;
    case StepKind::AlignOptimal:
      if (kind != EstimatorKind::Align) {
        throw ConfigError("step policy align_optimal requires the align estimator");
      }
      break;
    case StepKind::DiminishingSqrt:
      if (!(policy.eta0 > 0.0)) throw ConfigError("diminishing_sqrt: eta0 must be positive");
      if (policy.eta0 > (1.0 + 1e-12) / (4.0 * L)) {
        throw ConfigError("diminishing_sqrt: eta0=" + std::to_string(policy.eta0) +
                          " exceeds 1/(4L)=" + std::to_string(1.0 / (4.0 * L)));
      }
      break;
  }
}

double averaging_weight(EstimatorKind kind, double eta, int q, int dim) {
  if (kind == EstimatorKind::Align) return eta * q / dim;
  return eta * (dim + 1.0 - q) / q;
}

void WeightedAverager::add(const Vec& x, double weight) {
  sum_ += weight * x;
  total_ += weight;
}

Vec WeightedAverager::mean() const {
  if (!(total_ > 0.0)) throw NumericalError("weighted average has no positive weight");
  return sum_ / total_;
}

namespace {

struct Step {
  GradientEstimate est;
  double sample_value = std::numeric_limits<double>::quiet_NaN();
};

using StepFn = std::function<Step(const Vec& x, const EstimatorConfig& cfg)>;

void fill_measurements(const Objective& obj, const Vec& x, bool log_gradient,
                       std::optional<double> lower, TrajectoryRow& row) {
  row.f_value = obj.value(x);
  if (lower) row.gap = row.f_value - *lower;
  if (log_gradient && obj.has_gradient()) row.grad_norm2 = obj.gradient(x).squaredNorm();
}

Trajectory run_loop(const Objective& obj, EstimatorConfig est_cfg, const AllocationSchedule& sched,
                    const StepPolicy& policy, const Vec& x0, const RunOptions& options,
                    bool average, const StepFn& step) {
  const int d = obj.dim();
  require_dim(x0, d, "run");
  if (!all_finite(x0)) throw InvalidArgument("run: x0 has non-finite entries");
  const double L = obj.smoothness();
  validate_policy(policy, est_cfg.kind, L);
  if (sched.kind != AllocationKind::Custom && sched.budget < sched.nominal_q(d)) {
    throw ConfigError("budget K=" + std::to_string(sched.budget) +
                      " is smaller than one block of " + std::to_string(sched.nominal_q(d)) +
                      " queries");
  }
  const std::vector<int> qs = allocation_expand(sched, d);
  if (est_cfg.kind == EstimatorKind::Single &&
      std::any_of(qs.begin(), qs.end(), [](int q) { return q != 1; })) {
    throw ConfigError("the single-query estimator needs q_t = 1 at every iteration");
  }

  const std::optional<double> lower = obj.lower_bound();
  Trajectory traj;
  traj.rows.reserve(qs.size() + 1);
  TrajectoryRow row0;
  fill_measurements(obj, x0, options.log_gradient, lower, row0);
  if (!std::isfinite(row0.f_value)) throw EvaluationError("f(x0) is not finite", x0);
  traj.rows.push_back(row0);

  const double f0 = row0.f_value;
  const double tiny = std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(f0));
  const double limit = lower ? options.divergence_factor * std::max(row0.gap, tiny)
                             : options.divergence_factor * std::max(std::abs(f0), 1.0);

  WeightedAverager averager(d);
  Vec x = x0;
  long cum = 0;
  long raw = 0;

  auto diverge = [&](const std::string& why) -> DivergenceError {
    traj.x_final = x;
    return DivergenceError("run diverged at iteration " + std::to_string(traj.rows.size() - 1) +
                               ": " + why,
                           traj, x);
  };

  for (std::size_t t = 0; t < qs.size(); ++t) {
    est_cfg.q = qs[t];
    const double eta = policy.eta(static_cast<long>(t), qs[t], d, L);
    Step s;
    try {
      s = step(x, est_cfg);
    } catch (const EvaluationError& e) {
      throw diverge(e.what());
    }
    if (average) averager.add(x, averaging_weight(est_cfg.kind, eta, qs[t], d));
    Vec next = x - eta * s.est.g_hat;
    if (!all_finite(next)) throw diverge("iterate became non-finite");

    cum += qs[t];
    raw += s.est.queries_used;
    TrajectoryRow row;
    row.t = static_cast<long>(t) + 1;
    row.q = qs[t];
    row.cum_queries = cum;
    row.raw_evals = raw;
    row.eta = eta;
    row.sample_value = s.sample_value;
    fill_measurements(obj, next, options.log_gradient, lower, row);
    if (!std::isfinite(row.f_value)) throw diverge("objective value became non-finite");
    const double excess = lower ? row.gap : std::abs(row.f_value);
    if (excess > limit) {
      traj.rows.push_back(row);
      throw diverge("objective left the divergence bound");
    }
    traj.rows.push_back(row);
    x = std::move(next);
  }

  traj.x_final = x;
  if (average) {
    traj.x_avg = averager.mean();
    traj.f_avg = obj.value(traj.x_avg);
    if (lower) traj.gap_avg = traj.f_avg - *lower;
  }
  return traj;
}

}  // namespace

Trajectory run_deterministic(const Objective& obj, const EstimatorConfig& est_cfg,
                             const AllocationSchedule& sched, const StepPolicy& policy,
                             const Vec& x0, SeededRng& rng, const RunOptions& options) {
  return run_loop(obj, est_cfg, sched, policy, x0, options, false,
                  [&](const Vec& x, const EstimatorConfig& cfg) {
                    return Step{estimate(obj, x, cfg, rng)};
                  });
}

Trajectory run_stochastic(const StochasticObjective& obj, const EstimatorConfig& est_cfg,
                          const AllocationSchedule& sched, const StepPolicy& policy,
                          const Vec& x0, SeededRng& rng, const RunOptions& options) {
  if (policy.kind != StepKind::DiminishingSqrt) {
    throw ConfigError("stochastic runs use the diminishing_sqrt step policy");
  }
  SeededRng keys = rng.derive(kBatchKeyStream);
  return run_loop(obj, est_cfg, sched, policy, x0, options, true,
                  [&](const Vec& x, const EstimatorConfig& cfg) {
                    const std::unique_ptr<Objective> batch = obj.realization(keys.next_u64());
                    Step s{estimate(*batch, x, cfg, rng)};
                    s.sample_value = batch->value(x);
                    return s;
                  });
}

QueryAlignedCurve average_on_queries(const std::vector<Trajectory>& runs) {
  QueryAlignedCurve curve;
  curve.replications = static_cast<int>(runs.size());
  if (runs.empty()) return curve;

  for (const auto& run : runs) {
    for (const auto& row : run.rows) curve.cum_queries.push_back(row.cum_queries);
  }
  std::sort(curve.cum_queries.begin(), curve.cum_queries.end());
  curve.cum_queries.erase(std::unique(curve.cum_queries.begin(), curve.cum_queries.end()),
                          curve.cum_queries.end());

  const std::size_t n = curve.cum_queries.size();
  curve.mean_f.assign(n, 0.0);
  curve.mean_gap.assign(n, 0.0);
  curve.stderr_gap.assign(n, 0.0);
  std::vector<double> m2(n, 0.0);

  // Welford updates in replication order.
  double count = 0.0;
  for (const auto& run : runs) {
    count += 1.0;
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
      while (k + 1 < run.rows.size() && run.rows[k + 1].cum_queries <= curve.cum_queries[i]) ++k;
      const TrajectoryRow& row = run.rows[k];
      curve.mean_f[i] += (row.f_value - curve.mean_f[i]) / count;
      const double delta = row.gap - curve.mean_gap[i];
      curve.mean_gap[i] += delta / count;
      m2[i] += delta * (row.gap - curve.mean_gap[i]);
    }
  }
  if (count > 1.0) {
    for (std::size_t i = 0; i < n; ++i) curve.stderr_gap[i] = std::sqrt(m2[i] / (count - 1.0) / count);
  }
  return curve;
}

}  // namespace zoq
