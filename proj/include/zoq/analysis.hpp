#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "zoq/core.hpp"
#include "zoq/estimators.hpp"
#include "zoq/objectives.hpp"
#include "zoq/optimizer.hpp"

namespace zoq {

/// Welford accumulator; merge() combines partial results (Chan et al.).
class RunningStats {
 public:
  void add(double v);
  void merge(const RunningStats& other);

  long count() const { return n_; }
  double mean() const { return mean_; }
  /// Unbiased sample variance; 0 for fewer than two samples.
  double variance() const;
  double stderr_mean() const;

 private:
  long n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

/// Coordinate-wise RunningStats over vectors.
class VectorStats {
 public:
  explicit VectorStats(int dim) : mean_(Vec::Zero(dim)), m2_(Vec::Zero(dim)) {}
  void add(const Vec& v);
  void merge(const VectorStats& other);

  long count() const { return n_; }
  const Vec& mean() const { return mean_; }
  Vec stderr_mean() const;

 private:
  long n_ = 0;
  Vec mean_;
  Vec m2_;
};

/// E‖ĝ − ∇f‖²: (d+1)/q·‖g‖² for Avg (and Single, q = 1), (d−q)/d·‖g‖² for Align.
double mse_closed_form(EstimatorKind kind, int dim, int q, double g_norm2);
/// E‖ĝ‖²: (q+d+1)/q·‖g‖² for Avg, q/d·‖g‖² for Align.
double second_moment_closed_form(EstimatorKind kind, int dim, int q, double g_norm2);
/// E[ĝ] = factor·∇f: 1 for Avg, q/d for Align.
double mean_factor(EstimatorKind kind, int dim, int q);

struct MomentReport {
  EstimatorKind kind = EstimatorKind::Avg;
  int dim = 0;
  int q = 0;
  long samples = 0;
  double g_norm2 = 0.0;

  Vec mean;
  Vec mean_stderr;
  Vec mean_target;
  /// max_i |mean_i − target_i| / stderr_i.
  double mean_max_abs_z = 0.0;

  double mse = 0.0;
  double mse_stderr = 0.0;
  double mse_closed = 0.0;
  double mse_z = 0.0;

  double norm2_mean = 0.0;
  double norm2_stderr = 0.0;
  double norm2_closed = 0.0;
  double norm2_z = 0.0;
};

/// (empirical − target)/stderr, with 0/0 read as agreement.
double z_score(double empirical, double target, double stderr_value);

inline constexpr long kMinMonteCarloSamples = 1000;

/// Idealized-mode moments of the estimator over `samples` fresh blocks.
/// Work is split into fixed chunks on derived streams and merged in chunk
/// order, so results do not depend on the thread count.
MomentReport mse_monte_carlo(EstimatorKind kind, const Objective& obj, const Vec& x, int q,
                             long samples, SeededRng& rng);

/// Right-hand sides of the convergence guarantees, one per setting.
enum class BoundKind {
  AvgStronglyConvex,    // gap₀·∏(1 − μq_t/(L(q_t+d+1)))
  AlignStronglyConvex,  // gap₀·∏(1 − μq_t/(Ld))
  AvgConvex,            // L(D + 2gap₀/L) / Σ 2q_t/(q_t+d+1)
  AlignConvex,          // d(LD + 2gap₀) / (2Σq_t)
  AvgNonconvex,         // 2L·gap₀ / Σ q_t/(q_t+d+1), bounds min_t ‖∇f(x_t)‖²
  AlignNonconvex,       // 2Ld·gap₀ / Σ q_t, bounds the average of ‖∇f(x_t)‖²
  AvgStochastic,        // weighted-average iterate, η_t = η₀/√(t+1)
  AlignStochastic,
};

std::string_view to_string(BoundKind kind);

struct BoundConstants {
  int dim = 0;
  double L = 0.0;
  std::optional<double> mu;
  /// f(x₀) − f*, or f(x₀) minus a lower bound for the non-convex forms.
  std::optional<double> gap0;
  /// ‖x₀ − x*‖² (any comparator point for the convex forms).
  std::optional<double> dist0_sq;
  std::optional<double> sigma2;
  std::optional<double> eta0;
};

/// Fills mu, gap0, dist0_sq and sigma2 from whatever obj knows.
BoundConstants bound_constants_for(const Objective& obj, const Vec& x0);

struct BoundCurve {
  BoundKind kind = BoundKind::AlignStronglyConvex;
  /// values[t] bounds the quantity after t iterations. Sum-based forms are
  /// +inf at t = 0.
  std::vector<double> values;
};

/// Throws ConfigError naming the first missing constant.
BoundCurve bound_curve(BoundKind kind, const BoundConstants& c, std::span<const int> qs);

struct FitWindow {
  /// Leading fraction of points treated as transient.
  double skip_fraction = 0.1;
  /// Points at or after the first value below this are dropped.
  double floor = 1e-12;
};

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  int points = 0;
};

/// Least-squares slope of log(y) against x over all points. FitError on a
/// non-positive y or fewer than two points.
RateFit fit_log_linear(std::span<const double> x, std::span<const double> y);

enum class RateAxis { Queries, Iterations };

/// Slope of log(mean gap) against cumulative queries (or iterations) for
/// replications that share one schedule, inside the window.
RateFit fit_log_linear_rate(const std::vector<Trajectory>& runs, RateAxis axis = RateAxis::Queries,
                            const FitWindow& window = {});

/// Monte Carlo view of E_ξ‖∇F(x, ξ)‖² against 4L(f(x) − f*) + 2σ², with f the
/// expected objective.
struct StochasticGradientCheck {
  long batches = 0;
  double mean_sq_norm = 0.0;
  double stderr_sq_norm = 0.0;
  double rhs = 0.0;
};

StochasticGradientCheck check_stochastic_gradient_bound(const StochasticLogisticObjective& obj,
                                                        const Vec& x, double sigma2, long batches,
                                                        SeededRng& rng);

/// Monte Carlo E_ξ‖∇F(x, ξ) − ∇f(x)‖² with its standard error.
struct VarianceEstimate {
  double value = 0.0;
  double stderr_value = 0.0;
};

VarianceEstimate estimate_gradient_variance(const StochasticLogisticObjective& obj, const Vec& x,
                                            long batches, SeededRng& rng);

/// Runs fn(chunk) for chunk in [0, chunks) on a pool of worker threads
/// (threads = 0 means hardware concurrency). The first exception is rethrown.
void parallel_for_chunks(int chunks, const std::function<void(int)>& fn, int threads = 0);

}  // namespace zoq
