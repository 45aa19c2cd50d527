#pragma once

#include <optional>
#include <string_view>

#include "zoq/core.hpp"

namespace zoq {

enum class EstimatorKind { Single, Avg, Align };
enum class EstimatorMode {
  /// Forward differences (f(x + h·u) − f(x)) / h from real value queries.
  FiniteDifference,
  /// Exact directional derivatives uᵀ∇f(x) from the gradient oracle.
  Idealized,
};

std::string_view to_string(EstimatorKind kind);
std::string_view to_string(EstimatorMode mode);

struct EstimatorConfig {
  EstimatorKind kind = EstimatorKind::Align;
  int q = 1;
  /// Finite-difference step. Unset means 1e-6·(1 + ‖x‖).
  std::optional<double> smoothing;
  EstimatorMode mode = EstimatorMode::FiniteDifference;
};

struct GradientEstimate {
  Vec g_hat;
  EstimatorKind kind = EstimatorKind::Align;
  int q = 0;
  double smoothing = 0.0;
  /// q perturbed points plus the shared base value f(x).
  int queries_used = 0;
  /// Measured directional derivatives, one per block column.
  Vec dir_derivs;
};

/// Blocks whose condition estimate exceeds this are rejected by ZO-Align.
inline constexpr double kDegenerateCondition = 1e8;

double default_smoothing(const Vec& x);

/// Single-direction estimate ((f(x + h·u) − f(x)) / h)·u.
GradientEstimate estimate_single(const Objective& obj, const Vec& x, const EstimatorConfig& cfg,
                                 SeededRng& rng);
/// ZO-Avg: (1/q) Σ_i s_i·u_i over one fresh block.
GradientEstimate estimate_avg(const Objective& obj, const Vec& x, const EstimatorConfig& cfg,
                              SeededRng& rng);
/// ZO-Align: ĝ = U(UᵀU)⁻¹s, the minimum-norm ĝ with Uᵀĝ = s. Resamples a
/// degenerate block once, then throws DegenerateBlockError.
GradientEstimate estimate_align(const Objective& obj, const Vec& x, const EstimatorConfig& cfg,
                                SeededRng& rng);
/// Dispatches on cfg.kind.
GradientEstimate estimate(const Objective& obj, const Vec& x, const EstimatorConfig& cfg,
                          SeededRng& rng);

/// Estimate from a caller-supplied block (no resampling). base_value, when
/// given, is reused as f(x).
GradientEstimate estimate_with_block(const Objective& obj, const Vec& x, const EstimatorConfig& cfg,
                                     const DirectionBlock& block,
                                     std::optional<double> base_value = std::nullopt);

/// Directional derivatives s_i for every column of the block.
Vec directional_derivatives(const Objective& obj, const Vec& x, const DirectionBlock& block,
                            EstimatorMode mode, double smoothing,
                            std::optional<double> base_value = std::nullopt);

/// Minimum-norm solution of Uᵀg = s through a column-pivoted QR of U.
/// condition receives |R_00| / |R_qq|.
Vec align_solve(const Matrix& U, const Vec& s, double* condition = nullptr);

/// max_i |u_iᵀĝ − s_i|.
double projection_residual(const GradientEstimate& est, const DirectionBlock& block);

}  // namespace zoq
