#include "zoq/estimators.hpp"

#include <cmath>
#include <string>

#include <Eigen/QR>

namespace zoq {

std::string_view to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::Single: return "single";
    case EstimatorKind::Avg: return "avg";
    case EstimatorKind::Align: return "align";
  }
  return "?";
}

std::string_view to_string(EstimatorMode mode) {
  return mode == EstimatorMode::Idealized ? "idealized" : "finite_difference";
}

double default_smoothing(const Vec& x) { return 1e-6 * (1.0 + x.norm()); }

namespace {

void check_value(double v, const Vec& at) {
  if (!std::isfinite(v)) throw EvaluationError("objective returned a non-finite value", at);
}

void validate(const Objective& obj, const Vec& x, const EstimatorConfig& cfg) {
  require_dim(x, obj.dim(), "estimate");
  if (cfg.q < 1 || cfg.q > obj.dim()) {
    throw InvalidArgument("estimator block size q=" + std::to_string(cfg.q) + " outside [1, " +
                          std::to_string(obj.dim()) + "]");
  }
  if (cfg.kind == EstimatorKind::Single && cfg.q != 1) {
    throw InvalidArgument("single-query estimator requires q=1");
  }
  if (cfg.smoothing && !(*cfg.smoothing > 0.0)) {
    throw InvalidArgument("smoothing must be positive");
  }
  if (cfg.mode == EstimatorMode::Idealized && !obj.has_gradient()) {
    throw InvalidArgument("idealized estimation needs a gradient oracle");
  }
}

}  // namespace

Vec directional_derivatives(const Objective& obj, const Vec& x, const DirectionBlock& block,
                            EstimatorMode mode, double smoothing,
                            std::optional<double> base_value) {
  if (mode == EstimatorMode::Idealized) {
    const Vec g = obj.gradient(x);
    return block.U.transpose() * g;
  }
  const double fx = base_value ? *base_value : obj.value(x);
  check_value(fx, x);
  Vec s(block.q());
  Vec probe(x.size());
  for (int i = 0; i < block.q(); ++i) {
    probe = x + smoothing * block.U.col(i);
    const double fi = obj.value(probe);
    check_value(fi, probe);
    s[i] = (fi - fx) / smoothing;
  }
  return s;
}

Vec align_solve(const Matrix& U, const Vec& s, double* condition) {
  // U P = Q R  ⇒  UᵀU = P RᵀR Pᵀ and U(UᵀU)⁻¹s = Q R⁻ᵀ Pᵀ s.
  const Eigen::ColPivHouseholderQR<Matrix> qr(U);
  const auto q = U.cols();
  const auto R = qr.matrixQR().topLeftCorner(q, q).triangularView<Eigen::Upper>();
  if (condition) {
    const double top = std::abs(qr.matrixQR()(0, 0));
    const double bottom = std::abs(qr.matrixQR()(q - 1, q - 1));
    *condition = bottom > 0.0 ? top / bottom : std::numeric_limits<double>::infinity();
  }
  const Vec permuted = qr.colsPermutation().transpose() * s;
  Vec z = Vec::Zero(U.rows());
  z.head(q) = R.transpose().solve(permuted);
  return qr.householderQ() * z;
}

GradientEstimate estimate_with_block(const Objective& obj, const Vec& x, const EstimatorConfig& cfg,
                                     const DirectionBlock& block,
                                     std::optional<double> base_value) {
  validate(obj, x, cfg);
  if (block.dim() != obj.dim() || block.q() != cfg.q) {
    throw InvalidArgument("direction block shape does not match the estimator configuration");
  }
  GradientEstimate est;
  est.kind = cfg.kind;
  est.q = cfg.q;
  est.smoothing = cfg.smoothing ? *cfg.smoothing : default_smoothing(x);
  est.queries_used = cfg.q + 1;
  est.dir_derivs = directional_derivatives(obj, x, block, cfg.mode, est.smoothing, base_value);

  switch (cfg.kind) {
    case EstimatorKind::Single:
    case EstimatorKind::Avg:
      est.g_hat = block.U * est.dir_derivs / static_cast<double>(cfg.q);
      break;
    case EstimatorKind::Align: {
      double condition = 0.0;
      est.g_hat = align_solve(block.U, est.dir_derivs, &condition);
      if (!(condition <= kDegenerateCondition)) {
        throw DegenerateBlockError("direction block is numerically rank deficient (condition " +
                                       std::to_string(condition) + ")",
                                   condition);
      }
      break;
    }
  }
  if (!all_finite(est.g_hat)) throw EvaluationError("gradient estimate is not finite", x);
  return est;
}

GradientEstimate estimate_single(const Objective& obj, const Vec& x, const EstimatorConfig& cfg,
                                 SeededRng& rng) {
  if (cfg.kind != EstimatorKind::Single) throw InvalidArgument("estimate_single: kind must be Single");
  validate(obj, x, cfg);
  return estimate_with_block(obj, x, cfg, sample_direction_block(obj.dim(), 1, rng));
}

GradientEstimate estimate_avg(const Objective& obj, const Vec& x, const EstimatorConfig& cfg,
                              SeededRng& rng) {
  if (cfg.kind != EstimatorKind::Avg) throw InvalidArgument("estimate_avg: kind must be Avg");
  validate(obj, x, cfg);
  return estimate_with_block(obj, x, cfg, sample_direction_block(obj.dim(), cfg.q, rng));
}

GradientEstimate estimate_align(const Objective& obj, const Vec& x, const EstimatorConfig& cfg,
                                SeededRng& rng) {
  if (cfg.kind != EstimatorKind::Align) throw InvalidArgument("estimate_align: kind must be Align");
  validate(obj, x, cfg);
  const DirectionBlock first = sample_direction_block(obj.dim(), cfg.q, rng);
  double condition = 0.0;
  (void)align_solve(first.U, Vec::Zero(cfg.q), &condition);
  if (condition <= kDegenerateCondition) return estimate_with_block(obj, x, cfg, first);
  return estimate_with_block(obj, x, cfg, sample_direction_block(obj.dim(), cfg.q, rng));
}

GradientEstimate estimate(const Objective& obj, const Vec& x, const EstimatorConfig& cfg,
                          SeededRng& rng) {
  switch (cfg.kind) {
    case EstimatorKind::Single: return estimate_single(obj, x, cfg, rng);
    case EstimatorKind::Avg: return estimate_avg(obj, x, cfg, rng);
    case EstimatorKind::Align: return estimate_align(obj, x, cfg, rng);
  }
  throw InvalidArgument("unknown estimator kind");
}

double projection_residual(const GradientEstimate& est, const DirectionBlock& block) {
  if (block.q() != est.dir_derivs.size() || block.dim() != est.g_hat.size()) {
    throw InvalidArgument("projection_residual: block does not match the estimate");
  }
  return (block.U.transpose() * est.g_hat - est.dir_derivs).cwiseAbs().maxCoeff();
}

}  // namespace zoq
