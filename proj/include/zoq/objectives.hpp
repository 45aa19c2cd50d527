#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "zoq/core.hpp"

namespace zoq {

/// f(x) = ½ xᵀAx + bᵀx with A symmetric positive definite.
///
/// L, μ, x* and f* are computed once at construction from an eigendecomposition
/// and a Cholesky solve.
class QuadraticObjective final : public Objective {
 public:
  QuadraticObjective(Matrix A, Vec b);

  int dim() const override { return static_cast<int>(b_.size()); }
  double value(const Vec& x) const override;
  Vec gradient(const Vec& x) const override;
  double smoothness() const override { return L_; }
  std::optional<double> strong_convexity() const override { return mu_; }
  std::optional<Optimum> optimum() const override { return optimum_; }
  std::string name() const override { return "quadratic"; }

  const Matrix& A() const { return A_; }
  const Vec& b() const { return b_; }

 private:
  Matrix A_;
  Vec b_;
  double L_;
  double mu_;
  Optimum optimum_;
};

/// A = MᵀM + eps·I with M and b drawn from rng (M first, column-major, then b).
QuadraticObjective make_quadratic(int dim, double eps, SeededRng& rng);
QuadraticObjective make_quadratic_from(const Matrix& M, double eps, Vec b);

/// log(1 + exp(z)) without overflow.
double softplus(double z);
/// 1 / (1 + exp(-z)).
double logistic_sigmoid(double z);

/// f(x) = 1/m Σ log(1 + exp(-y_i a_iᵀx)) + (ridge/2)‖x‖².
class LogisticObjective final : public Objective {
 public:
  /// smoothness_override replaces the computed L = λ_max(AᵀA)/(4m) + ridge; used
  /// by mini-batch realizations that must share their parent's constant.
  LogisticObjective(Matrix features, Vec labels, double ridge = 0.0,
                    std::optional<double> smoothness_override = std::nullopt);

  int dim() const override { return static_cast<int>(features_.cols()); }
  double value(const Vec& x) const override;
  Vec gradient(const Vec& x) const override;
  double smoothness() const override { return L_; }
  std::optional<double> strong_convexity() const override;
  std::optional<double> lower_bound() const override;
  std::string name() const override { return "logistic"; }

  const Matrix& features() const { return features_; }
  const Vec& labels() const { return labels_; }
  double ridge() const { return ridge_; }
  int samples() const { return static_cast<int>(features_.rows()); }

 private:
  Matrix features_;
  Vec labels_;
  double ridge_;
  double L_;
};

/// m×dim standard-normal features, a fresh w_true ~ N(0, I), y = sign(aᵀw_true)
/// with zero mapped to +1. Draw order: features row by row, then w_true.
LogisticObjective make_logistic(int samples, int dim, SeededRng& rng);

/// CSV with one example per row: label first, then the features. No header.
void save_dataset_csv(const LogisticObjective& obj, const std::filesystem::path& path);
LogisticObjective load_dataset_csv(const std::filesystem::path& path, double ridge = 0.0);

/// Σ_{i<d} 100(x_{i+1} − x_i²)² + (1 − x_i)².
class RosenbrockObjective final : public Objective {
 public:
  RosenbrockObjective(int dim, double smoothness);

  int dim() const override { return dim_; }
  double value(const Vec& x) const override;
  Vec gradient(const Vec& x) const override;
  double smoothness() const override { return L_; }
  std::optional<Optimum> optimum() const override;
  std::string name() const override { return "rosenbrock"; }

  /// Spectral norm of the (tridiagonal) Hessian at x.
  double hessian_norm(const Vec& x) const;

 private:
  int dim_;
  double L_;
};

/// Rosenbrock has no global L. The constant used for step sizes is twice the
/// largest Hessian spectral norm seen over `samples` uniform points of the box
/// [box_lo, box_hi]^dim, the standard start, and the optimum.
double rosenbrock_box_smoothness(int dim, double box_lo, double box_hi, int samples,
                                 SeededRng& rng);
RosenbrockObjective make_rosenbrock(int dim, SeededRng& rng);
/// (−1.2, 1, −1.2, 1, ...).
Vec rosenbrock_start(int dim);

struct StochasticLogisticOptions {
  int dim = 50;
  int batch_size = 10;
  double rho = 0.1;
  /// Training pool size; 0 means 10·dim.
  int pool_size = 0;
  /// Held-out evaluation set size; 0 means 50·batch_size.
  int eval_size = 0;
  /// Every sample key maps to the same mini-batch (noise-free oracle).
  bool fixed_batch = false;
};

struct StochasticLogisticDataSets {
  LogisticObjective pool;
  LogisticObjective eval;
};

/// Regularized logistic loss whose realizations F(x, ξ) are mini-batches drawn
/// with replacement from a fixed synthetic pool.
///
/// value()/gradient() report the held-out evaluation objective, which stands in
/// for the population objective. expected_value()/expected_gradient() are the
/// exact expectation over ξ, i.e. the pool average plus the ridge term.
class StochasticLogisticObjective final : public StochasticObjective {
 public:
  StochasticLogisticObjective(const StochasticLogisticOptions& options, std::uint64_t seed);

  int dim() const override { return options_.dim; }
  double value(const Vec& x) const override { return eval_.value(x); }
  Vec gradient(const Vec& x) const override { return eval_.gradient(x); }
  double smoothness() const override { return L_; }
  std::optional<double> strong_convexity() const override { return options_.rho; }
  std::optional<double> variance_bound() const override { return sigma2_; }
  std::optional<Optimum> optimum() const override { return eval_optimum_; }
  std::string name() const override { return "stochastic_logistic"; }

  double stochastic_value(const Vec& x, std::uint64_t sample_key) const override;
  std::unique_ptr<Objective> realization(std::uint64_t sample_key) const override;
  /// ∇F(x, ξ) for the batch behind sample_key.
  Vec stochastic_gradient(const Vec& x, std::uint64_t sample_key) const;

  double expected_value(const Vec& x) const { return pool_.value(x); }
  Vec expected_gradient(const Vec& x) const { return pool_.gradient(x); }
  const Optimum& expected_optimum() const { return pool_optimum_; }

  /// Pool indices of the batch behind sample_key.
  std::vector<int> batch_indices(std::uint64_t sample_key) const;

  const StochasticLogisticOptions& options() const { return options_; }
  const LogisticObjective& pool() const { return pool_; }
  const LogisticObjective& evaluation_set() const { return eval_; }

 private:
  StochasticLogisticObjective(const StochasticLogisticOptions& options, std::uint64_t seed,
                              StochasticLogisticDataSets sets);

  StochasticLogisticOptions options_;
  std::uint64_t seed_;
  LogisticObjective pool_;
  LogisticObjective eval_;
  double L_;
  Optimum pool_optimum_;
  Optimum eval_optimum_;
  double sigma2_;
};

/// Gradient descent with step 1/L until ‖∇f‖ ≤ tol. Throws NumericalError if
/// max_iters is reached first.
Optimum minimize_smooth(const Objective& obj, const Vec& x0, double tol, long max_iters);

}  // namespace zoq
