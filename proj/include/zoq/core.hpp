#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include <Eigen/Core>

#include "zoq/errors.hpp"
#include "zoq/rng.hpp"

namespace zoq {

using Vec = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// d×q matrix of i.i.d. N(0, 1) direction columns.
struct DirectionBlock {
  Matrix U;
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;

  int dim() const { return static_cast<int>(U.rows()); }
  int q() const { return static_cast<int>(U.cols()); }
};

/// Draws the block column by column from rng. Requires 1 <= q <= dim.
DirectionBlock sample_direction_block(int dim, int q, SeededRng& rng);

struct Optimum {
  Vec x;
  double value = 0.0;
};

/// Black-box objective. Estimators only call value(); gradient() is an oracle
/// used by idealized estimation, diagnostics and tests.
///
/// Implementations are immutable after construction, so concurrent calls are
/// safe.
class Objective {
 public:
  virtual ~Objective() = default;

  virtual int dim() const = 0;
  virtual double value(const Vec& x) const = 0;
  virtual bool has_gradient() const { return true; }
  virtual Vec gradient(const Vec& x) const = 0;

  /// Lipschitz constant L of the gradient.
  virtual double smoothness() const = 0;
  virtual std::optional<double> strong_convexity() const { return std::nullopt; }
  /// Bound σ² on the stochastic-gradient variance at the optimum.
  virtual std::optional<double> variance_bound() const { return std::nullopt; }
  virtual std::optional<Optimum> optimum() const { return std::nullopt; }
  /// A known lower bound on f, when no optimum is available (e.g. 0 for a loss).
  virtual std::optional<double> lower_bound() const {
    if (auto opt = optimum()) return opt->value;
    return std::nullopt;
  }

  virtual std::string name() const = 0;
};

/// Objective f(x) = E_ξ F(x, ξ) whose realizations are addressable by key.
class StochasticObjective : public Objective {
 public:
  /// One realization F(x, ξ) with ξ identified by sample_key.
  virtual double stochastic_value(const Vec& x, std::uint64_t sample_key) const = 0;
  /// The realization F(·, ξ) as a deterministic objective.
  virtual std::unique_ptr<Objective> realization(std::uint64_t sample_key) const = 0;
};

/// Throws InvalidArgument unless x has length dim.
void require_dim(const Vec& x, int dim, const char* where);
bool all_finite(const Vec& x);

}  // namespace zoq
