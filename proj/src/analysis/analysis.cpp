#include "zoq/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

namespace zoq {

void RunningStats::add(double v) {
  ++n_;
  const double delta = v - mean_;
  mean_ += delta / static_cast<double>(n_);
  m2_ += delta * (v - mean_);
}

void RunningStats::merge(const RunningStats& other) {
  if (other.n_ == 0) return;
  if (n_ == 0) {
    *this = other;
    return;
  }
  const double na = static_cast<double>(n_);
  const double nb = static_cast<double>(other.n_);
  const double n = na + nb;
  const double delta = other.mean_ - mean_;
  mean_ += delta * nb / n;
  m2_ += other.m2_ + delta * delta * na * nb / n;
  n_ += other.n_;
}

double RunningStats::variance() const { return n_ < 2 ? 0.0 : m2_ / static_cast<double>(n_ - 1); }

double RunningStats::stderr_mean() const {
  return n_ < 2 ? 0.0 : std::sqrt(variance() / static_cast<double>(n_));
}

void VectorStats::add(const Vec& v) {
  ++n_;
  const Vec delta = v - mean_;
  mean_ += delta / static_cast<double>(n_);
  m2_.array() += delta.array() * (v - mean_).array();
}

void VectorStats::merge(const VectorStats& other) {
  if (other.n_ == 0) return;
  if (n_ == 0) {
    *this = other;
    return;
  }
  const double na = static_cast<double>(n_);
  const double nb = static_cast<double>(other.n_);
  const double n = na + nb;
  const Vec delta = other.mean_ - mean_;
  mean_ += delta * (nb / n);
  m2_.array() += other.m2_.array() + delta.array().square() * (na * nb / n);
  n_ += other.n_;
}

Vec VectorStats::stderr_mean() const {
  if (n_ < 2) return Vec::Zero(mean_.size());
  const double n = static_cast<double>(n_);
  return (m2_.array() / ((n - 1.0) * n)).sqrt().matrix();
}

namespace {

void check_moment_args(EstimatorKind kind, int dim, int q, double g_norm2) {
  if (dim < 1 || q < 1 || q > dim) {
    throw InvalidArgument("closed form needs 1 <= q <= d (got d=" + std::to_string(dim) +
                          ", q=" + std::to_string(q) + ")");
  }
  if (!(g_norm2 >= 0.0)) throw InvalidArgument("closed form needs ||g||^2 >= 0");
  if (kind == EstimatorKind::Single && q != 1) throw InvalidArgument("single estimator has q = 1");
}

}  // namespace

double mse_closed_form(EstimatorKind kind, int dim, int q, double g_norm2) {
  check_moment_args(kind, dim, q, g_norm2);
  if (kind == EstimatorKind::Align) return (dim - q) / static_cast<double>(dim) * g_norm2;
  return (dim + 1.0) / q * g_norm2;
}

double second_moment_closed_form(EstimatorKind kind, int dim, int q, double g_norm2) {
  check_moment_args(kind, dim, q, g_norm2);
  if (kind == EstimatorKind::Align) return q / static_cast<double>(dim) * g_norm2;
  return (q + dim + 1.0) / q * g_norm2;
}

double mean_factor(EstimatorKind kind, int dim, int q) {
  check_moment_args(kind, dim, q, 0.0);
  return kind == EstimatorKind::Align ? q / static_cast<double>(dim) : 1.0;
}

double z_score(double empirical, double target, double stderr_value) {
  const double diff = empirical - target;
  if (stderr_value > 0.0) return diff / stderr_value;
  const double scale = 1e-12 * (1.0 + std::abs(target));
  return std::abs(diff) <= scale ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
}

void parallel_for_chunks(int chunks, const std::function<void(int)>& fn, int threads) {
  if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
  const int workers = std::max(1, std::min(chunks, threads));
  if (workers <= 1) {
    for (int c = 0; c < chunks; ++c) fn(c);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int c = next++; c < chunks; c = next++) {
        try {
          fn(c);
        } catch (...) {
          const std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

namespace {

constexpr int kMonteCarloChunks = 16;

struct MomentChunk {
  VectorStats mean;
  RunningStats err;
  RunningStats norm2;
  explicit MomentChunk(int d) : mean(d) {}
};

}  // namespace

MomentReport mse_monte_carlo(EstimatorKind kind, const Objective& obj, const Vec& x, int q,
                             long samples, SeededRng& rng) {
  if (samples < kMinMonteCarloSamples) {
    throw InvalidArgument("Monte Carlo moments need at least " +
                          std::to_string(kMinMonteCarloSamples) + " samples");
  }
  if (!obj.has_gradient()) throw InvalidArgument("Monte Carlo moments need a gradient oracle");
  const int d = obj.dim();
  require_dim(x, d, "mse_monte_carlo");
  const Vec g = obj.gradient(x);
  const double g2 = g.squaredNorm();

  MomentReport rep;
  rep.kind = kind;
  rep.dim = d;
  rep.q = q;
  rep.samples = samples;
  rep.g_norm2 = g2;
  rep.mse_closed = mse_closed_form(kind, d, q, g2);
  rep.norm2_closed = second_moment_closed_form(kind, d, q, g2);
  rep.mean_target = mean_factor(kind, d, q) * g;

  EstimatorConfig cfg;
  cfg.kind = kind;
  cfg.q = q;
  cfg.mode = EstimatorMode::Idealized;

  const std::uint64_t tag = rng.next_u64();
  std::vector<MomentChunk> parts(kMonteCarloChunks, MomentChunk(d));
  parallel_for_chunks(kMonteCarloChunks, [&](int c) {
    SeededRng local = rng.derive(tag + static_cast<std::uint64_t>(c));
    const long begin = samples * c / kMonteCarloChunks;
    const long end = samples * (c + 1) / kMonteCarloChunks;
    MomentChunk& part = parts[static_cast<std::size_t>(c)];
    for (long i = begin; i < end; ++i) {
      const GradientEstimate est = estimate(obj, x, cfg, local);
      part.mean.add(est.g_hat);
      part.err.add((est.g_hat - g).squaredNorm());
      part.norm2.add(est.g_hat.squaredNorm());
    }
  });

  MomentChunk total(d);
  for (const auto& part : parts) {
    total.mean.merge(part.mean);
    total.err.merge(part.err);
    total.norm2.merge(part.norm2);
  }

  rep.mean = total.mean.mean();
  rep.mean_stderr = total.mean.stderr_mean();
  for (int i = 0; i < d; ++i) {
    rep.mean_max_abs_z =
        std::max(rep.mean_max_abs_z, std::abs(z_score(rep.mean[i], rep.mean_target[i], rep.mean_stderr[i])));
  }
  rep.mse = total.err.mean();
  rep.mse_stderr = total.err.stderr_mean();
  rep.mse_z = z_score(rep.mse, rep.mse_closed, rep.mse_stderr);
  rep.norm2_mean = total.norm2.mean();
  rep.norm2_stderr = total.norm2.stderr_mean();
  rep.norm2_z = z_score(rep.norm2_mean, rep.norm2_closed, rep.norm2_stderr);
  return rep;
}

std::string_view to_string(BoundKind kind) {
  switch (kind) {
    case BoundKind::AvgStronglyConvex: return "avg_strongly_convex";
    case BoundKind::AlignStronglyConvex: return "align_strongly_convex";
    case BoundKind::AvgConvex: return "avg_convex";
    case BoundKind::AlignConvex: return "align_convex";
    case BoundKind::AvgNonconvex: return "avg_nonconvex";
    case BoundKind::AlignNonconvex: return "align_nonconvex";
    case BoundKind::AvgStochastic: return "avg_stochastic";
    case BoundKind::AlignStochastic: return "align_stochastic";
  }
  return "?";
}

BoundConstants bound_constants_for(const Objective& obj, const Vec& x0) {
  BoundConstants c;
  c.dim = obj.dim();
  c.L = obj.smoothness();
  c.mu = obj.strong_convexity();
  c.sigma2 = obj.variance_bound();
  if (auto lower = obj.lower_bound()) c.gap0 = obj.value(x0) - *lower;
  if (auto opt = obj.optimum()) c.dist0_sq = (x0 - opt->x).squaredNorm();
  return c;
}

namespace {

double need(const std::optional<double>& v, BoundKind kind, const char* name) {
  if (!v) {
    throw ConfigError("bound " + std::string(to_string(kind)) + " needs the constant '" + name + "'");
  }
  return *v;
}

}  // namespace

BoundCurve bound_curve(BoundKind kind, const BoundConstants& c, std::span<const int> qs) {
  if (c.dim < 1) throw ConfigError("bound " + std::string(to_string(kind)) + " needs the constant 'dim'");
  if (!(c.L > 0.0)) throw ConfigError("bound " + std::string(to_string(kind)) + " needs the constant 'L'");
  const double d = c.dim;
  const double L = c.L;
  const double inf = std::numeric_limits<double>::infinity();

  BoundCurve curve;
  curve.kind = kind;
  curve.values.reserve(qs.size() + 1);

  switch (kind) {
    case BoundKind::AvgStronglyConvex:
    case BoundKind::AlignStronglyConvex: {
      const double mu = need(c.mu, kind, "mu");
      double value = need(c.gap0, kind, "gap0");
      curve.values.push_back(value);
      for (int q : qs) {
        const double denom = kind == BoundKind::AvgStronglyConvex ? L * (q + d + 1.0) : L * d;
        value *= 1.0 - mu * q / denom;
        curve.values.push_back(value);
      }
      break;
    }
    case BoundKind::AvgConvex:
    case BoundKind::AlignConvex: {
      const double gap0 = need(c.gap0, kind, "gap0");
      const double dist = need(c.dist0_sq, kind, "dist0_sq");
      curve.values.push_back(inf);
      double sum = 0.0;
      for (int q : qs) {
        if (kind == BoundKind::AvgConvex) {
          sum += 2.0 * q / (q + d + 1.0);
          curve.values.push_back(L * (dist + 2.0 / L * gap0) / sum);
        } else {
          sum += q;
          curve.values.push_back(d / (2.0 * sum) * (L * dist + 2.0 * gap0));
        }
      }
      break;
    }
    case BoundKind::AvgNonconvex:
    case BoundKind::AlignNonconvex: {
      const double gap0 = need(c.gap0, kind, "gap0");
      curve.values.push_back(inf);
      double sum = 0.0;
      for (int q : qs) {
        if (kind == BoundKind::AvgNonconvex) {
          sum += q / (q + d + 1.0);
          curve.values.push_back(2.0 * L * gap0 / sum);
        } else {
          sum += q;
          curve.values.push_back(2.0 * L * d * gap0 / sum);
        }
      }
      break;
    }
    case BoundKind::AvgStochastic:
    case BoundKind::AlignStochastic: {
      const double dist = need(c.dist0_sq, kind, "dist0_sq");
      const double sigma2 = need(c.sigma2, kind, "sigma2");
      const double eta0 = need(c.eta0, kind, "eta0");
      curve.values.push_back(inf);
      double noise = 0.0;
      double weight = 0.0;
      for (std::size_t t = 0; t < qs.size(); ++t) {
        const double q = qs[t];
        const double t1 = static_cast<double>(t) + 1.0;
        if (kind == BoundKind::AvgStochastic) {
          noise += (q + d + 1.0) / (q * t1);
          weight += (d + 1.0 - q) / (q * std::sqrt(t1));
          curve.values.push_back((dist + 2.0 * eta0 * eta0 * sigma2 * noise) / (eta0 * weight));
        } else {
          noise += q / t1;
          weight += q / std::sqrt(t1);
          curve.values.push_back((d * dist + 2.0 * eta0 * eta0 * sigma2 * noise) / (eta0 * weight));
        }
      }
      break;
    }
  }
  return curve;
}

RateFit fit_log_linear(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw FitError("fit: x and y differ in length");
  if (x.size() < 2) throw FitError("fit: need at least two points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  std::vector<double> ly(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!(y[i] > 0.0) || !std::isfinite(y[i])) {
      throw FitError("fit: non-positive value " + std::to_string(y[i]) + " at point " + std::to_string(i));
    }
    ly[i] = std::log(y[i]);
    mx += x[i] / n;
    my += ly[i] / n;
  }
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) throw FitError("fit: x values are all equal");
  RateFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.points = static_cast<int>(x.size());
  return fit;
}

RateFit fit_log_linear_rate(const std::vector<Trajectory>& runs, RateAxis axis, const FitWindow& window) {
  if (runs.empty()) throw FitError("rate fit: no trajectories");
  const std::size_t n = runs.front().rows.size();
  for (const auto& run : runs) {
    if (run.rows.size() != n) throw FitError("rate fit: trajectories have different lengths");
  }
  std::vector<double> xs;
  std::vector<double> gaps;
  const std::size_t first = static_cast<std::size_t>(std::ceil(window.skip_fraction * static_cast<double>(n)));
  for (std::size_t i = first; i < n; ++i) {
    double mean = 0.0;
    for (const auto& run : runs) mean += run.rows[i].gap;
    mean /= static_cast<double>(runs.size());
    if (mean < window.floor) break;
    const auto& row = runs.front().rows[i];
    xs.push_back(axis == RateAxis::Queries ? static_cast<double>(row.cum_queries)
                                           : static_cast<double>(row.t));
    gaps.push_back(mean);
  }
  return fit_log_linear(xs, gaps);
}

StochasticGradientCheck check_stochastic_gradient_bound(const StochasticLogisticObjective& obj,
                                                        const Vec& x, double sigma2, long batches,
                                                        SeededRng& rng) {
  if (batches < 2) throw InvalidArgument("stochastic gradient check needs at least two batches");
  RunningStats stats;
  for (long i = 0; i < batches; ++i) {
    stats.add(obj.stochastic_gradient(x, rng.next_u64()).squaredNorm());
  }
  StochasticGradientCheck out;
  out.batches = batches;
  out.mean_sq_norm = stats.mean();
  out.stderr_sq_norm = stats.stderr_mean();
  out.rhs = 4.0 * obj.smoothness() * (obj.expected_value(x) - obj.expected_optimum().value) +
            2.0 * sigma2;
  return out;
}

VarianceEstimate estimate_gradient_variance(const StochasticLogisticObjective& obj, const Vec& x,
                                            long batches, SeededRng& rng) {
  if (batches < 2) throw InvalidArgument("variance estimate needs at least two batches");
  const Vec mean = obj.expected_gradient(x);
  RunningStats stats;
  for (long i = 0; i < batches; ++i) {
    stats.add((obj.stochastic_gradient(x, rng.next_u64()) - mean).squaredNorm());
  }
  return {stats.mean(), stats.stderr_mean()};
}

}  // namespace zoq
