#include "zoq/objectives.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace zoq {

// ---------------------------------------------------------------- quadratic

QuadraticObjective::QuadraticObjective(Matrix A, Vec b) : A_(std::move(A)), b_(std::move(b)) {
  const auto n = b_.size();
  if (n < 1 || A_.rows() != n || A_.cols() != n) {
    throw InvalidArgument("QuadraticObjective: A must be d×d and b of length d");
  }
  const double scale = std::max(1.0, A_.cwiseAbs().maxCoeff());
  if ((A_ - A_.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw InvalidArgument("QuadraticObjective: A is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(A_, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) {
    throw NumericalError("QuadraticObjective: eigensolver failed for d=" + std::to_string(n));
  }
  mu_ = eig.eigenvalues().minCoeff();
  L_ = eig.eigenvalues().maxCoeff();
  if (!(mu_ > 0.0)) {
    throw InvalidArgument("QuadraticObjective: A is not positive definite (lambda_min=" +
                          std::to_string(mu_) + ")");
  }
  Eigen::LLT<Matrix> llt(A_);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("QuadraticObjective: Cholesky failed, lambda_min=" +
                         std::to_string(mu_) + " lambda_max=" + std::to_string(L_));
  }
  optimum_.x = -llt.solve(b_);
  optimum_.value = value(optimum_.x);
}

double QuadraticObjective::value(const Vec& x) const {
  require_dim(x, dim(), "QuadraticObjective::value");
  return 0.5 * x.dot(A_ * x) + b_.dot(x);
}

Vec QuadraticObjective::gradient(const Vec& x) const {
  require_dim(x, dim(), "QuadraticObjective::gradient");
  return A_ * x + b_;
}

QuadraticObjective make_quadratic_from(const Matrix& M, double eps, Vec b) {
  if (!(eps > 0.0)) throw InvalidArgument("make_quadratic: eps must be positive");
  Matrix A = M.transpose() * M;
  A.diagonal().array() += eps;
  // MᵀM is symmetric in exact arithmetic; symmetrise away rounding.
  A = 0.5 * (A + A.transpose()).eval();
  return QuadraticObjective(std::move(A), std::move(b));
}

QuadraticObjective make_quadratic(int dim, double eps, SeededRng& rng) {
  if (dim < 1) throw InvalidArgument("make_quadratic: dim must be >= 1");
  Matrix M(dim, dim);
  rng.fill_gaussian(std::span<double>(M.data(), static_cast<std::size_t>(M.size())));
  Vec b(dim);
  rng.fill_gaussian(std::span<double>(b.data(), static_cast<std::size_t>(b.size())));
  return make_quadratic_from(M, eps, std::move(b));
}

// ----------------------------------------------------------------- logistic

double softplus(double z) {
  if (z > 30.0) return z + std::exp(-z);
  if (z < -30.0) return std::exp(z);
  return std::log1p(std::exp(z));
}

double logistic_sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

LogisticObjective::LogisticObjective(Matrix features, Vec labels, double ridge,
                                     std::optional<double> smoothness_override)
    : features_(std::move(features)), labels_(std::move(labels)), ridge_(ridge) {
  if (features_.rows() < 1 || features_.cols() < 1) {
    throw InvalidArgument("LogisticObjective: need at least one example and one feature");
  }
  if (labels_.size() != features_.rows()) {
    throw InvalidArgument("LogisticObjective: label count does not match feature rows");
  }
  for (double y : labels_) {
    if (y != 1.0 && y != -1.0) throw InvalidArgument("LogisticObjective: labels must be +-1");
  }
  if (ridge_ < 0.0) throw InvalidArgument("LogisticObjective: ridge must be >= 0");
  if (smoothness_override) {
    L_ = *smoothness_override;
  } else {
    const Matrix gram = features_.transpose() * features_;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) throw NumericalError("LogisticObjective: eigensolver failed");
    L_ = eig.eigenvalues().maxCoeff() / (4.0 * static_cast<double>(samples())) + ridge_;
  }
  if (!(L_ > 0.0)) throw InvalidArgument("LogisticObjective: smoothness must be positive");
}

double LogisticObjective::value(const Vec& x) const {
  require_dim(x, dim(), "LogisticObjective::value");
  const Vec margins = labels_.cwiseProduct(features_ * x);
  double sum = 0.0;
  for (double z : margins) sum += softplus(-z);
  return sum / static_cast<double>(samples()) + 0.5 * ridge_ * x.squaredNorm();
}

Vec LogisticObjective::gradient(const Vec& x) const {
  require_dim(x, dim(), "LogisticObjective::gradient");
  const Vec margins = labels_.cwiseProduct(features_ * x);
  Vec weights(margins.size());
  for (Eigen::Index i = 0; i < margins.size(); ++i) {
    weights[i] = -labels_[i] * logistic_sigmoid(-margins[i]);
  }
  return features_.transpose() * weights / static_cast<double>(samples()) + ridge_ * x;
}

std::optional<double> LogisticObjective::strong_convexity() const {
  if (ridge_ > 0.0) return ridge_;
  return std::nullopt;
}

std::optional<double> LogisticObjective::lower_bound() const { return 0.0; }

LogisticObjective make_logistic(int samples, int dim, SeededRng& rng) {
  if (samples < 1 || dim < 1) throw InvalidArgument("make_logistic: samples and dim must be >= 1");
  Matrix features(samples, dim);
  for (int i = 0; i < samples; ++i) {
    for (int j = 0; j < dim; ++j) features(i, j) = rng.gaussian();
  }
  Vec w_true(dim);
  for (int j = 0; j < dim; ++j) w_true[j] = rng.gaussian();
  const Vec scores = features * w_true;
  Vec labels(samples);
  for (int i = 0; i < samples; ++i) labels[i] = scores[i] >= 0.0 ? 1.0 : -1.0;
  return LogisticObjective(std::move(features), std::move(labels));
}

namespace {

void append_double(std::string& out, double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  out.append(buf, end);
}

}  // namespace

void save_dataset_csv(const LogisticObjective& obj, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("save_dataset_csv: cannot open " + path.string());
  std::string line;
  for (int i = 0; i < obj.samples(); ++i) {
    line.clear();
    line += obj.labels()[i] > 0 ? "1" : "-1";
    for (int j = 0; j < obj.dim(); ++j) {
      line += ',';
      append_double(line, obj.features()(i, j));
    }
    line += '\n';
    out << line;
  }
}

LogisticObjective load_dataset_csv(const std::filesystem::path& path, double ridge) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("load_dataset_csv: cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || ptr != cell.data() + cell.size()) {
        throw InvalidArgument(path.string() + ":" + std::to_string(lineno) + ": bad number '" +
                              cell + "'");
      }
      row.push_back(v);
    }
    if (row.size() < 2 || (!rows.empty() && row.size() != rows.front().size())) {
      throw InvalidArgument(path.string() + ":" + std::to_string(lineno) +
                            ": inconsistent column count");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InvalidArgument("load_dataset_csv: no rows in " + path.string());
  const auto m = static_cast<Eigen::Index>(rows.size());
  const auto d = static_cast<Eigen::Index>(rows.front().size() - 1);
  Matrix features(m, d);
  Vec labels(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    labels[i] = rows[i][0];
    for (Eigen::Index j = 0; j < d; ++j) features(i, j) = rows[i][j + 1];
  }
  return LogisticObjective(std::move(features), std::move(labels), ridge);
}

// --------------------------------------------------------------- rosenbrock

RosenbrockObjective::RosenbrockObjective(int dim, double smoothness) : dim_(dim), L_(smoothness) {
  if (dim < 2) throw InvalidArgument("RosenbrockObjective: dim must be >= 2");
  if (!(smoothness > 0.0)) throw InvalidArgument("RosenbrockObjective: smoothness must be > 0");
}

double RosenbrockObjective::value(const Vec& x) const {
  require_dim(x, dim_, "RosenbrockObjective::value");
  double sum = 0.0;
  for (int i = 0; i + 1 < dim_; ++i) {
    const double a = x[i + 1] - x[i] * x[i];
    const double c = 1.0 - x[i];
    sum += 100.0 * a * a + c * c;
  }
  return sum;
}

Vec RosenbrockObjective::gradient(const Vec& x) const {
  require_dim(x, dim_, "RosenbrockObjective::gradient");
  Vec g = Vec::Zero(dim_);
  for (int i = 0; i + 1 < dim_; ++i) {
    const double a = x[i + 1] - x[i] * x[i];
    g[i] += -400.0 * x[i] * a - 2.0 * (1.0 - x[i]);
    g[i + 1] += 200.0 * a;
  }
  return g;
}

std::optional<Optimum> RosenbrockObjective::optimum() const {
  return Optimum{Vec::Ones(dim_), 0.0};
}

double RosenbrockObjective::hessian_norm(const Vec& x) const {
  require_dim(x, dim_, "RosenbrockObjective::hessian_norm");
  Vec diag = Vec::Zero(dim_);
  Vec sub(dim_ - 1);
  for (int i = 0; i + 1 < dim_; ++i) {
    diag[i] += 1200.0 * x[i] * x[i] - 400.0 * x[i + 1] + 2.0;
    diag[i + 1] += 200.0;
    sub[i] = -400.0 * x[i];
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig;
  eig.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw NumericalError("Rosenbrock Hessian eigensolver failed");
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

Vec rosenbrock_start(int dim) {
  Vec x(dim);
  for (int i = 0; i < dim; ++i) x[i] = (i % 2 == 0) ? -1.2 : 1.0;
  return x;
}

double rosenbrock_box_smoothness(int dim, double box_lo, double box_hi, int samples,
                                 SeededRng& rng) {
  if (!(box_hi > box_lo) || samples < 0) {
    throw InvalidArgument("rosenbrock_box_smoothness: empty box or negative sample count");
  }
  const RosenbrockObjective probe(dim, 1.0);
  double worst = std::max(probe.hessian_norm(rosenbrock_start(dim)),
                          probe.hessian_norm(Vec::Ones(dim)));
  Vec x(dim);
  for (int s = 0; s < samples; ++s) {
    for (int i = 0; i < dim; ++i) x[i] = box_lo + (box_hi - box_lo) * rng.uniform();
    worst = std::max(worst, probe.hessian_norm(x));
  }
  return 2.0 * worst;
}

RosenbrockObjective make_rosenbrock(int dim, SeededRng& rng) {
  return RosenbrockObjective(dim, rosenbrock_box_smoothness(dim, -2.0, 2.0, 256, rng));
}

// ------------------------------------------------------ stochastic logistic

Optimum minimize_smooth(const Objective& obj, const Vec& x0, double tol, long max_iters) {
  Vec x = x0;
  const double step = 1.0 / obj.smoothness();
  for (long it = 0; it < max_iters; ++it) {
    const Vec g = obj.gradient(x);
    if (g.norm() <= tol) return Optimum{x, obj.value(x)};
    x -= step * g;
  }
  throw NumericalError("minimize_smooth: no convergence to gradient norm " + std::to_string(tol) +
                       " within " + std::to_string(max_iters) + " iterations");
}

namespace {

LogisticObjective draw_logistic_set(int n, const Vec& w_true, double rho, SeededRng& rng) {
  const auto d = w_true.size();
  Matrix features(n, d);
  for (int i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) features(i, j) = rng.gaussian();
  }
  const Vec scores = features * w_true;
  Vec labels(n);
  for (int i = 0; i < n; ++i) labels[i] = scores[i] >= 0.0 ? 1.0 : -1.0;
  return LogisticObjective(std::move(features), std::move(labels), rho);
}

StochasticLogisticOptions resolved(StochasticLogisticOptions o) {
  if (o.dim < 1 || o.batch_size < 1 || !(o.rho > 0.0)) {
    throw InvalidArgument("StochasticLogisticObjective: need dim >= 1, batch_size >= 1, rho > 0");
  }
  if (o.pool_size == 0) o.pool_size = 10 * o.dim;
  if (o.eval_size == 0) o.eval_size = 50 * o.batch_size;
  if (o.pool_size < 1 || o.eval_size < 1) {
    throw InvalidArgument("StochasticLogisticObjective: pool and evaluation sets must be non-empty");
  }
  return o;
}

// Streams of the generation seed.
constexpr std::uint64_t kDataStream = 1;
constexpr std::uint64_t kBatchStream = 2;

}  // namespace

StochasticLogisticDataSets make_stochastic_logistic_sets(const StochasticLogisticOptions& o,
                                                         std::uint64_t seed) {
  // w_true, then the training pool, then the held-out set, all from one stream.
  SeededRng rng(seed, kDataStream);
  Vec w_true(o.dim);
  rng.fill_gaussian(std::span<double>(w_true.data(), static_cast<std::size_t>(o.dim)));
  LogisticObjective pool = draw_logistic_set(o.pool_size, w_true, o.rho, rng);
  LogisticObjective eval = draw_logistic_set(o.eval_size, w_true, o.rho, rng);
  return {std::move(pool), std::move(eval)};
}

StochasticLogisticObjective::StochasticLogisticObjective(const StochasticLogisticOptions& options,
                                                         std::uint64_t seed)
    : StochasticLogisticObjective(resolved(options), seed,
                                  make_stochastic_logistic_sets(resolved(options), seed)) {}

StochasticLogisticObjective::StochasticLogisticObjective(const StochasticLogisticOptions& options,
                                                         std::uint64_t seed,
                                                         StochasticLogisticDataSets sets)
    : options_(options), seed_(seed), pool_(std::move(sets.pool)), eval_(std::move(sets.eval)) {
  // Any batch drawn with replacement has λ_max(WᵀW)/(4b) ≤ max_i ‖w_i‖²/4, with
  // equality for a batch of copies of the longest example.
  L_ = pool_.features().rowwise().squaredNorm().maxCoeff() / 4.0 + options_.rho;

  const Vec zero = Vec::Zero(options_.dim);
  pool_optimum_ = minimize_smooth(pool_, zero, 1e-10, 10'000'000);
  eval_optimum_ = minimize_smooth(eval_, zero, 1e-10, 10'000'000);

  // Exact E_ξ‖∇F(x*, ξ)‖² for b i.i.d. uniform draws from the pool: the mean
  // term vanishes at x*, leaving the per-example variance divided by b.
  const Vec& xs = pool_optimum_.x;
  const Matrix& W = pool_.features();
  const Vec& y = pool_.labels();
  const Vec margins = y.cwiseProduct(W * xs);
  Matrix per_example(W.rows(), W.cols());
  for (Eigen::Index i = 0; i < W.rows(); ++i) {
    per_example.row(i) = (-y[i] * logistic_sigmoid(-margins[i])) * W.row(i);
  }
  const Eigen::RowVectorXd mean = per_example.colwise().mean();
  const double var = (per_example.rowwise() - mean).rowwise().squaredNorm().mean();
  sigma2_ = var / static_cast<double>(options_.batch_size);
}

std::vector<int> StochasticLogisticObjective::batch_indices(std::uint64_t sample_key) const {
  SeededRng rng(seed_, mix64(kBatchStream) ^ mix64(options_.fixed_batch ? 0 : sample_key));
  std::vector<int> idx(static_cast<std::size_t>(options_.batch_size));
  for (int& i : idx) i = static_cast<int>(rng.below(static_cast<std::uint64_t>(options_.pool_size)));
  return idx;
}

std::unique_ptr<Objective> StochasticLogisticObjective::realization(std::uint64_t sample_key) const {
  const auto idx = batch_indices(sample_key);
  Matrix features(static_cast<Eigen::Index>(idx.size()), options_.dim);
  Vec labels(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) {
    features.row(static_cast<Eigen::Index>(k)) = pool_.features().row(idx[k]);
    labels[static_cast<Eigen::Index>(k)] = pool_.labels()[idx[k]];
  }
  return std::make_unique<LogisticObjective>(std::move(features), std::move(labels), options_.rho,
                                             L_);
}

double StochasticLogisticObjective::stochastic_value(const Vec& x, std::uint64_t sample_key) const {
  return realization(sample_key)->value(x);
}

Vec StochasticLogisticObjective::stochastic_gradient(const Vec& x, std::uint64_t sample_key) const {
  return realization(sample_key)->gradient(x);
}

}  // namespace zoq
