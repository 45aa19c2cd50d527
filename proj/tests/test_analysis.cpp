#include <cmath>

#include <Eigen/Cholesky>
#include <gtest/gtest.h>

#include "zoq/analysis.hpp"
#include "zoq/objectives.hpp"

namespace {

using zoq::BoundConstants;
using zoq::BoundKind;
using zoq::EstimatorKind;
using zoq::SeededRng;
using zoq::Vec;

Vec random_point(int d, SeededRng& rng) {
  Vec x(d);
  rng.fill_gaussian(std::span<double>(x.data(), static_cast<std::size_t>(d)));
  return x;
}

// Quadratic with gradient of unit norm at the returned point.
struct UnitGradientCase {
  zoq::QuadraticObjective obj;
  Vec x;
};

UnitGradientCase unit_gradient_case(int d, std::uint64_t seed) {
  SeededRng rng(seed);
  auto obj = zoq::make_quadratic(d, 1.0, rng);
  const Vec direction = random_point(d, rng).normalized();
  // ∇f(x) = A(x − x*), so x = x* + A⁻¹·direction gives ∇f(x) = direction.
  Vec x = obj.optimum()->x + obj.A().ldlt().solve(direction);
  return {std::move(obj), std::move(x)};
}

zoq::Trajectory geometric_run(double rho, int n, double noise, SeededRng* rng) {
  zoq::Trajectory t;
  for (int i = 0; i <= n; ++i) {
    zoq::TrajectoryRow row;
    row.t = i;
    row.q = i == 0 ? 0 : 1;
    row.cum_queries = i;
    row.gap = std::pow(rho, i) * (rng ? 1.0 + noise * rng->gaussian() : 1.0);
    t.rows.push_back(row);
  }
  return t;
}

}  // namespace

TEST(ClosedForm, Examples) {
  EXPECT_DOUBLE_EQ(zoq::mse_closed_form(EstimatorKind::Avg, 10, 1, 1.0), 11.0);
  EXPECT_DOUBLE_EQ(zoq::mse_closed_form(EstimatorKind::Align, 10, 1, 1.0), 0.9);
  EXPECT_DOUBLE_EQ(zoq::mse_closed_form(EstimatorKind::Align, 7, 7, 3.5), 0.0);
  EXPECT_DOUBLE_EQ(zoq::mse_closed_form(EstimatorKind::Single, 10, 1, 2.0), 22.0);
  EXPECT_DOUBLE_EQ(zoq::second_moment_closed_form(EstimatorKind::Avg, 20, 5, 1.0), 26.0 / 5.0);
  EXPECT_DOUBLE_EQ(zoq::second_moment_closed_form(EstimatorKind::Align, 20, 5, 2.0), 0.5);
  EXPECT_DOUBLE_EQ(zoq::mean_factor(EstimatorKind::Avg, 20, 5), 1.0);
  EXPECT_DOUBLE_EQ(zoq::mean_factor(EstimatorKind::Align, 20, 5), 0.25);
}

TEST(ClosedForm, RejectsInvalidInput) {
  EXPECT_THROW(zoq::mse_closed_form(EstimatorKind::Avg, 10, 0, 1.0), zoq::InvalidArgument);
  EXPECT_THROW(zoq::mse_closed_form(EstimatorKind::Align, 10, 11, 1.0), zoq::InvalidArgument);
  EXPECT_THROW(zoq::mse_closed_form(EstimatorKind::Avg, 10, 2, -1.0), zoq::InvalidArgument);
  EXPECT_THROW(zoq::second_moment_closed_form(EstimatorKind::Single, 10, 2, 1.0), zoq::InvalidArgument);
}

TEST(ClosedForm, AlignBelowAvgForEveryMultiQueryBlock) {
  for (int d = 2; d <= 200; ++d) {
    for (int q = 2; q <= d; ++q) {
      ASSERT_LT(zoq::mse_closed_form(EstimatorKind::Align, d, q, 1.0),
                zoq::mse_closed_form(EstimatorKind::Avg, d, q, 1.0))
          << "d=" << d << " q=" << q;
    }
  }
}

TEST(MonteCarlo, AvgMseMatchesClosedForm) {
  const auto c = unit_gradient_case(20, 1);
  SeededRng rng(2);
  const auto rep = zoq::mse_monte_carlo(EstimatorKind::Avg, c.obj, c.x, 5, 100'000, rng);
  EXPECT_NEAR(rep.g_norm2, 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(rep.mse_closed, 4.2 * rep.g_norm2);
  EXPECT_LT(std::abs(rep.mse - 4.2), 3 * rep.mse_stderr);
  EXPECT_LT(std::abs(rep.mse_z), 3.0);
  EXPECT_EQ(rep.samples, 100'000);
}

TEST(MonteCarlo, AlignMseMatchesClosedForm) {
  const auto c = unit_gradient_case(20, 3);
  SeededRng rng(4);
  const auto rep = zoq::mse_monte_carlo(EstimatorKind::Align, c.obj, c.x, 5, 100'000, rng);
  EXPECT_LT(std::abs(rep.mse - 0.75), 3 * rep.mse_stderr);
}

TEST(MonteCarlo, FullAlignBlockIsExact) {
  const auto c = unit_gradient_case(10, 5);
  SeededRng rng(6);
  const auto rep = zoq::mse_monte_carlo(EstimatorKind::Align, c.obj, c.x, 10, 2000, rng);
  EXPECT_LT(rep.mse, 1e-20);
}

TEST(MonteCarlo, AvgSecondMomentIdentity) {
  const auto c = unit_gradient_case(20, 7);
  for (int q : {1, 5, 20}) {
    SeededRng rng(8 + static_cast<std::uint64_t>(q));
    const auto rep = zoq::mse_monte_carlo(EstimatorKind::Avg, c.obj, c.x, q, 100'000, rng);
    EXPECT_LT(std::abs(rep.norm2_mean - (q + 21.0) / q), 4 * rep.norm2_stderr) << "q=" << q;
  }
}

TEST(MonteCarlo, RejectsTooFewSamples) {
  const auto c = unit_gradient_case(5, 9);
  SeededRng rng(1);
  EXPECT_THROW(zoq::mse_monte_carlo(EstimatorKind::Avg, c.obj, c.x, 2, 999, rng), zoq::InvalidArgument);
}

TEST(MonteCarlo, ResultIndependentOfThreadScheduling) {
  const auto c = unit_gradient_case(12, 10);
  SeededRng a(11);
  SeededRng b(11);
  const auto r1 = zoq::mse_monte_carlo(EstimatorKind::Avg, c.obj, c.x, 3, 5000, a);
  const auto r2 = zoq::mse_monte_carlo(EstimatorKind::Avg, c.obj, c.x, 3, 5000, b);
  EXPECT_EQ(r1.mse, r2.mse);
  EXPECT_EQ(r1.mean, r2.mean);
}

TEST(ZScore, EdgeCases) {
  EXPECT_EQ(zoq::z_score(1.0, 1.0, 0.0), 0.0);
  EXPECT_TRUE(std::isinf(zoq::z_score(1.0, 0.0, 0.0)));
  EXPECT_DOUBLE_EQ(zoq::z_score(3.0, 1.0, 0.5), 4.0);
}

TEST(Bounds, StronglyConvexReferenceValues) {
  BoundConstants c;
  c.dim = 20;
  c.L = 1.0;
  c.mu = 0.1;
  c.gap0 = 1.0;
  const std::vector<int> qs(100, 1);
  const auto avg = zoq::bound_curve(BoundKind::AvgStronglyConvex, c, qs);
  ASSERT_EQ(avg.values.size(), 101u);
  EXPECT_EQ(avg.values[0], 1.0);
  EXPECT_NEAR(avg.values[100], 0.63407904631519177, 1e-14);
  for (std::size_t t = 1; t < avg.values.size(); ++t) EXPECT_LT(avg.values[t], avg.values[t - 1]);

  c.mu = 1.0;
  const std::vector<int> full{20, 20};
  const auto align = zoq::bound_curve(BoundKind::AlignStronglyConvex, c, full);
  EXPECT_EQ(align.values[1], 0.0);
}

TEST(Bounds, ConvexAndNonconvexReferenceValues) {
  BoundConstants c;
  c.dim = 20;
  c.L = 1.0;
  c.dist0_sq = 4.0;
  c.gap0 = 2.0;
  const std::vector<int> twenty(20, 20);
  EXPECT_NEAR(zoq::bound_curve(BoundKind::AlignConvex, c, twenty).values.back(), 0.2, 1e-15);

  c.L = 2.0;
  c.dist0_sq = 3.0;
  c.gap0 = 1.5;
  const std::vector<int> ones(10, 1);
  EXPECT_NEAR(zoq::bound_curve(BoundKind::AvgConvex, c, ones).values.back(), 9.9, 1e-13);
  EXPECT_NEAR(zoq::bound_curve(BoundKind::AvgNonconvex, c, ones).values.back(), 13.2, 1e-13);
  EXPECT_NEAR(zoq::bound_curve(BoundKind::AlignNonconvex, c, ones).values.back(), 12.0, 1e-13);
  EXPECT_TRUE(std::isinf(zoq::bound_curve(BoundKind::AvgConvex, c, ones).values[0]));
}

TEST(Bounds, StochasticReferenceValues) {
  BoundConstants c;
  c.dim = 4;
  c.L = 1.0;
  c.dist0_sq = 1.0;
  c.sigma2 = 0.5;
  c.eta0 = 0.1;
  const std::vector<int> qs{2, 2, 2};
  EXPECT_NEAR(zoq::bound_curve(BoundKind::AlignStochastic, c, qs).values.back(), 8.835067978191937, 1e-13);
  EXPECT_NEAR(zoq::bound_curve(BoundKind::AvgStochastic, c, qs).values.back(), 3.1055276102810635, 1e-13);
}

TEST(Bounds, MissingConstantIsNamed) {
  BoundConstants c;
  c.dim = 5;
  c.L = 1.0;
  c.gap0 = 1.0;
  const std::vector<int> qs{1};
  try {
    zoq::bound_curve(BoundKind::AlignStronglyConvex, c, qs);
    FAIL() << "expected ConfigError";
  } catch (const zoq::ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("'mu'"), std::string::npos);
  }
  EXPECT_THROW(zoq::bound_curve(BoundKind::AvgConvex, c, qs), zoq::ConfigError);
  EXPECT_THROW(zoq::bound_curve(BoundKind::AvgStochastic, c, qs), zoq::ConfigError);
}

TEST(Bounds, ConstantsFromObjective) {
  SeededRng rng(12);
  const auto q = zoq::make_quadratic(6, 1.0, rng);
  const Vec x0 = Vec::Ones(6);
  const auto c = zoq::bound_constants_for(q, x0);
  EXPECT_EQ(c.dim, 6);
  EXPECT_EQ(c.L, q.smoothness());
  EXPECT_EQ(*c.mu, *q.strong_convexity());
  EXPECT_DOUBLE_EQ(*c.gap0, q.value(x0) - q.optimum()->value);
  EXPECT_DOUBLE_EQ(*c.dist0_sq, (x0 - q.optimum()->x).squaredNorm());
  EXPECT_FALSE(c.sigma2.has_value());
}

TEST(RateFit, ExactGeometricSequence) {
  const double rho = 0.93;
  const std::vector<zoq::Trajectory> runs{geometric_run(rho, 80, 0.0, nullptr)};
  const auto fit = zoq::fit_log_linear_rate(runs);
  EXPECT_NEAR(fit.slope, std::log(rho), 1e-10);
  EXPECT_EQ(fit.points, 81 - 9);
}

TEST(RateFit, NoisySequenceRecoversSlope) {
  SeededRng rng(13);
  std::vector<double> x, y;
  const double slope = -0.08;
  for (int i = 0; i < 50; ++i) {
    x.push_back(i);
    y.push_back(std::exp(slope * i) * (1.0 + 0.01 * rng.gaussian()));
  }
  const auto fit = zoq::fit_log_linear(x, y);
  EXPECT_NEAR(fit.slope, slope, 0.02 * std::abs(slope));
  EXPECT_EQ(fit.points, 50);
}

TEST(RateFit, FloorTruncatesWindow) {
  const std::vector<zoq::Trajectory> runs{geometric_run(0.5, 100, 0.0, nullptr)};
  const auto fit = zoq::fit_log_linear_rate(runs);
  // 0.5^t drops below 1e-12 at t = 40.
  EXPECT_EQ(fit.points, 40 - 11);
  EXPECT_NEAR(fit.slope, std::log(0.5), 1e-10);
}

TEST(RateFit, Errors) {
  const std::vector<double> x{0, 1, 2};
  const std::vector<double> bad{1.0, 0.0, 0.5};
  EXPECT_THROW(zoq::fit_log_linear(x, bad), zoq::FitError);
  EXPECT_THROW(zoq::fit_log_linear(std::vector<double>{1.0}, std::vector<double>{1.0}), zoq::FitError);
  EXPECT_THROW(zoq::fit_log_linear_rate({}), zoq::FitError);
  const std::vector<zoq::Trajectory> uneven{geometric_run(0.9, 10, 0.0, nullptr), geometric_run(0.9, 12, 0.0, nullptr)};
  EXPECT_THROW(zoq::fit_log_linear_rate(uneven), zoq::FitError);
}

TEST(RunningStats, MergeEqualsSequential) {
  SeededRng rng(14);
  zoq::RunningStats all, left, right;
  for (int i = 0; i < 1000; ++i) {
    const double v = rng.gaussian() * 3 + 1;
    all.add(v);
    (i < 377 ? left : right).add(v);
  }
  left.merge(right);
  EXPECT_EQ(left.count(), all.count());
  EXPECT_NEAR(left.mean(), all.mean(), 1e-12);
  EXPECT_NEAR(left.variance(), all.variance(), 1e-10);
  zoq::RunningStats one;
  one.add(5.0);
  EXPECT_EQ(one.variance(), 0.0);
}

TEST(VectorStats, CoordinateMeans) {
  zoq::VectorStats s(2);
  s.add(Vec::Constant(2, 1.0));
  s.add(Vec::Constant(2, 3.0));
  EXPECT_EQ(s.mean(), Vec::Constant(2, 2.0));
  EXPECT_NEAR(s.stderr_mean()[0], 1.0, 1e-15);
}

TEST(StochasticGradient, SecondMomentInequality) {
  zoq::StochasticLogisticOptions opts;
  opts.dim = 10;
  const zoq::StochasticLogisticObjective obj(opts, 15);
  SeededRng rng(16);
  const auto sigma_hat = zoq::estimate_gradient_variance(obj, obj.expected_optimum().x, 10'000, rng);
  EXPECT_NEAR(sigma_hat.value, *obj.variance_bound(), 4 * sigma_hat.stderr_value);
  for (int k = 0; k < 100; ++k) {
    const Vec x = obj.expected_optimum().x + random_point(10, rng);
    const auto check = zoq::check_stochastic_gradient_bound(obj, x, sigma_hat.value, 10'000, rng);
    EXPECT_LE(check.mean_sq_norm, check.rhs + 3 * check.stderr_sq_norm) << "point " << k;
  }
}

TEST(ParallelFor, CoversEveryChunkAndRethrows) {
  std::vector<int> hits(50, 0);
  zoq::parallel_for_chunks(50, [&](int c) { hits[static_cast<std::size_t>(c)] += 1; }, 3);
  for (int h : hits) EXPECT_EQ(h, 1);
  EXPECT_THROW(zoq::parallel_for_chunks(
                   10, [](int c) { if (c == 4) throw zoq::NumericalError("boom"); }, 2),
               zoq::NumericalError);
}
