#include "zoq/bench/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

#include "zoq/analysis.hpp"
#include "zoq/objectives.hpp"
#include "zoq/optimizer.hpp"

namespace zoq::bench {

bool VerifyReport::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const VerifyCheck& c) { return c.pass; });
}

namespace {

constexpr int kDim = 20;

VerifyCheck statistical(std::string name, double empirical, double target, double se, double band) {
  VerifyCheck c;
  c.name = std::move(name);
  c.empirical = empirical;
  c.target = target;
  c.scale = se;
  c.z = z_score(empirical, target, se);
  c.band = band;
  c.pass = std::abs(c.z) <= band;
  return c;
}

VerifyCheck exact(std::string name, double value, double target) {
  VerifyCheck c;
  c.name = std::move(name);
  c.empirical = value;
  c.target = target;
  c.scale = 1e-12 * (1.0 + std::abs(target));
  c.z = (value - target) / c.scale;
  c.band = 1.0;
  c.pass = std::abs(c.z) <= 1.0;
  return c;
}

std::string label(EstimatorKind kind, int q) {
  return std::string(to_string(kind)) + " q=" + std::to_string(q);
}

}  // namespace

VerifyReport run_verify(const VerifyOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  VerifyReport report;
  const double extra = options.inject_wrong_constant ? 1.0 : 0.0;

  auto avg_mse = [&](int d, int q, double g2) { return (d + 1.0 + extra) / q * g2; };
  auto avg_second = [&](int d, int q, double g2) { return (q + d + 1.0 + extra) / q * g2; };
  auto mse_target = [&](EstimatorKind k, int d, int q, double g2) {
    return k == EstimatorKind::Align ? mse_closed_form(k, d, q, g2) : avg_mse(d, q, g2);
  };
  auto second_target = [&](EstimatorKind k, int d, int q, double g2) {
    return k == EstimatorKind::Align ? second_moment_closed_form(k, d, q, g2) : avg_second(d, q, g2);
  };

  report.checks.push_back(exact("closed form: avg mse d=10 q=1 |g|^2=1", avg_mse(10, 1, 1.0), 11.0));
  report.checks.push_back(
      exact("closed form: align mse d=10 q=1 |g|^2=1", mse_closed_form(EstimatorKind::Align, 10, 1, 1.0), 0.9));
  report.checks.push_back(exact("closed form: avg E|g|^2 d=20 q=5", avg_second(20, 5, 1.0), 5.2));

  SeededRng rng(options.seed);
  const QuadraticObjective quad = make_quadratic(kDim, 1.0, rng);
  Vec x(kDim);
  rng.fill_gaussian(std::span<double>(x.data(), kDim));

  const long n = options.quick ? 10'000 : 100'000;
  for (EstimatorKind kind : {EstimatorKind::Avg, EstimatorKind::Align}) {
    for (int q : {1, 5, 10, 20}) {
      SeededRng mc = rng.derive(static_cast<std::uint64_t>(q) * 2 + (kind == EstimatorKind::Align));
      const MomentReport rep = mse_monte_carlo(kind, quad, x, q, n, mc);
      const double g2 = rep.g_norm2;
      report.checks.push_back(statistical("mse " + label(kind, q), rep.mse,
                                          mse_target(kind, kDim, q, g2), rep.mse_stderr, 4.0));
      report.checks.push_back(statistical("E|g_hat|^2 " + label(kind, q), rep.norm2_mean,
                                          second_target(kind, kDim, q, g2), rep.norm2_stderr, 4.0));
      const double dist = (rep.mean - rep.mean_target).norm();
      const double spread = std::sqrt(rep.mean_stderr.squaredNorm());
      report.checks.push_back(statistical("|mean - factor*grad| " + label(kind, q), dist, 0.0, spread, 4.0));
    }
  }

  // Mean gap over replications against the strongly convex contraction bounds.
  const int reps = options.quick ? 20 : 100;
  const long budget = 400;
  SeededRng inst(options.seed, 1);
  const QuadraticObjective bq = make_quadratic(kDim, 1.0, inst);
  for (EstimatorKind kind : {EstimatorKind::Avg, EstimatorKind::Align}) {
    const bool align = kind == EstimatorKind::Align;
    const AllocationSchedule sched = align ? AllocationSchedule::full_subspace(budget)
                                           : AllocationSchedule::single_query(budget);
    EstimatorConfig cfg;
    cfg.kind = kind;
    cfg.mode = EstimatorMode::Idealized;
    const StepPolicy policy = align ? StepPolicy::align_optimal() : StepPolicy::avg_optimal();
    Vec x0(kDim);
    inst.fill_gaussian(std::span<double>(x0.data(), kDim));
    std::vector<Trajectory> runs(static_cast<std::size_t>(reps));
    parallel_for_chunks(
        reps,
        [&](int r) {
          SeededRng run_rng = inst.derive(1000 + static_cast<std::uint64_t>(r) * 2 + align);
          runs[static_cast<std::size_t>(r)] = run_deterministic(bq, cfg, sched, policy, x0, run_rng);
        },
        options.threads);
    const auto qs = allocation_expand(sched, kDim);
    const BoundCurve bound = bound_curve(align ? BoundKind::AlignStronglyConvex : BoundKind::AvgStronglyConvex,
                                         bound_constants_for(bq, x0), qs);
    double worst = -std::numeric_limits<double>::infinity();
    RunningStats last;
    for (std::size_t t = 0; t < bound.values.size(); ++t) {
      RunningStats s;
      for (const auto& run : runs) s.add(run.rows[t].gap);
      const double se = std::max(s.stderr_mean(), 1e-300);
      worst = std::max(worst, (s.mean() - bound.values[t]) / se);
      if (t + 1 == bound.values.size()) last = s;
    }
    VerifyCheck c;
    c.name = std::string("mean gap <= contraction bound, ") + (align ? "align full" : "avg single");
    c.empirical = last.mean();
    c.target = bound.values.back();
    c.scale = last.stderr_mean();
    c.z = worst;
    c.band = 3.0;
    c.pass = worst <= 3.0;
    report.checks.push_back(c);
  }

  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

void print_verify_report(const VerifyReport& report, std::ostream& out) {
  char line[256];
  std::snprintf(line, sizeof line, "%-48s %14s %14s %10s %6s  %s\n", "check", "empirical", "target",
                "z", "band", "result");
  out << line;
  for (const auto& c : report.checks) {
    std::snprintf(line, sizeof line, "%-48s %14.6g %14.6g %10.3g %6.1f  %s\n", c.name.c_str(),
                  c.empirical, c.target, c.z, c.band, c.pass ? "PASS" : "FAIL");
    out << line;
  }
  int failed = 0;
  for (const auto& c : report.checks) failed += c.pass ? 0 : 1;
  std::snprintf(line, sizeof line, "%zu checks, %d failed, %.1f s\n", report.checks.size(), failed,
                report.seconds);
  out << line;
  if (failed) {
    out << "failures:\n";
    for (const auto& c : report.checks) {
      if (!c.pass) out << "  " << c.name << '\n';
    }
  }
}

}  // namespace zoq::bench
