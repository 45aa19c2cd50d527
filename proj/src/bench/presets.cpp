#include "zoq/bench/presets.hpp"

#include <algorithm>

namespace zoq::bench {

namespace {

constexpr std::uint64_t kPresetSeed = 20240601;

ComboConfig combo(EstimatorKind kind, int q, std::vector<long> budgets = {}) {
  ComboConfig c;
  c.estimator = kind;
  c.q = q;
  c.schedule = ScheduleKind::Constant;
  c.label = std::string(to_string(kind)) + "_q" + std::to_string(q);
  c.budgets = std::move(budgets);
  return c;
}

/// Avg and Align at every q in qs; block sizes above a budget only run at the
/// budgets that can afford them.
std::vector<ComboConfig> sweep(const std::vector<int>& qs, const std::vector<long>& budgets) {
  std::vector<ComboConfig> out;
  for (EstimatorKind kind : {EstimatorKind::Avg, EstimatorKind::Align}) {
    for (int q : qs) {
      std::vector<long> ok;
      for (long k : budgets) {
        if (k >= q) ok.push_back(k);
      }
      if (ok.empty()) continue;
      out.push_back(combo(kind, q, ok.size() == budgets.size() ? std::vector<long>{} : ok));
    }
  }
  return out;
}

ExperimentConfig base(const std::string& name, ObjectiveKind kind, int dim,
                      std::vector<long> budgets) {
  ExperimentConfig cfg;
  cfg.name = name;
  cfg.source = "preset " + name;
  cfg.seed = kPresetSeed;
  cfg.replications = 10;
  cfg.budgets = std::move(budgets);
  cfg.output_dir = "out/" + name;
  cfg.objective.kind = kind;
  cfg.objective.dim = dim;
  return cfg;
}

}  // namespace

std::vector<PresetInfo> list_presets() {
  return {
      {"fig1", "strongly convex quadratic, A = MtM + 2d*I, d=100, K in {2000, 500}"},
      {"fig1-constrained", "quadratic with K < d: d=600, K=500, Align up to q=500"},
      {"fig2", "convex logistic regression on separable synthetic data, d=100, m=10d"},
      {"fig3", "non-convex Rosenbrock from (-1.2, 1, ...), d=100"},
      {"fig4", "stochastic regularized logistic, d=50, batch 10, rho=0.1, K in {5000, 500}"},
  };
}

ExperimentConfig make_preset(const std::string& name, bool paper_scale) {
  const int d = paper_scale ? 1000 : 100;
  const std::vector<long> budgets = paper_scale ? std::vector<long>{20000, 500}
                                                : std::vector<long>{2000, 500};
  const std::vector<int> qs = paper_scale ? std::vector<int>{1, 10, 100, 1000}
                                          : std::vector<int>{1, 10, 100};
  ExperimentConfig cfg;
  if (name == "fig1") {
    cfg = base(name, ObjectiveKind::Quadratic, d, budgets);
    cfg.objective.eps = 2.0 * d;
    cfg.combos = sweep(qs, budgets);
  } else if (name == "fig1-constrained") {
    const int dc = paper_scale ? 1000 : 600;
    cfg = base(name, ObjectiveKind::Quadratic, dc, {500});
    cfg.objective.eps = 2.0 * dc;
    cfg.combos = sweep({1, 10, 100, 500}, {500});
  } else if (name == "fig2") {
    cfg = base(name, ObjectiveKind::Logistic, d, budgets);
    cfg.combos = sweep(qs, budgets);
  } else if (name == "fig3") {
    cfg = base(name, ObjectiveKind::Rosenbrock, d, budgets);
    cfg.combos = sweep(qs, budgets);
  } else if (name == "fig4") {
    const int ds = paper_scale ? 1000 : 50;
    const std::vector<long> bs = paper_scale ? std::vector<long>{20000, 500}
                                             : std::vector<long>{5000, 500};
    cfg = base(name, ObjectiveKind::StochasticLogistic, ds, bs);
    cfg.combos = sweep(paper_scale ? std::vector<int>{1, 10, 100, 1000} : std::vector<int>{1, 10, 50}, bs);
  } else {
    throw ConfigError("unknown preset '" + name + "' (see 'zoq presets list')");
  }
  if (paper_scale) {
    // Largest block that fits the constrained budget.
    if (name != "fig1-constrained") cfg.combos.push_back(combo(EstimatorKind::Align, 500, {500}));
    // The forward-difference remainder is about h·tr(A)/2, which is O(1) at
    // d=1000 with the default step and swamps the q=d Align iterates.
    if (cfg.objective.kind == ObjectiveKind::Quadratic) {
      for (auto& c : cfg.combos) c.smoothing = 1e-9;
    }
    cfg.name += "-paper";
    cfg.output_dir = "out/" + cfg.name;
  }
  return cfg;
}

}  // namespace zoq::bench
