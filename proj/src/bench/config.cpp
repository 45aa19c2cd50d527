#include "zoq/bench/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "zoq/objectives.hpp"

namespace zoq::bench {

std::string_view to_string(ObjectiveKind kind) {
  switch (kind) {
    case ObjectiveKind::Quadratic: return "quadratic";
    case ObjectiveKind::Logistic: return "logistic";
    case ObjectiveKind::Rosenbrock: return "rosenbrock";
    case ObjectiveKind::StochasticLogistic: return "stochastic_logistic";
  }
  return "?";
}

bool ComboConfig::runs_at(long budget) const {
  return budgets.empty() || std::find(budgets.begin(), budgets.end(), budget) != budgets.end();
}

AllocationSchedule ComboConfig::schedule_for(long budget) const {
  switch (schedule) {
    case ScheduleKind::Constant: return AllocationSchedule::constant(q, budget);
    case ScheduleKind::Single: return AllocationSchedule::single_query(budget);
    case ScheduleKind::Full: return AllocationSchedule::full_subspace(budget);
    case ScheduleKind::Custom: return AllocationSchedule::custom_list(custom, budget);
  }
  return AllocationSchedule::constant(q, budget);
}

EstimatorConfig ComboConfig::estimator_config() const {
  EstimatorConfig cfg;
  cfg.kind = estimator;
  cfg.mode = mode;
  cfg.smoothing = smoothing;
  cfg.q = q;
  return cfg;
}

namespace {

constexpr std::uint64_t kInitialPointStream = 0x5eed0;

class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& node, const std::string& msg) const {
    const auto mark = node.Mark();
    const int line = mark.line >= 0 ? mark.line + 1 : 0;
    throw ConfigError(source_ + ":" + std::to_string(line) + ": " + msg);
  }

  int line(const YAML::Node& node) const { return node.Mark().line + 1; }

  void only_keys(const YAML::Node& map, std::initializer_list<const char*> allowed,
                 const std::string& where) const {
    if (!map.IsMap()) fail(map, where + " must be a mapping");
    for (const auto& kv : map) {
      const auto key = kv.first.as<std::string>();
      if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
        fail(kv.first, "unknown key '" + key + "' in " + where);
      }
    }
  }

  template <typename T>
  T scalar(const YAML::Node& node, const std::string& key) const {
    if (!node.IsScalar()) fail(node, "'" + key + "' must be a scalar");
    try {
      return node.as<T>();
    } catch (const YAML::Exception&) {
      fail(node, "'" + key + "' has an invalid value '" + node.Scalar() + "'");
    }
  }

  template <typename T>
  std::vector<T> list(const YAML::Node& node, const std::string& key) const {
    if (node.IsScalar()) return {scalar<T>(node, key)};
    if (!node.IsSequence()) fail(node, "'" + key + "' must be a list");
    std::vector<T> out;
    for (const auto& item : node) out.push_back(scalar<T>(item, key));
    return out;
  }

  std::string lower(const YAML::Node& node, const std::string& key) const {
    auto s = scalar<std::string>(node, key);
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
  }

  const std::string& source() const { return source_; }

 private:
  std::string source_;
};

ObjectiveConfig parse_objective(const Reader& r, const YAML::Node& node) {
  r.only_keys(node, {"kind", "dim", "eps", "samples", "batch_size", "rho", "seed"}, "objective");
  ObjectiveConfig o;
  if (!node["kind"]) r.fail(node, "objective needs a 'kind'");
  const std::string kind = r.lower(node["kind"], "kind");
  if (kind == "quadratic") o.kind = ObjectiveKind::Quadratic;
  else if (kind == "logistic") o.kind = ObjectiveKind::Logistic;
  else if (kind == "rosenbrock") o.kind = ObjectiveKind::Rosenbrock;
  else if (kind == "stochastic_logistic") o.kind = ObjectiveKind::StochasticLogistic;
  else r.fail(node["kind"], "unknown objective kind '" + kind + "'");

  if (node["dim"]) o.dim = r.scalar<int>(node["dim"], "dim");
  if (node["eps"]) o.eps = r.scalar<double>(node["eps"], "eps");
  if (node["samples"]) o.samples = r.scalar<int>(node["samples"], "samples");
  if (node["batch_size"]) o.batch_size = r.scalar<int>(node["batch_size"], "batch_size");
  if (node["rho"]) o.rho = r.scalar<double>(node["rho"], "rho");
  if (node["seed"]) o.seed = r.scalar<std::uint64_t>(node["seed"], "seed");

  const int min_dim = o.kind == ObjectiveKind::Rosenbrock ? 2 : 1;
  if (o.dim < min_dim) r.fail(node, "objective dim must be >= " + std::to_string(min_dim));
  if (!(o.eps > 0.0)) r.fail(node, "objective eps must be positive");
  if (o.samples < 0) r.fail(node, "objective samples must be >= 0");
  if (o.batch_size < 1) r.fail(node, "objective batch_size must be >= 1");
  if (!(o.rho > 0.0)) r.fail(node, "objective rho must be positive");
  return o;
}

ComboConfig parse_combo(const Reader& r, const YAML::Node& node) {
  r.only_keys(node,
              {"label", "estimator", "mode", "smoothing", "schedule", "q", "custom", "step", "eta0",
               "budgets"},
              "combo");
  ComboConfig c;
  c.line = r.line(node);
  if (!node["estimator"]) r.fail(node, "combo needs an 'estimator'");
  const std::string est = r.lower(node["estimator"], "estimator");
  if (est == "avg") c.estimator = EstimatorKind::Avg;
  else if (est == "align") c.estimator = EstimatorKind::Align;
  else if (est == "single") c.estimator = EstimatorKind::Single;
  else r.fail(node["estimator"], "unknown estimator '" + est + "' (expected avg, align or single)");

  if (node["mode"]) {
    const std::string mode = r.lower(node["mode"], "mode");
    if (mode == "finite_difference") c.mode = EstimatorMode::FiniteDifference;
    else if (mode == "idealized") c.mode = EstimatorMode::Idealized;
    else r.fail(node["mode"], "unknown mode '" + mode + "' (expected finite_difference or idealized)");
  }
  if (node["smoothing"]) {
    c.smoothing = r.scalar<double>(node["smoothing"], "smoothing");
    if (!(*c.smoothing > 0.0)) r.fail(node["smoothing"], "smoothing must be positive");
  }
  if (node["q"]) c.q = r.scalar<int>(node["q"], "q");
  if (c.estimator == EstimatorKind::Single) {
    c.q = 1;
    c.schedule = ScheduleKind::Single;
  }
  if (node["schedule"]) {
    const std::string s = r.lower(node["schedule"], "schedule");
    if (s == "constant") c.schedule = ScheduleKind::Constant;
    else if (s == "single") c.schedule = ScheduleKind::Single;
    else if (s == "full") c.schedule = ScheduleKind::Full;
    else if (s == "custom") c.schedule = ScheduleKind::Custom;
    else r.fail(node["schedule"], "unknown schedule '" + s + "' (expected constant, single, full or custom)");
  }
  if (node["custom"]) {
    c.custom = r.list<int>(node["custom"], "custom");
    if (!node["schedule"]) c.schedule = ScheduleKind::Custom;
  }
  if (c.schedule == ScheduleKind::Custom && c.custom.empty()) {
    r.fail(node, "custom schedule needs a non-empty 'custom' list");
  }
  if (c.schedule == ScheduleKind::Single) c.q = 1;
  if (c.schedule == ScheduleKind::Constant && c.q < 1) r.fail(node, "q must be >= 1");

  if (node["step"]) {
    const std::string s = r.lower(node["step"], "step");
    if (s == "auto") c.step.reset();
    else if (s == "avg_optimal") c.step = StepKind::AvgOptimal;
    else if (s == "align_optimal") c.step = StepKind::AlignOptimal;
    else if (s == "diminishing_sqrt") c.step = StepKind::DiminishingSqrt;
    else r.fail(node["step"], "unknown step rule '" + s + "'");
  }
  if (node["eta0"]) {
    c.eta0 = r.scalar<double>(node["eta0"], "eta0");
    if (!(*c.eta0 > 0.0)) r.fail(node["eta0"], "eta0 must be positive");
  }
  if (node["budgets"]) c.budgets = r.list<long>(node["budgets"], "budgets");

  if (node["label"]) {
    c.label = r.scalar<std::string>(node["label"], "label");
  } else {
    c.label = std::string(to_string(c.estimator));
    switch (c.schedule) {
      case ScheduleKind::Constant: c.label += "_q" + std::to_string(c.q); break;
      case ScheduleKind::Single: c.label += "_single"; break;
      case ScheduleKind::Full: c.label += "_full"; break;
      case ScheduleKind::Custom: c.label += "_custom"; break;
    }
  }
  if (c.label.empty() ||
      c.label.find_first_not_of("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_-.") !=
          std::string::npos) {
    r.fail(node, "combo label '" + c.label + "' may only use letters, digits, '_', '-' and '.'");
  }
  return c;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
  const Reader r(source);
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(source + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  if (!root || root.IsNull()) throw ConfigError(source + ":1: empty configuration");
  r.only_keys(root,
              {"name", "seed", "replications", "budgets", "output", "objective", "combos", "threads"},
              "the top level");

  ExperimentConfig cfg;
  cfg.source = source;
  if (root["name"]) cfg.name = r.scalar<std::string>(root["name"], "name");
  if (root["seed"]) cfg.seed = r.scalar<std::uint64_t>(root["seed"], "seed");
  if (root["replications"]) cfg.replications = r.scalar<int>(root["replications"], "replications");
  if (root["threads"]) cfg.threads = r.scalar<int>(root["threads"], "threads");
  if (root["output"]) cfg.output_dir = r.scalar<std::string>(root["output"], "output");
  if (cfg.replications < 1) r.fail(root["replications"], "replications must be >= 1");
  if (cfg.threads < 0) r.fail(root["threads"], "threads must be >= 0");

  if (!root["budgets"]) r.fail(root, "missing 'budgets'");
  cfg.budgets = r.list<long>(root["budgets"], "budgets");
  if (cfg.budgets.empty()) r.fail(root["budgets"], "'budgets' is empty");
  for (long k : cfg.budgets) {
    if (k < 1) r.fail(root["budgets"], "every budget must be >= 1");
  }

  if (!root["objective"]) r.fail(root, "missing 'objective'");
  cfg.objective = parse_objective(r, root["objective"]);

  if (!root["combos"]) r.fail(root, "missing 'combos'");
  const YAML::Node combos = root["combos"];
  if (!combos.IsSequence() || combos.size() == 0) r.fail(combos, "'combos' must be a non-empty list");
  std::set<std::string> labels;
  for (const auto& node : combos) {
    ComboConfig c = parse_combo(r, node);
    if (!labels.insert(c.label).second) r.fail(node, "duplicate combo label '" + c.label + "'");
    for (long k : c.budgets) {
      if (std::find(cfg.budgets.begin(), cfg.budgets.end(), k) == cfg.budgets.end()) {
        r.fail(node["budgets"], "combo budget " + std::to_string(k) + " is not in the top-level budgets");
      }
    }
    cfg.combos.push_back(std::move(c));
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string() + ":0: cannot open file");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path.string());
}

void apply_seed_override(ExperimentConfig& cfg) {
  const char* env = std::getenv("ZOQ_SEED");
  if (!env || !*env) return;
  const std::string s(env);
  if (s.find_first_not_of("0123456789") != std::string::npos || s.size() > 20) {
    throw ConfigError("ZOQ_SEED must be a non-negative integer, got '" + s + "'");
  }
  try {
    cfg.seed = std::stoull(s);
  } catch (const std::exception&) {
    throw ConfigError("ZOQ_SEED is out of range: '" + s + "'");
  }
}

std::unique_ptr<Objective> build_objective(const ObjectiveConfig& cfg, std::uint64_t seed) {
  SeededRng rng(seed);
  switch (cfg.kind) {
    case ObjectiveKind::Quadratic:
      return std::make_unique<QuadraticObjective>(make_quadratic(cfg.dim, cfg.eps, rng));
    case ObjectiveKind::Logistic: {
      const int m = cfg.samples > 0 ? cfg.samples : 10 * cfg.dim;
      return std::make_unique<LogisticObjective>(make_logistic(m, cfg.dim, rng));
    }
    case ObjectiveKind::Rosenbrock:
      return std::make_unique<RosenbrockObjective>(make_rosenbrock(cfg.dim, rng));
    case ObjectiveKind::StochasticLogistic: {
      StochasticLogisticOptions opts;
      opts.dim = cfg.dim;
      opts.batch_size = cfg.batch_size;
      opts.rho = cfg.rho;
      opts.pool_size = cfg.samples;
      return std::make_unique<StochasticLogisticObjective>(opts, seed);
    }
  }
  throw ConfigError("unknown objective kind");
}

Vec initial_point(const ExperimentConfig& cfg, int replication) {
  const int d = cfg.objective.dim;
  if (cfg.objective.kind == ObjectiveKind::Rosenbrock) return rosenbrock_start(d);
  SeededRng rng = SeededRng(cfg.seed, kInitialPointStream).derive(static_cast<std::uint64_t>(replication));
  Vec x(d);
  rng.fill_gaussian(std::span<double>(x.data(), static_cast<std::size_t>(d)));
  return x;
}

StepPolicy resolve_policy(const ComboConfig& combo, const Objective& obj, bool stochastic) {
  StepKind kind;
  if (combo.step) kind = *combo.step;
  else if (stochastic) kind = StepKind::DiminishingSqrt;
  else kind = combo.estimator == EstimatorKind::Align ? StepKind::AlignOptimal : StepKind::AvgOptimal;
  if (kind == StepKind::DiminishingSqrt) {
    return StepPolicy::diminishing_sqrt(combo.eta0.value_or(1.0 / (4.0 * obj.smoothness())));
  }
  return {kind, 0.0};
}

void validate(const ExperimentConfig& cfg, const Objective& obj) {
  const bool stochastic = cfg.objective.kind == ObjectiveKind::StochasticLogistic;
  const int d = obj.dim();
  for (const auto& combo : cfg.combos) {
    const std::string where = cfg.source + ":" + std::to_string(combo.line) + ": combo '" + combo.label + "'";
    try {
      const StepPolicy policy = resolve_policy(combo, obj, stochastic);
      if (stochastic && policy.kind != StepKind::DiminishingSqrt) {
        throw ConfigError("stochastic objectives use the diminishing_sqrt step rule");
      }
      validate_policy(policy, combo.estimator, obj.smoothness());
      bool any = false;
      for (long k : cfg.budgets) {
        if (!combo.runs_at(k)) continue;
        any = true;
        const AllocationSchedule sched = combo.schedule_for(k);
        const int nominal = sched.nominal_q(d);
        if (sched.kind != AllocationKind::Custom && k < nominal) {
          throw ConfigError("budget K=" + std::to_string(k) + " is smaller than one block of " +
                            std::to_string(nominal) + " queries");
        }
        const auto qs = allocation_expand(sched, d);
        if (combo.estimator == EstimatorKind::Single &&
            std::any_of(qs.begin(), qs.end(), [](int q) { return q != 1; })) {
          throw ConfigError("the single estimator needs q = 1");
        }
      }
      if (!any) throw ConfigError("runs at none of the budgets");
    } catch (const ConfigError& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }
}

}  // namespace zoq::bench
