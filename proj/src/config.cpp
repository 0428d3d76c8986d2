#include "gpc/config.hpp"

#include <algorithm>
#include <stdexcept>
#include <utility>

#include <json.hpp>

#include "gpc/rng.hpp"
#include "gpc/sampler.hpp"
#include "gpc/util.hpp"

namespace gpc {

namespace {

using Json = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError("config: " + path + ": " + what);
}

void check_keys(const Json& obj, const std::vector<std::string>& allowed,
                const std::string& path) {
  if (!obj.is_object()) fail(path, "expected an object");
  for (const auto& item : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
      fail(path, "unknown field '" + item.key() + "'");
    }
  }
}

const Json& require(const Json& obj, const std::string& key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(path, "missing field '" + key + "'");
  return *it;
}

double get_number(const Json& obj, const std::string& key, const std::string& path) {
  const Json& v = require(obj, key, path);
  if (!v.is_number()) fail(path + "." + key, "expected a number");
  return v.get<double>();
}

double get_number_or(const Json& obj, const std::string& key, double fallback,
                     const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  if (!it->is_number()) fail(path + "." + key, "expected a number");
  return it->get<double>();
}

int get_int(const Json& obj, const std::string& key, int fallback, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  if (!it->is_number_integer()) fail(path + "." + key, "expected an integer");
  return it->get<int>();
}

std::string get_string(const Json& obj, const std::string& key, const std::string& path) {
  const Json& v = require(obj, key, path);
  if (!v.is_string()) fail(path + "." + key, "expected a string");
  return v.get<std::string>();
}

Eigen::VectorXd parse_vector(const Json& v, const std::string& path) {
  if (!v.is_array()) fail(path, "expected an array of numbers");
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) fail(path, "expected an array of numbers");
    out[static_cast<Eigen::Index>(i)] = v[i].get<double>();
  }
  return out;
}

Eigen::MatrixXd parse_matrix(const Json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) fail(path, "expected an array of row arrays");
  const std::size_t rows = v.size();
  std::size_t cols = 0;
  Eigen::MatrixXd out;
  for (std::size_t i = 0; i < rows; ++i) {
    const Eigen::VectorXd row = parse_vector(v[i], path);
    if (i == 0) {
      cols = static_cast<std::size_t>(row.size());
      out.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    } else if (static_cast<std::size_t>(row.size()) != cols) {
      fail(path, "ragged matrix rows");
    }
    out.row(static_cast<Eigen::Index>(i)) = row.transpose();
  }
  return out;
}

Json dump_vector(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Json dump_matrix(const Eigen::MatrixXd& m) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(dump_vector(m.row(i).transpose()));
  return out;
}

GaussianMixture parse_mixture(const Json& v, const std::string& path) {
  check_keys(v, {"components"}, path);
  const Json& comps = require(v, "components", path);
  if (!comps.is_array() || comps.empty()) fail(path + ".components", "expected a nonempty array");
  std::vector<MixtureComponent> components;
  components.reserve(comps.size());
  for (std::size_t i = 0; i < comps.size(); ++i) {
    const std::string cpath = path + ".components[" + std::to_string(i) + "]";
    check_keys(comps[i], {"weight", "mean", "cov"}, cpath);
    MixtureComponent c;
    c.weight = get_number_or(comps[i], "weight", 1.0, cpath);
    c.mean = parse_vector(require(comps[i], "mean", cpath), cpath + ".mean");
    c.cov = parse_matrix(require(comps[i], "cov", cpath), cpath + ".cov");
    components.push_back(std::move(c));
  }
  try {
    return GaussianMixture(std::move(components));
  } catch (const std::exception& e) {
    fail(path, e.what());
  }
}

Json dump_mixture(const GaussianMixture& mix) {
  Json comps = Json::array();
  for (const MixtureComponent& c : mix.components()) {
    Json jc;
    jc["weight"] = c.weight;
    jc["mean"] = dump_vector(c.mean);
    jc["cov"] = dump_matrix(c.cov);
    comps.push_back(std::move(jc));
  }
  Json out;
  out["components"] = std::move(comps);
  return out;
}

BiasSpec parse_bias(const Json& v, const std::string& path) {
  check_keys(v, {"kind", "vector", "matrix"}, path);
  const std::string kind = get_string(v, "kind", path);
  if (kind == "none") return BiasSpec::none();
  if (kind == "constant") {
    return BiasSpec::constant(parse_vector(require(v, "vector", path), path + ".vector"));
  }
  if (kind == "linear") {
    return BiasSpec::linear(parse_matrix(require(v, "matrix", path), path + ".matrix"));
  }
  if (kind == "mean-shift") {
    return BiasSpec::mean_shift(parse_vector(require(v, "vector", path), path + ".vector"));
  }
  fail(path + ".kind", "unknown bias kind '" + kind + "'");
}

Json dump_bias(const BiasSpec& bias) {
  Json out;
  switch (bias.kind) {
    case BiasKind::none:
      out["kind"] = "none";
      break;
    case BiasKind::constant:
      out["kind"] = "constant";
      out["vector"] = dump_vector(bias.vector);
      break;
    case BiasKind::linear:
      out["kind"] = "linear";
      out["matrix"] = dump_matrix(bias.matrix);
      break;
    case BiasKind::mean_shift:
      out["kind"] = "mean-shift";
      out["vector"] = dump_vector(bias.vector);
      break;
  }
  return out;
}

NoiseSpec parse_noise(const Json& v, const std::string& path) {
  check_keys(v, {"kind", "cov"}, path);
  const std::string kind = get_string(v, "kind", path);
  if (kind == "none") return NoiseSpec::none();
  if (kind == "gaussian") {
    return NoiseSpec::gaussian(parse_matrix(require(v, "cov", path), path + ".cov"));
  }
  fail(path + ".kind", "unknown noise kind '" + kind + "'");
}

Json dump_noise(const NoiseSpec& noise) {
  Json out;
  if (noise.kind == NoiseKind::none) {
    out["kind"] = "none";
  } else {
    out["kind"] = "gaussian";
    out["cov"] = dump_matrix(noise.cov);
  }
  return out;
}

std::string freshness_name(NoiseFreshness f) {
  return f == NoiseFreshness::per_call ? "per-call" : "frozen-per-trajectory";
}

NoiseFreshness parse_freshness(const std::string& name, const std::string& path) {
  if (name == "per-call") return NoiseFreshness::per_call;
  if (name == "frozen-per-trajectory") return NoiseFreshness::frozen_per_trajectory;
  fail(path, "unknown freshness '" + name + "'");
}

Eigen::MatrixXd scaled_identity(double s, Eigen::Index dim) {
  return s * Eigen::MatrixXd::Identity(dim, dim);
}

}  // namespace

NoiseSchedule ExperimentConfig::schedule() const {
  return NoiseSchedule::make(schedule_kind, beta_min, beta_max);
}

const GaussianMixture& ExperimentConfig::mixture(const std::string& name) const {
  auto it = mixtures.find(name);
  if (it == mixtures.end()) throw ConfigError("config: unknown mixture '" + name + "'");
  return it->second;
}

EstimatorSpec ExperimentConfig::estimator_spec(const std::string& name) const {
  auto it = estimators.find(name);
  if (it == estimators.end()) throw ConfigError("config: unknown estimator '" + name + "'");
  const EstimatorConfig& c = it->second;
  return EstimatorSpec{mixture(c.base), c.bias, c.noise, c.freshness};
}

EstimatorPairSpec ExperimentConfig::pair_spec() const {
  return EstimatorPairSpec{estimator_spec(pair.first), estimator_spec(pair.second),
                           pair.noise_correlation};
}

std::vector<ScoreField> ExperimentConfig::member_fields(std::uint64_t seed_base) const {
  const NoiseSchedule sched = schedule();
  std::vector<ScoreField> fields;
  fields.reserve(composition.members.size());
  for (std::size_t i = 0; i < composition.members.size(); ++i) {
    const std::string& name = composition.members[i];
    if (estimators.count(name) != 0) {
      fields.push_back(
          make_estimator(estimator_spec(name), sched, derive_key(seed_base, i + 1)));
    } else if (mixtures.count(name) != 0) {
      fields.push_back(oracle_field(mixture(name), sched));
    } else {
      throw ConfigError("config: composition member '" + name +
                        "' is neither an estimator nor a mixture");
    }
  }
  return fields;
}

ScoreField ExperimentConfig::composed_field(std::uint64_t seed_base) const {
  CompositionSpec spec;
  spec.op = composition.op;
  spec.weights = composition.weights;
  spec.temperature = composition.temperature;
  spec.offset = composition.offset;
  std::optional<ScoreField> uncond;
  const NoiseSchedule sched = schedule();
  if (composition.uncond) {
    const std::string& name = *composition.uncond;
    if (estimators.count(name) != 0) {
      uncond = make_estimator(estimator_spec(name), sched, derive_key(seed_base, 0x0c));
    } else if (mixtures.count(name) != 0) {
      uncond = oracle_field(mixture(name), sched);
    } else {
      throw ConfigError("config: cfg anchor '" + name + "' is neither an estimator nor a mixture");
    }
  }
  std::optional<OdeDynamics> dynamics;
  if (spec.op == CompositionOperator::logical_and) dynamics = reverse_ode(sched);
  return compose_field(spec, member_fields(seed_base), std::move(uncond), std::move(dynamics));
}

BenchTask ExperimentConfig::bench_task() const {
  BenchTask bt{task.target, task.radius, mixture(task.data_law), task.horizon, task.metric};
  return bt;
}

ExperimentConfig default_config() {
  ExperimentConfig c;
  c.schema_version = 1;
  c.seed = 42;
  c.workers = 0;
  c.output_dir = "out";
  c.schedule_kind = ScheduleKind::vp_linear;
  c.beta_min = 0.1;
  c.beta_max = 20.0;
  c.solver = SolverConfig{Solver::ddim, 100};

  const Eigen::Index d = 2;
  c.mixtures.emplace("unit", GaussianMixture::single(Eigen::VectorXd::Zero(d),
                                                     scaled_identity(1.0, d)));
  c.mixtures.emplace("target", GaussianMixture::single(Eigen::VectorXd::Zero(d),
                                                       scaled_identity(0.01, d)));

  Eigen::VectorXd e1 = Eigen::VectorXd::Zero(d);
  e1[0] = 1.0;

  // Unbiased estimators with independent isotropic noise of variance 1 and 4:
  // the default single-step MSE pair (optimum at w = 0.8).
  EstimatorConfig noisy1{"unit", BiasSpec::none(), NoiseSpec::gaussian(scaled_identity(1.0, d)),
                         NoiseFreshness::per_call};
  EstimatorConfig noisy2{"unit", BiasSpec::none(), NoiseSpec::gaussian(scaled_identity(4.0, d)),
                         NoiseFreshness::per_call};
  c.estimators.emplace("noisy1", std::move(noisy1));
  c.estimators.emplace("noisy2", std::move(noisy2));

  // Deterministic perturbations for the trajectory-stability suites: a lone
  // constant bias of norm 0.1, and an opposing-sign pair whose midpoint
  // cancels exactly.
  c.estimators.emplace("biased", EstimatorConfig{"unit", BiasSpec::constant(0.1 * e1),
                                                 NoiseSpec::none(), NoiseFreshness::per_call});
  c.estimators.emplace("plus", EstimatorConfig{"unit", BiasSpec::constant(0.1 * e1),
                                               NoiseSpec::none(), NoiseFreshness::per_call});
  c.estimators.emplace("minus", EstimatorConfig{"unit", BiasSpec::constant(-0.1 * e1),
                                                NoiseSpec::none(), NoiseFreshness::per_call});

  // Opposing mean-shift policies around the tight data law: the bench pair
  // whose convex midpoint is the only member that actually reaches the target.
  c.estimators.emplace("left", EstimatorConfig{"target", BiasSpec::mean_shift(1.2 * e1),
                                               NoiseSpec::none(), NoiseFreshness::per_call});
  c.estimators.emplace("right", EstimatorConfig{"target", BiasSpec::mean_shift(-1.2 * e1),
                                                NoiseSpec::none(), NoiseFreshness::per_call});

  c.pair = PairConfig{"noisy1", "noisy2", 0.0};
  c.composition.op = CompositionOperator::convex;
  c.composition.members = {"left", "right"};
  c.composition.weights = {0.5, 0.5};

  c.task.target = Eigen::VectorXd::Zero(d);
  c.task.radius = 0.3;
  c.task.data_law = "target";
  c.task.horizon = 100;
  c.task.metric = BenchMetric::success_rate;

  c.theory.gronwall_estimator = "biased";
  c.theory.corollary_first = "plus";
  c.theory.corollary_second = "minus";
  c.theory.n_steps = 1000;
  c.theory.n_pairs = 100;
  c.theory.prop1_t = 0.5;
  c.theory.prop1_x = Eigen::VectorXd::Zero(d);
  c.theory.prop1_x[0] = 0.3;
  c.theory.prop1_x[1] = -0.2;
  c.theory.prop1_n_mc = 200000;

  c.sweep = SweepConfig{0.1, 500};
  return c;
}

ExperimentConfig parse_config(const std::string& json_text) {
  Json doc;
  try {
    doc = Json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  check_keys(doc,
             {"schema_version", "seed", "workers", "output_dir", "schedule", "solver", "mixtures",
              "estimators", "pair", "composition", "task", "theory", "sweep"},
             "$");

  ExperimentConfig c;
  c.schema_version = get_int(doc, "schema_version", 1, "$");
  if (c.schema_version != 1) fail("$.schema_version", "unsupported schema version");
  {
    auto it = doc.find("seed");
    if (it != doc.end()) {
      if (!it->is_number_unsigned() && !it->is_number_integer()) {
        fail("$.seed", "expected a nonnegative integer");
      }
      if (it->is_number_integer() && it->get<long long>() < 0) {
        fail("$.seed", "expected a nonnegative integer");
      }
      c.seed = it->get<std::uint64_t>();
    }
  }
  c.workers = get_int(doc, "workers", 0, "$");
  if (c.workers < 0) fail("$.workers", "must be >= 0");
  if (doc.contains("output_dir")) c.output_dir = get_string(doc, "output_dir", "$");

  if (doc.contains("schedule")) {
    const Json& s = doc["schedule"];
    check_keys(s, {"kind", "beta_min", "beta_max"}, "$.schedule");
    try {
      c.schedule_kind = schedule_kind_from_string(get_string(s, "kind", "$.schedule"));
    } catch (const std::exception& e) {
      fail("$.schedule.kind", e.what());
    }
    c.beta_min = get_number_or(s, "beta_min", c.beta_min, "$.schedule");
    c.beta_max = get_number_or(s, "beta_max", c.beta_max, "$.schedule");
  }
  if (doc.contains("solver")) {
    const Json& s = doc["solver"];
    check_keys(s, {"name", "steps"}, "$.solver");
    try {
      c.solver.name = solver_from_string(get_string(s, "name", "$.solver"));
    } catch (const std::exception& e) {
      fail("$.solver.name", e.what());
    }
    c.solver.steps = get_int(s, "steps", c.solver.steps, "$.solver");
    if (c.solver.steps < 1) fail("$.solver.steps", "must be >= 1");
  }

  if (doc.contains("mixtures")) {
    if (!doc["mixtures"].is_object()) fail("$.mixtures", "expected an object");
    for (const auto& item : doc["mixtures"].items()) {
      c.mixtures.emplace(item.key(), parse_mixture(item.value(), "$.mixtures." + item.key()));
    }
  }
  if (doc.contains("estimators")) {
    if (!doc["estimators"].is_object()) fail("$.estimators", "expected an object");
    for (const auto& item : doc["estimators"].items()) {
      const std::string path = "$.estimators." + item.key();
      const Json& v = item.value();
      check_keys(v, {"base", "bias", "noise", "freshness"}, path);
      EstimatorConfig ec;
      ec.base = get_string(v, "base", path);
      if (v.contains("bias")) ec.bias = parse_bias(v["bias"], path + ".bias");
      if (v.contains("noise")) ec.noise = parse_noise(v["noise"], path + ".noise");
      if (v.contains("freshness")) {
        ec.freshness = parse_freshness(get_string(v, "freshness", path), path + ".freshness");
      }
      c.estimators.emplace(item.key(), std::move(ec));
    }
  }
  for (const auto& [name, est] : c.estimators) {
    if (c.mixtures.count(name) != 0) {
      fail("$.estimators." + name, "name collides with a mixture");
    }
    if (c.mixtures.count(est.base) == 0) {
      fail("$.estimators." + name, "references unknown mixture '" + est.base + "'");
    }
  }

  if (doc.contains("pair")) {
    const Json& p = doc["pair"];
    check_keys(p, {"first", "second", "noise_correlation"}, "$.pair");
    c.pair.first = get_string(p, "first", "$.pair");
    c.pair.second = get_string(p, "second", "$.pair");
    c.pair.noise_correlation = get_number_or(p, "noise_correlation", 0.0, "$.pair");
    if (!(c.pair.noise_correlation >= -1.0 && c.pair.noise_correlation <= 1.0)) {
      fail("$.pair.noise_correlation", "must lie in [-1, 1]");
    }
    for (const std::string& name : {c.pair.first, c.pair.second}) {
      if (c.estimators.count(name) == 0) {
        fail("$.pair", "references unknown estimator '" + name + "'");
      }
    }
  }

  if (doc.contains("composition")) {
    const Json& comp = doc["composition"];
    check_keys(comp, {"op", "members", "uncond", "weights", "temperature", "offset"},
               "$.composition");
    try {
      c.composition.op =
          composition_operator_from_string(get_string(comp, "op", "$.composition"));
    } catch (const std::exception& e) {
      fail("$.composition.op", e.what());
    }
    c.composition.members.clear();
    const Json& members = require(comp, "members", "$.composition");
    if (!members.is_array() || members.empty()) {
      fail("$.composition.members", "expected a nonempty array of names");
    }
    for (const Json& m : members) {
      if (!m.is_string()) fail("$.composition.members", "expected names");
      c.composition.members.push_back(m.get<std::string>());
    }
    if (comp.contains("uncond")) c.composition.uncond = get_string(comp, "uncond", "$.composition");
    c.composition.weights.clear();
    if (comp.contains("weights")) {
      const Eigen::VectorXd w = parse_vector(comp["weights"], "$.composition.weights");
      c.composition.weights.assign(w.data(), w.data() + w.size());
    }
    c.composition.temperature = get_number_or(comp, "temperature", 1.0, "$.composition");
    c.composition.offset = get_number_or(comp, "offset", 0.0, "$.composition");
    for (const std::string& name : c.composition.members) {
      if (c.estimators.count(name) == 0 && c.mixtures.count(name) == 0) {
        fail("$.composition.members", "unresolved name '" + name + "'");
      }
    }
    if (c.composition.uncond && c.estimators.count(*c.composition.uncond) == 0 &&
        c.mixtures.count(*c.composition.uncond) == 0) {
      fail("$.composition.uncond", "unresolved name '" + *c.composition.uncond + "'");
    }
  }

  if (doc.contains("task")) {
    const Json& t = doc["task"];
    check_keys(t, {"target", "radius", "data_law", "horizon", "metric"}, "$.task");
    c.task.target = parse_vector(require(t, "target", "$.task"), "$.task.target");
    c.task.radius = get_number(t, "radius", "$.task");
    if (!(c.task.radius > 0.0)) fail("$.task.radius", "must be > 0");
    c.task.data_law = get_string(t, "data_law", "$.task");
    c.task.horizon = get_int(t, "horizon", 100, "$.task");
    if (c.task.horizon < 1) fail("$.task.horizon", "must be >= 1");
    if (t.contains("metric")) {
      try {
        c.task.metric = bench_metric_from_string(get_string(t, "metric", "$.task"));
      } catch (const std::exception& e) {
        fail("$.task.metric", e.what());
      }
    }
    if (c.mixtures.count(c.task.data_law) == 0) {
      fail("$.task.data_law", "references unknown mixture '" + c.task.data_law + "'");
    }
  }

  if (doc.contains("theory")) {
    const Json& t = doc["theory"];
    check_keys(t,
               {"gronwall_estimator", "corollary_first", "corollary_second", "n_steps", "n_pairs",
                "prop1_t", "prop1_x", "prop1_n_mc"},
               "$.theory");
    c.theory.gronwall_estimator = get_string(t, "gronwall_estimator", "$.theory");
    c.theory.corollary_first = get_string(t, "corollary_first", "$.theory");
    c.theory.corollary_second = get_string(t, "corollary_second", "$.theory");
    c.theory.n_steps = get_int(t, "n_steps", 1000, "$.theory");
    c.theory.n_pairs = get_int(t, "n_pairs", 100, "$.theory");
    c.theory.prop1_t = get_number_or(t, "prop1_t", 0.5, "$.theory");
    c.theory.prop1_x = parse_vector(require(t, "prop1_x", "$.theory"), "$.theory.prop1_x");
    c.theory.prop1_n_mc = get_int(t, "prop1_n_mc", 200000, "$.theory");
    if (c.theory.n_steps < 1) fail("$.theory.n_steps", "must be >= 1");
    if (c.theory.n_pairs < 1) fail("$.theory.n_pairs", "must be >= 1");
    if (c.theory.prop1_n_mc < 2) fail("$.theory.prop1_n_mc", "must be >= 2");
    for (const std::string& name :
         {c.theory.gronwall_estimator, c.theory.corollary_first, c.theory.corollary_second}) {
      if (c.estimators.count(name) == 0) {
        fail("$.theory", "references unknown estimator '" + name + "'");
      }
    }
  }

  if (doc.contains("sweep")) {
    const Json& s = doc["sweep"];
    check_keys(s, {"grid_step", "episodes"}, "$.sweep");
    c.sweep.grid_step = get_number_or(s, "grid_step", 0.1, "$.sweep");
    c.sweep.episodes = get_int(s, "episodes", 500, "$.sweep");
    if (!(c.sweep.grid_step > 0.0 && c.sweep.grid_step <= 1.0)) {
      fail("$.sweep.grid_step", "must lie in (0, 1]");
    }
    if (c.sweep.episodes < 1) fail("$.sweep.episodes", "must be >= 1");
  }

  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return parse_config(text);
}

std::string serialize_config(const ExperimentConfig& config) {
  Json doc;
  doc["schema_version"] = config.schema_version;
  doc["seed"] = config.seed;
  doc["workers"] = config.workers;
  doc["output_dir"] = config.output_dir;

  Json sched;
  sched["kind"] = to_string(config.schedule_kind);
  sched["beta_min"] = config.beta_min;
  sched["beta_max"] = config.beta_max;
  doc["schedule"] = std::move(sched);

  Json solver;
  solver["name"] = to_string(config.solver.name);
  solver["steps"] = config.solver.steps;
  doc["solver"] = std::move(solver);

  Json mixtures = Json::object();
  for (const auto& [name, mix] : config.mixtures) mixtures[name] = dump_mixture(mix);
  doc["mixtures"] = std::move(mixtures);

  Json estimators = Json::object();
  for (const auto& [name, est] : config.estimators) {
    Json je;
    je["base"] = est.base;
    je["bias"] = dump_bias(est.bias);
    je["noise"] = dump_noise(est.noise);
    je["freshness"] = freshness_name(est.freshness);
    estimators[name] = std::move(je);
  }
  doc["estimators"] = std::move(estimators);

  Json pair;
  pair["first"] = config.pair.first;
  pair["second"] = config.pair.second;
  pair["noise_correlation"] = config.pair.noise_correlation;
  doc["pair"] = std::move(pair);

  Json comp;
  comp["op"] = to_string(config.composition.op);
  comp["members"] = config.composition.members;
  if (config.composition.uncond) comp["uncond"] = *config.composition.uncond;
  comp["weights"] = config.composition.weights;
  comp["temperature"] = config.composition.temperature;
  comp["offset"] = config.composition.offset;
  doc["composition"] = std::move(comp);

  Json task;
  task["target"] = dump_vector(config.task.target);
  task["radius"] = config.task.radius;
  task["data_law"] = config.task.data_law;
  task["horizon"] = config.task.horizon;
  task["metric"] = to_string(config.task.metric);
  doc["task"] = std::move(task);

  Json theory;
  theory["gronwall_estimator"] = config.theory.gronwall_estimator;
  theory["corollary_first"] = config.theory.corollary_first;
  theory["corollary_second"] = config.theory.corollary_second;
  theory["n_steps"] = config.theory.n_steps;
  theory["n_pairs"] = config.theory.n_pairs;
  theory["prop1_t"] = config.theory.prop1_t;
  theory["prop1_x"] = dump_vector(config.theory.prop1_x);
  theory["prop1_n_mc"] = config.theory.prop1_n_mc;
  doc["theory"] = std::move(theory);

  Json sweep;
  sweep["grid_step"] = config.sweep.grid_step;
  sweep["episodes"] = config.sweep.episodes;
  doc["sweep"] = std::move(sweep);

  return doc.dump(2) + "\n";
}

std::string config_hash(const ExperimentConfig& config) {
  return fnv1a_hex(serialize_config(config));
}

}  // namespace gpc
