#pragma once

// Experiment configuration: a JSON document with named sections (schedule,
// mixtures, estimators, pair, composition, task, theory, sweep) plus seed,
// workers, and output directory. All numeric values are double-precision
// decimals; parse -> serialize -> parse is the identity.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gpc/bench.hpp"
#include "gpc/compose.hpp"
#include "gpc/oracle.hpp"
#include "gpc/schedule.hpp"
#include "gpc/theory.hpp"

namespace gpc {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SolverConfig {
  Solver name = Solver::ddim;
  int steps = 100;
};

struct EstimatorConfig {
  std::string base;  // mixture name
  BiasSpec bias;
  NoiseSpec noise;
  NoiseFreshness freshness = NoiseFreshness::per_call;
};

struct PairConfig {
  std::string first;
  std::string second;
  double noise_correlation = 0.0;
};

struct CompositionConfig {
  CompositionOperator op = CompositionOperator::convex;
  std::vector<std::string> members;   // estimator or mixture names
  std::optional<std::string> uncond;  // cfg anchor
  std::vector<double> weights;
  double temperature = 1.0;
  double offset = 0.0;
};

struct TaskConfig {
  Eigen::VectorXd target;
  double radius = 1.0;
  std::string data_law;  // mixture name
  int horizon = 100;
  BenchMetric metric = BenchMetric::success_rate;
};

struct TheoryConfig {
  std::string gronwall_estimator;      // estimator name (bias-only)
  std::string corollary_first;         // opposing-bias pair for the corollary
  std::string corollary_second;
  int n_steps = 1000;
  int n_pairs = 100;
  double prop1_t = 0.5;
  Eigen::VectorXd prop1_x;
  int prop1_n_mc = 200000;
};

struct SweepConfig {
  double grid_step = 0.1;
  int episodes = 500;
};

struct ExperimentConfig {
  int schema_version = 1;
  std::uint64_t seed = 0;
  int workers = 0;  // 0 = hardware concurrency
  std::string output_dir = "out";

  ScheduleKind schedule_kind = ScheduleKind::vp_linear;
  double beta_min = 0.1;
  double beta_max = 20.0;

  SolverConfig solver;
  // Ordered by name for canonical serialization.
  std::map<std::string, GaussianMixture> mixtures;
  std::map<std::string, EstimatorConfig> estimators;
  PairConfig pair;
  CompositionConfig composition;
  TaskConfig task;
  TheoryConfig theory;
  SweepConfig sweep;

  NoiseSchedule schedule() const;
  const GaussianMixture& mixture(const std::string& name) const;
  EstimatorSpec estimator_spec(const std::string& name) const;
  EstimatorPairSpec pair_spec() const;
  // Fields named in the composition (estimator names resolve to estimators,
  // mixture names to oracle fields), plus the composed field itself.
  std::vector<ScoreField> member_fields(std::uint64_t seed_base) const;
  ScoreField composed_field(std::uint64_t seed_base) const;
  BenchTask bench_task() const;
};

// The built-in default configuration (the fixtures every CLI command and
// verify suite fall back to when --config is not given).
ExperimentConfig default_config();

ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);
std::string serialize_config(const ExperimentConfig& config);

// FNV-1a hash of the canonical serialization (the manifest's config_hash).
std::string config_hash(const ExperimentConfig& config);

}  // namespace gpc
