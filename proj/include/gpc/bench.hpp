#pragma once

// Desk-scale endpoint tasks: sample reverse trajectories with a field, score
// success as "endpoint within radius r of the target", optionally compare the
// endpoint batch against data-law samples with the energy distance.

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gpc/field.hpp"
#include "gpc/oracle.hpp"
#include "gpc/schedule.hpp"

namespace gpc {

enum class BenchMetric { success_rate, energy_distance };

std::string to_string(BenchMetric metric);
BenchMetric bench_metric_from_string(const std::string& name);

struct BenchTask {
  Eigen::VectorXd target;
  double radius = 1.0;        // success radius, > 0
  GaussianMixture data_law;   // the demonstration distribution
  int horizon = 100;          // solver steps per episode
  BenchMetric metric = BenchMetric::success_rate;
};

struct BenchResult {
  int episodes = 0;
  int successes = 0;
  double success_rate = 0.0;
  double metric_value = 0.0;         // SR again, or the energy distance
  Eigen::MatrixXd endpoints;         // one row per episode
};

BenchResult run_bench(const BenchTask& task, const ScoreField& field, const NoiseSchedule& sched,
                      Solver solver, int n_episodes, std::uint64_t seed, int workers = 1);

// Per-episode 0/1 rewards (the grid-search evaluator view of the same run).
std::vector<double> bench_rewards(const BenchTask& task, const ScoreField& field,
                                  const NoiseSchedule& sched, Solver solver, int n_episodes,
                                  std::uint64_t seed, int workers = 1);

// Energy-distance V-statistic
//   E = 2/(nm) sum ||a_i - b_j|| - 1/n^2 sum ||a_i - a_j|| - 1/m^2 sum ||b_i - b_j||
// with full ordered double loops, so identical batches give exactly 0.
double energy_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, int workers = 1);

struct PermutationTest {
  double statistic = 0.0;
  double threshold = 0.0;  // 95th percentile of the shuffled statistics
  double p_value = 0.0;
  int shuffles = 0;
};

// Permutation test of "same law" with `shuffles` relabelings of the pooled
// batch; deterministic per seed, shuffles fan out across workers.
PermutationTest energy_permutation_test(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                        int shuffles, std::uint64_t seed, int workers = 1);

}  // namespace gpc
