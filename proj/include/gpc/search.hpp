#pragma once

// Test-time grid search over the convex composition weight with reward pools:
// evaluate the task at w = 0, step, ..., 1, store per-cell episode statistics,
// return the argmax (ties broken toward the smallest w).
//
// Episodes use common random numbers across cells: episode e draws its
// initial conditions from key(master seed, e) in every cell, so reward
// differences across w are attributable to w alone.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace gpc {

struct RewardCell {
  double w = 0.0;
  int episodes = 0;
  int successes = 0;
  double mean_reward = 0.0;
  double se = 0.0;          // standard error of the mean reward
  std::uint64_t seed = 0;   // bookkeeping key of the cell
  bool valid = true;        // false if the evaluator failed; excluded from argmax
};

struct RewardPool {
  std::vector<RewardCell> cells;
};

// Evaluator contract: rewards for `episodes` episodes of the task at weight w;
// episode e must derive all randomness from key(seed, e). Binary task rewards
// are 0/1; a cell's success count is the number of rewards >= 0.5.
using CellEvaluator =
    std::function<std::vector<double>(double w, int episodes, std::uint64_t seed)>;

struct GridSearchResult {
  double w_star = 0.0;
  double best_reward = 0.0;
  RewardPool pool;
};

// grid_step must divide 1 evenly (1/step integral within 1e-9). Evaluator
// exceptions mark the cell invalid and the search continues.
GridSearchResult grid_search(const CellEvaluator& evaluator, double grid_step,
                             int episodes_per_cell, std::uint64_t seed, int workers = 1);

// CSV table (w, episodes, successes, mean_reward, se) and an SVG reward curve
// with standard-error bars.
void sweep_report(const RewardPool& pool, const std::string& csv_path,
                  const std::string& svg_path);
std::string sweep_csv(const RewardPool& pool);

}  // namespace gpc
