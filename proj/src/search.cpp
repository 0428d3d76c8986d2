#include "gpc/search.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "gpc/rng.hpp"
#include "gpc/svg.hpp"
#include "gpc/util.hpp"

namespace gpc {

GridSearchResult grid_search(const CellEvaluator& evaluator, double grid_step,
                             int episodes_per_cell, std::uint64_t seed, int workers) {
  if (!evaluator) throw std::invalid_argument("grid_search: evaluator is empty");
  if (!(grid_step > 0.0 && grid_step <= 1.0)) {
    throw std::invalid_argument("grid_search: grid_step must lie in (0, 1]");
  }
  const int n = static_cast<int>(std::llround(1.0 / grid_step));
  if (n < 1 || std::abs(n * grid_step - 1.0) > 1e-9) {
    throw std::invalid_argument("grid_search: grid_step must divide 1 evenly");
  }
  if (episodes_per_cell < 1) {
    throw std::invalid_argument("grid_search: episodes_per_cell must be >= 1");
  }

  GridSearchResult result;
  result.pool.cells.resize(static_cast<std::size_t>(n) + 1);
  // Every cell hands the evaluator the same master seed, so episode e shares
  // its random draws across all w (common random numbers).
  parallel_for(n + 1, workers, [&](std::int64_t i) {
    RewardCell& cell = result.pool.cells[static_cast<std::size_t>(i)];
    cell.w = static_cast<double>(i) / static_cast<double>(n);
    cell.episodes = episodes_per_cell;
    cell.seed = derive_key(seed, static_cast<std::uint64_t>(i));
    std::vector<double> rewards;
    try {
      rewards = evaluator(cell.w, episodes_per_cell, seed);
    } catch (const std::exception&) {
      cell.valid = false;
      return;
    }
    if (rewards.size() != static_cast<std::size_t>(episodes_per_cell)) {
      cell.valid = false;
      return;
    }
    double sum = 0.0;
    int successes = 0;
    for (double r : rewards) {
      sum += r;
      if (r >= 0.5) ++successes;
    }
    cell.successes = successes;
    cell.mean_reward = sum / static_cast<double>(episodes_per_cell);
    if (episodes_per_cell > 1) {
      double ss = 0.0;
      for (double r : rewards) ss += (r - cell.mean_reward) * (r - cell.mean_reward);
      cell.se = std::sqrt(ss / (static_cast<double>(episodes_per_cell - 1) *
                                static_cast<double>(episodes_per_cell)));
    }
  });

  bool found = false;
  for (const RewardCell& cell : result.pool.cells) {  // ascending w: ties keep the smallest
    if (!cell.valid) continue;
    if (!found || cell.mean_reward > result.best_reward) {
      result.w_star = cell.w;
      result.best_reward = cell.mean_reward;
      found = true;
    }
  }
  if (!found) throw std::runtime_error("grid_search: every cell failed evaluation");
  return result;
}

std::string sweep_csv(const RewardPool& pool) {
  std::ostringstream out;
  out << "w,episodes,successes,mean_reward,se\n";
  for (const RewardCell& cell : pool.cells) {
    out << format_double(cell.w) << ',' << cell.episodes << ',' << cell.successes << ','
        << format_double(cell.mean_reward) << ',' << format_double(cell.se) << '\n';
  }
  return out.str();
}

void sweep_report(const RewardPool& pool, const std::string& csv_path,
                  const std::string& svg_path) {
  write_text_file(csv_path, sweep_csv(pool));

  SvgSeries series;
  series.label = "mean reward";
  series.color = "#1f6fb2";
  series.line = true;
  series.markers = true;
  for (const RewardCell& cell : pool.cells) {
    if (!cell.valid) continue;
    series.x.push_back(cell.w);
    series.y.push_back(cell.mean_reward);
    series.yerr.push_back(cell.se);
  }

  SvgChart chart;
  chart.title = "reward sweep";
  chart.x_label = "composition weight w";
  chart.y_label = "mean reward";
  chart.series.push_back(std::move(series));
  write_svg(svg_path, chart);
}

}  // namespace gpc
