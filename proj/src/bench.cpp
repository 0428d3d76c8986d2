#include "gpc/bench.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "gpc/rng.hpp"
#include "gpc/sampler.hpp"
#include "gpc/util.hpp"

namespace gpc {

std::string to_string(BenchMetric metric) {
  switch (metric) {
    case BenchMetric::success_rate: return "success-rate";
    case BenchMetric::energy_distance: return "energy-distance";
  }
  throw std::logic_error("unreachable bench metric");
}

BenchMetric bench_metric_from_string(const std::string& name) {
  if (name == "success-rate") return BenchMetric::success_rate;
  if (name == "energy-distance") return BenchMetric::energy_distance;
  throw std::invalid_argument("unknown bench metric: " + name);
}

namespace {

void check_task(const BenchTask& task, const ScoreField& field) {
  if (!(task.radius > 0.0)) throw std::invalid_argument("bench task radius must be > 0");
  if (task.horizon < 1) throw std::invalid_argument("bench task horizon must be >= 1");
  if (task.target.size() != field.dim) {
    throw std::invalid_argument("bench task target dimension mismatch");
  }
  if (task.data_law.dim() != field.dim) {
    throw std::invalid_argument("bench task data-law dimension mismatch");
  }
}

// Sum over all ordered pairs of ||A_i - B_j||; per-row slots keep the total
// independent of the worker count.
double pair_sum(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, int workers) {
  std::vector<double> row_sums(static_cast<std::size_t>(a.rows()), 0.0);
  parallel_for(a.rows(), workers, [&](std::int64_t i) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
      s += (a.row(i) - b.row(j)).norm();
    }
    row_sums[static_cast<std::size_t>(i)] = s;
  });
  double total = 0.0;
  for (double s : row_sums) total += s;
  return total;
}

}  // namespace

BenchResult run_bench(const BenchTask& task, const ScoreField& field, const NoiseSchedule& sched,
                      Solver solver, int n_episodes, std::uint64_t seed, int workers) {
  check_task(task, field);
  if (n_episodes < 1) throw std::invalid_argument("run_bench: n_episodes must be >= 1");

  BenchResult res;
  res.episodes = n_episodes;
  res.endpoints = sample_endpoints(field, sched, solver, task.horizon, n_episodes, seed, workers);
  for (Eigen::Index i = 0; i < res.endpoints.rows(); ++i) {
    if ((res.endpoints.row(i).transpose() - task.target).norm() <= task.radius) ++res.successes;
  }
  res.success_rate = static_cast<double>(res.successes) / static_cast<double>(n_episodes);
  if (task.metric == BenchMetric::success_rate) {
    res.metric_value = res.success_rate;
  } else {
    Eigen::MatrixXd data(n_episodes, task.data_law.dim());
    const std::uint64_t data_key = derive_key(seed, 0xda7a);
    parallel_for(n_episodes, workers, [&](std::int64_t i) {
      data.row(i) = task.data_law.draw(data_key, static_cast<std::uint64_t>(i)).transpose();
    });
    res.metric_value = energy_distance(res.endpoints, data, workers);
  }
  return res;
}

std::vector<double> bench_rewards(const BenchTask& task, const ScoreField& field,
                                  const NoiseSchedule& sched, Solver solver, int n_episodes,
                                  std::uint64_t seed, int workers) {
  check_task(task, field);
  if (n_episodes < 1) throw std::invalid_argument("bench_rewards: n_episodes must be >= 1");
  const Eigen::MatrixXd endpoints =
      sample_endpoints(field, sched, solver, task.horizon, n_episodes, seed, workers);
  std::vector<double> rewards(static_cast<std::size_t>(n_episodes), 0.0);
  for (Eigen::Index i = 0; i < endpoints.rows(); ++i) {
    if ((endpoints.row(i).transpose() - task.target).norm() <= task.radius) {
      rewards[static_cast<std::size_t>(i)] = 1.0;
    }
  }
  return rewards;
}

double energy_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, int workers) {
  if (a.cols() != b.cols()) throw std::invalid_argument("energy_distance: dimension mismatch");
  if (a.rows() < 1 || b.rows() < 1) {
    throw std::invalid_argument("energy_distance: empty batch");
  }
  const double n = static_cast<double>(a.rows());
  const double m = static_cast<double>(b.rows());
  const double s_ab = pair_sum(a, b, workers);
  const double s_aa = pair_sum(a, a, workers);
  const double s_bb = pair_sum(b, b, workers);
  return 2.0 * s_ab / (n * m) - s_aa / (n * n) - s_bb / (m * m);
}

PermutationTest energy_permutation_test(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                        int shuffles, std::uint64_t seed, int workers) {
  if (a.cols() != b.cols()) {
    throw std::invalid_argument("energy_permutation_test: dimension mismatch");
  }
  if (a.rows() < 2 || b.rows() < 2) {
    throw std::invalid_argument("energy_permutation_test: batches need at least 2 rows");
  }
  if (shuffles < 1) throw std::invalid_argument("energy_permutation_test: shuffles must be >= 1");

  const int n = static_cast<int>(a.rows());
  const int m = static_cast<int>(b.rows());
  const int total = n + m;
  Eigen::MatrixXd pooled(total, a.cols());
  pooled.topRows(n) = a;
  pooled.bottomRows(m) = b;

  // Group-A indicator columns: column 0 is the observed labeling, columns
  // 1..shuffles are Fisher-Yates relabelings of the pooled batch.
  Eigen::MatrixXd labels = Eigen::MatrixXd::Zero(total, shuffles + 1);
  labels.col(0).head(n).setOnes();
  for (int s = 0; s < shuffles; ++s) {
    std::vector<int> idx(static_cast<std::size_t>(total));
    std::iota(idx.begin(), idx.end(), 0);
    RngStream stream = RngStream::from(derive_key(seed, 0x5f1e), static_cast<std::uint64_t>(s));
    for (int k = total - 1; k >= 1; --k) {
      const int j = static_cast<int>(stream.raw() % static_cast<std::uint64_t>(k + 1));
      std::swap(idx[static_cast<std::size_t>(k)], idx[static_cast<std::size_t>(j)]);
    }
    for (int k = 0; k < n; ++k) labels(idx[static_cast<std::size_t>(k)], s + 1) = 1.0;
  }

  // Every statistic needs only l^T D l and 1^T D l against the pooled distance
  // matrix D, so accumulate U = D * labels over row tiles of D: memory stays
  // at O(tile * total) while the per-tile product runs as one dense GEMM.
  // Tiles write disjoint rows of U and their own pooled-sum slot, keeping the
  // result independent of the worker count.
  const int tile = 512;
  const int n_tiles = (total + tile - 1) / tile;
  Eigen::MatrixXd u(total, shuffles + 1);
  std::vector<double> tile_sums(static_cast<std::size_t>(n_tiles), 0.0);
  parallel_for(n_tiles, workers, [&](std::int64_t ti) {
    const int r0 = static_cast<int>(ti) * tile;
    const int rows = std::min(tile, total - r0);
    Eigen::MatrixXd block(rows, total);
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < total; ++j) {
        block(i, j) = (pooled.row(r0 + i) - pooled.row(j)).norm();
      }
    }
    tile_sums[static_cast<std::size_t>(ti)] = block.sum();
    u.middleRows(r0, rows).noalias() = block * labels;
  });
  double s_pool = 0.0;
  for (double v : tile_sums) s_pool += v;

  // With colsum = 1^T D l: S_AB = colsum - S_AA and S_BB = s_pool - 2 colsum
  // + S_AA (D is symmetric with zero diagonal).
  const auto stat_for = [&](int c) {
    const double s_aa = labels.col(c).dot(u.col(c));
    const double colsum = u.col(c).sum();
    const double s_ab = colsum - s_aa;
    const double s_bb = s_pool - 2.0 * colsum + s_aa;
    const double nm = static_cast<double>(n) * static_cast<double>(m);
    const double n2 = static_cast<double>(n) * static_cast<double>(n);
    const double m2 = static_cast<double>(m) * static_cast<double>(m);
    return 2.0 * s_ab / nm - s_aa / n2 - s_bb / m2;
  };

  PermutationTest test;
  test.shuffles = shuffles;
  test.statistic = stat_for(0);
  std::vector<double> shuffled(static_cast<std::size_t>(shuffles), 0.0);
  for (int s = 0; s < shuffles; ++s) shuffled[static_cast<std::size_t>(s)] = stat_for(s + 1);

  int exceed = 0;
  for (double v : shuffled) {
    if (v >= test.statistic) ++exceed;
  }
  test.p_value = static_cast<double>(1 + exceed) / static_cast<double>(1 + shuffles);
  std::sort(shuffled.begin(), shuffled.end());
  const int rank = std::min(shuffles - 1,
                            static_cast<int>(std::ceil(0.95 * shuffles)) - 1);
  test.threshold = shuffled[static_cast<std::size_t>(std::max(0, rank))];
  return test;
}

}  // namespace gpc
