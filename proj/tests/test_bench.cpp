// Endpoint tasks and distribution diagnostics: success-rate fixtures with
// Gaussian-CDF cross-checks, the energy-distance statistic, and the
// permutation test at the contract scale.

#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "gpc/bench.hpp"
#include "gpc/compose.hpp"
#include "gpc/oracle.hpp"
#include "gpc/rng.hpp"
#include "gpc/sampler.hpp"
#include "gpc/schedule.hpp"
#include "gpc/search.hpp"

using namespace gpc;

namespace {

Eigen::VectorXd vec2(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}

double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

GaussianMixture tight_base() {
  return GaussianMixture::single(Eigen::VectorXd::Zero(2),
                                 0.01 * Eigen::MatrixXd::Identity(2, 2));
}

ScoreField shifted_field(const GaussianMixture& base, const Eigen::VectorXd& delta,
                         const NoiseSchedule& sched, std::uint64_t seed) {
  return make_estimator({base, BiasSpec::mean_shift(delta), NoiseSpec::none(),
                         NoiseFreshness::per_call},
                        sched, seed);
}

ScoreField convex_pair(const ScoreField& f1, const ScoreField& f2, double w) {
  CompositionSpec spec;
  spec.op = CompositionOperator::convex;
  spec.weights = {w, 1.0 - w};
  return compose_field(spec, {f1, f2});
}

Eigen::MatrixXd mixture_batch(const GaussianMixture& mix, int n, std::uint64_t key) {
  Eigen::MatrixXd out(n, mix.dim());
  for (int i = 0; i < n; ++i) {
    out.row(i) = mix.draw(key, static_cast<std::uint64_t>(i)).transpose();
  }
  return out;
}

}  // namespace

TEST_CASE("energy distance of a batch against itself is exactly zero") {
  RngStream rng(derive_key(60, 1));
  Eigen::MatrixXd a(40, 3);
  for (int i = 0; i < 40; ++i) a.row(i) = rng.normal_vector(3).transpose();
  CHECK(energy_distance(a, a) == 0.0);
}

TEST_CASE("energy distance matches a hand computation and its symmetries") {
  Eigen::MatrixXd a(2, 1), b(2, 1);
  a << 0.0, 1.0;
  b << 2.0, 3.0;
  // S_ab = 2+3+1+2 = 8, S_aa = S_bb = 2: E = 2*8/4 - 2/4 - 2/4 = 3.
  CHECK(energy_distance(a, b) == 3.0);
  CHECK(energy_distance(b, a) == 3.0);
  CHECK(energy_distance(a, b, 3) == energy_distance(a, b, 1));

  Eigen::MatrixXd wrong(2, 2);
  wrong.setZero();
  CHECK_THROWS_AS(energy_distance(a, wrong), std::invalid_argument);
  CHECK_THROWS_AS(energy_distance(a, Eigen::MatrixXd(0, 1)), std::invalid_argument);
}

TEST_CASE("energy distance grows with separation and is nonnegative") {
  const GaussianMixture base = tight_base();
  const Eigen::MatrixXd x = mixture_batch(base, 500, derive_key(61, 1));
  const Eigen::MatrixXd y = mixture_batch(base, 500, derive_key(61, 2));
  const Eigen::MatrixXd z = mixture_batch(
      GaussianMixture::single(vec2(1.0, 0.0), 0.01 * Eigen::MatrixXd::Identity(2, 2)), 500,
      derive_key(61, 3));
  const double same = energy_distance(x, y);
  const double far = energy_distance(x, z);
  CHECK(same >= 0.0);
  CHECK(far > 10.0 * same);
}

TEST_CASE("same-law batches stay below the permutation threshold at contract scale") {
  const GaussianMixture law =
      GaussianMixture::single(Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2));
  const int n = 10000;
  const Eigen::MatrixXd a = mixture_batch(law, n, derive_key(62, 1));
  const Eigen::MatrixXd b = mixture_batch(law, n, derive_key(62, 2));
  const PermutationTest test = energy_permutation_test(a, b, 200, 7, 1);
  CHECK(test.shuffles == 200);
  CHECK(test.statistic < test.threshold);
  CHECK(test.p_value > 0.05);
}

TEST_CASE("a three-sigma mean shift is detected at contract scale") {
  const GaussianMixture near =
      GaussianMixture::single(Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2));
  const GaussianMixture far =
      GaussianMixture::single(vec2(3.0, 0.0), Eigen::MatrixXd::Identity(2, 2));
  const int n = 10000;
  const Eigen::MatrixXd a = mixture_batch(near, n, derive_key(63, 1));
  const Eigen::MatrixXd b = mixture_batch(far, n, derive_key(63, 2));
  const PermutationTest test = energy_permutation_test(a, b, 200, 7, 1);
  CHECK(test.statistic > test.threshold);
  CHECK(test.p_value == doctest::Approx(1.0 / 201.0).epsilon(1e-12));
}

TEST_CASE("permutation tests replay deterministically and validate inputs") {
  const GaussianMixture law = tight_base();
  const Eigen::MatrixXd a = mixture_batch(law, 60, derive_key(64, 1));
  const Eigen::MatrixXd b = mixture_batch(law, 60, derive_key(64, 2));
  const PermutationTest t1 = energy_permutation_test(a, b, 99, 11, 1);
  const PermutationTest t2 = energy_permutation_test(a, b, 99, 11, 3);
  CHECK(t1.statistic == t2.statistic);
  CHECK(t1.threshold == t2.threshold);
  CHECK(t1.p_value == t2.p_value);
  CHECK(t1.p_value > 0.0);
  CHECK(t1.p_value <= 1.0);

  CHECK_THROWS_AS(energy_permutation_test(a, Eigen::MatrixXd::Zero(1, 2), 10, 1, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(energy_permutation_test(a, b, 0, 1, 1), std::invalid_argument);
  CHECK_THROWS_AS(energy_permutation_test(a, Eigen::MatrixXd::Zero(4, 3), 10, 1, 1),
                  std::invalid_argument);
}

TEST_CASE("an on-target sampler scores a perfect success rate") {
  const NoiseSchedule vp = NoiseSchedule::vp_linear();
  const Eigen::VectorXd target = vec2(0.4, -0.2);
  const GaussianMixture law =
      GaussianMixture::single(target, 0.01 * Eigen::MatrixXd::Identity(2, 2));
  BenchTask task{target, 1.0, law, 100, BenchMetric::success_rate};
  const BenchResult res = run_bench(task, oracle_field(law, vp), vp, Solver::ddim, 1000, 42, 1);
  CHECK(res.episodes == 1000);
  CHECK(res.successes == 1000);
  CHECK(res.success_rate == 1.0);
  CHECK(res.metric_value == 1.0);
  CHECK(res.endpoints.rows() == 1000);
  CHECK(res.endpoints.cols() == 2);
}

TEST_CASE("a far mean-shifted sampler rarely succeeds") {
  const NoiseSchedule vp = NoiseSchedule::vp_linear();
  const GaussianMixture base = tight_base();
  BenchTask task{Eigen::VectorXd::Zero(2), 1.0, base, 100, BenchMetric::success_rate};
  const ScoreField off = shifted_field(base, vec2(3.0, 0.0), vp, 1);
  const BenchResult res = run_bench(task, off, vp, Solver::ddim, 1000, 43, 1);
  CHECK(res.success_rate <= 0.01);
}

TEST_CASE("opposing shifts: the midpoint composition beats both parents") {
  const NoiseSchedule vp = NoiseSchedule::vp_linear();
  const GaussianMixture base = tight_base();
  const ScoreField plus = shifted_field(base, vec2(1.2, 0.0), vp, 1);
  const ScoreField minus = shifted_field(base, vec2(-1.2, 0.0), vp, 2);
  BenchTask task{Eigen::VectorXd::Zero(2), 1.0, base, 600, BenchMetric::success_rate};
  const int n = 1200;

  const BenchResult left = run_bench(task, convex_pair(plus, minus, 0.0), vp, Solver::ddim, n, 9, 1);
  const BenchResult mid = run_bench(task, convex_pair(plus, minus, 0.5), vp, Solver::ddim, n, 9, 1);
  const BenchResult right = run_bench(task, convex_pair(plus, minus, 1.0), vp, Solver::ddim, n, 9, 1);

  CHECK(mid.success_rate > left.success_rate);
  CHECK(mid.success_rate > right.success_rate);
  CHECK(mid.success_rate > 0.99);

  // Parents put their terminal mean 1.2 from the target with std ~0.1, so the
  // success probability is the Gaussian tail through the near boundary,
  // Phi((r - 1.2)/0.1), up to discretization and boundary curvature.
  const double predicted = std_normal_cdf((1.0 - 1.2) / 0.1);
  CHECK(std::abs(left.success_rate - predicted) <= 0.015);
  CHECK(std::abs(right.success_rate - predicted) <= 0.015);
  CHECK(left.success_rate > 0.003);
  CHECK(right.success_rate > 0.003);
}

TEST_CASE("per-episode rewards agree with the aggregate run") {
  const NoiseSchedule vp = NoiseSchedule::vp_linear();
  const GaussianMixture base = tight_base();
  const ScoreField field = shifted_field(base, vec2(0.25, 0.0), vp, 3);
  BenchTask task{Eigen::VectorXd::Zero(2), 0.3, base, 100, BenchMetric::success_rate};
  const BenchResult res = run_bench(task, field, vp, Solver::ddim, 400, 77, 1);
  const std::vector<double> rewards = bench_rewards(task, field, vp, Solver::ddim, 400, 77, 1);
  REQUIRE(rewards.size() == 400);
  int ones = 0;
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    CHECK((rewards[i] == 0.0 || rewards[i] == 1.0));
    if (rewards[i] == 1.0) ++ones;
    const bool hit = (res.endpoints.row(static_cast<Eigen::Index>(i)).transpose() - task.target)
                         .norm() <= task.radius;
    CHECK(rewards[i] == (hit ? 1.0 : 0.0));
  }
  CHECK(ones == res.successes);
  // Interesting fixture: neither all hits nor all misses.
  CHECK(res.successes > 0);
  CHECK(res.successes < 400);
}

TEST_CASE("symmetric sweep peaks at the midpoint with common random numbers") {
  const NoiseSchedule vp = NoiseSchedule::vp_linear();
  const GaussianMixture base = tight_base();
  const ScoreField plus = shifted_field(base, vec2(1.2, 0.0), vp, 1);
  const ScoreField minus = shifted_field(base, vec2(-1.2, 0.0), vp, 2);
  BenchTask task{Eigen::VectorXd::Zero(2), 0.3, base, 100, BenchMetric::success_rate};

  const CellEvaluator eval = [&](double w, int episodes, std::uint64_t seed) {
    return bench_rewards(task, convex_pair(plus, minus, w), vp, Solver::ddim, episodes, seed, 1);
  };
  const GridSearchResult res = grid_search(eval, 0.1, 300, 1234, 1);
  CHECK(res.w_star == 0.5);
  CHECK(res.best_reward > 0.9);
  // Unimodal shape up to twice the cell standard error.
  for (std::size_t i = 0; i + 1 <= 5; ++i) {
    const double tol = 2.0 * (res.pool.cells[i].se + res.pool.cells[i + 1].se);
    CHECK(res.pool.cells[i].mean_reward <= res.pool.cells[i + 1].mean_reward + tol);
  }
  for (std::size_t i = 5; i + 1 < res.pool.cells.size(); ++i) {
    const double tol = 2.0 * (res.pool.cells[i].se + res.pool.cells[i + 1].se);
    CHECK(res.pool.cells[i + 1].mean_reward <= res.pool.cells[i].mean_reward + tol);
  }
}

TEST_CASE("asymmetric shifts move the best weight toward the cleaner member") {
  const NoiseSchedule vp = NoiseSchedule::vp_linear();
  const GaussianMixture base = tight_base();
  const ScoreField small = shifted_field(base, vec2(0.3, 0.0), vp, 1);
  const ScoreField large = shifted_field(base, vec2(-1.0, 0.0), vp, 2);
  BenchTask task{Eigen::VectorXd::Zero(2), 0.3, base, 100, BenchMetric::success_rate};

  const CellEvaluator eval = [&](double w, int episodes, std::uint64_t seed) {
    return bench_rewards(task, convex_pair(small, large, w), vp, Solver::ddim, episodes, seed, 1);
  };
  const GridSearchResult res = grid_search(eval, 0.1, 400, 555, 1);
  // Composed terminal mean sits at (1.3 w - 1) e1: zero near w = 0.77.
  CHECK(res.w_star >= 0.7);
  CHECK(res.w_star <= 0.9);
  const RewardCell& best = res.pool.cells[static_cast<std::size_t>(std::llround(res.w_star * 10))];
  const RewardCell& left = res.pool.cells.front();
  const RewardCell& right = res.pool.cells.back();
  CHECK(best.mean_reward >= left.mean_reward + 2.0 * (best.se + left.se));
  CHECK(best.mean_reward >= right.mean_reward + 2.0 * (best.se + right.se));
}

TEST_CASE("the energy metric compares endpoints against the demonstration law") {
  const NoiseSchedule vp = NoiseSchedule::vp_linear();
  const GaussianMixture base = tight_base();
  BenchTask task{Eigen::VectorXd::Zero(2), 0.3, base, 200, BenchMetric::energy_distance};
  const BenchResult good = run_bench(task, oracle_field(base, vp), vp, Solver::ddim, 300, 5, 1);
  const BenchResult bad =
      run_bench(task, shifted_field(base, vec2(1.0, 0.0), vp, 1), vp, Solver::ddim, 300, 5, 1);
  CHECK(good.metric_value >= 0.0);
  CHECK(bad.metric_value > 10.0 * good.metric_value);
  CHECK(good.metric_value != good.success_rate);  // metric really is the energy statistic
}

TEST_CASE("bench runs replay bit-identically and validate the task") {
  const NoiseSchedule vp = NoiseSchedule::vp_linear();
  const GaussianMixture base = tight_base();
  const ScoreField field = oracle_field(base, vp);
  BenchTask task{Eigen::VectorXd::Zero(2), 0.5, base, 50, BenchMetric::success_rate};
  const BenchResult r1 = run_bench(task, field, vp, Solver::ddim, 64, 31, 1);
  const BenchResult r2 = run_bench(task, field, vp, Solver::ddim, 64, 31, 2);
  CHECK((r1.endpoints - r2.endpoints).norm() == 0.0);
  CHECK(r1.successes == r2.successes);

  BenchTask bad_radius = task;
  bad_radius.radius = 0.0;
  CHECK_THROWS_AS(run_bench(bad_radius, field, vp, Solver::ddim, 4, 1, 1), std::invalid_argument);
  BenchTask bad_horizon = task;
  bad_horizon.horizon = 0;
  CHECK_THROWS_AS(run_bench(bad_horizon, field, vp, Solver::ddim, 4, 1, 1), std::invalid_argument);
  BenchTask bad_target = task;
  bad_target.target = Eigen::VectorXd::Zero(3);
  CHECK_THROWS_AS(run_bench(bad_target, field, vp, Solver::ddim, 4, 1, 1), std::invalid_argument);
  CHECK_THROWS_AS(run_bench(task, field, vp, Solver::ddim, 0, 1, 1), std::invalid_argument);
}

TEST_CASE("bench metric names round-trip") {
  CHECK(to_string(BenchMetric::success_rate) == "success-rate");
  CHECK(to_string(BenchMetric::energy_distance) == "energy-distance");
  CHECK(bench_metric_from_string("success-rate") == BenchMetric::success_rate);
  CHECK(bench_metric_from_string("energy-distance") == BenchMetric::energy_distance);
  CHECK_THROWS_AS(bench_metric_from_string("wasserstein"), std::invalid_argument);
}
