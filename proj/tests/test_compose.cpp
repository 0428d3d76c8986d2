// Composition operators: convex arithmetic, guidance-style conjunction,
// density-weighted OR, and the drift-equalizing AND, each checked against
// closed forms or brute-force scans.

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "gpc/compose.hpp"
#include "gpc/oracle.hpp"
#include "gpc/rng.hpp"
#include "gpc/sampler.hpp"
#include "gpc/schedule.hpp"

using namespace gpc;

namespace {

ScoreField constant_field(const Eigen::VectorXd& value) {
  ScoreField f;
  f.dim = value.size();
  f.native_kind = Parameterization::score;
  f.eval = [value](double, const Eigen::VectorXd&, const EvalContext&) { return value; };
  return f;
}

Eigen::VectorXd vec2(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}

GaussianMixture gauss1d(double mean, double var) {
  Eigen::VectorXd m(1);
  m << mean;
  Eigen::MatrixXd c(1, 1);
  c << var;
  return GaussianMixture::single(m, c);
}

}  // namespace

TEST_CASE("degenerate convex weight returns the first member exactly") {
  const NoiseSchedule vp = NoiseSchedule::vp_linear();
  const GaussianMixture m1 = GaussianMixture::single(vec2(1.0, 0.0),
                                                     Eigen::MatrixXd::Identity(2, 2));
  const GaussianMixture m2 = GaussianMixture::single(vec2(-2.0, 1.0),
                                                     Eigen::MatrixXd::Identity(2, 2));
  const std::vector<ScoreField> fields = {oracle_field(m1, vp), oracle_field(m2, vp)};
  RngStream rng(derive_key(50, 1));
  for (int i = 0; i < 100; ++i) {
    const double t = rng.uniform();
    const Eigen::VectorXd x = rng.normal_vector(2);
    const Eigen::VectorXd combined = convex_compose(fields, {1.0, 0.0}, t, x);
    CHECK((combined - fields[0](t, x)).norm() == 0.0);
  }
}

TEST_CASE("convex combination is plain arithmetic") {
  const std::vector<ScoreField> fields = {constant_field(vec2(2.0, 0.0)),
                                          constant_field(vec2(0.0, 2.0))};
  const Eigen::VectorXd out = convex_compose(fields, {0.5, 0.5}, 0.5, vec2(0.0, 0.0));
  CHECK(out[0] == 1.0);
  CHECK(out[1] == 1.0);
}

TEST_CASE("opposing constant biases cancel at equal weights") {
  const NoiseSchedule vp = NoiseSchedule::vp_linear();
  const GaussianMixture mix =
      GaussianMixture::single(Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2));
  const Eigen::VectorXd delta = vec2(0.4, -0.7);
  const ScoreField plus = make_estimator(
      {mix, BiasSpec::constant(delta), NoiseSpec::none(), NoiseFreshness::per_call}, vp, 1);
  const ScoreField minus = make_estimator(
      {mix, BiasSpec::constant(-delta), NoiseSpec::none(), NoiseFreshness::per_call}, vp, 2);
  RngStream rng(derive_key(50, 2));
  for (int i = 0; i < 100; ++i) {
    const double t = rng.uniform();
    const Eigen::VectorXd x = rng.normal_vector(2);
    const Eigen::VectorXd combined = convex_compose({plus, minus}, {0.5, 0.5}, t, x);
    // (s + d)/2 + (s - d)/2 cancels the biases up to one rounding of s +- d.
    CHECK((combined - oracle_score(mix, vp, t, x)).norm() <= 1e-14);
  }
}

TEST_CASE("convex weights must form a simplex vector") {
  const std::vector<ScoreField> fields = {constant_field(vec2(1.0, 0.0)),
                                          constant_field(vec2(0.0, 1.0))};
  const Eigen::VectorXd x = vec2(0.0, 0.0);
  CHECK_THROWS_AS(convex_compose(fields, {0.6, 0.6}, 0.5, x), std::invalid_argument);
  CHECK_THROWS_AS(convex_compose(fields, {1.2, -0.2}, 0.5, x), std::invalid_argument);
  CHECK_THROWS_AS(convex_compose(fields, {1.0}, 0.5, x), std::invalid_argument);
}

TEST_CASE("cfg reduces to its endpoints") {
  const NoiseSchedule vp = NoiseSchedule::vp_linear();
  const ScoreField uncond = oracle_field(
      GaussianMixture::single(Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2)), vp);
  const ScoreField cond = oracle_field(
      GaussianMixture::single(vec2(1.5, -0.5), Eigen::MatrixXd::Identity(2, 2)), vp);
  RngStream rng(derive_key(50, 3));
  for (int i = 0; i < 50; ++i) {
    const double t = rng.uniform();
    const Eigen::VectorXd x = rng.normal_vector(2);
    CHECK((cfg_compose(uncond, {cond}, {0.0}, t, x) - uncond(t, x)).norm() == 0.0);
    CHECK((cfg_compose(uncond, {cond}, {1.0}, t, x) - cond(t, x)).norm() == 0.0);
  }
}

TEST_CASE("cfg with unit weights composes product densities") {
  // At t = 0 with unit covariances the guidance sum telescopes to the score
  // of N(mu1 + mu2, I).
  const NoiseSchedule vp = NoiseSchedule::vp_linear();
  const Eigen::VectorXd mu1 = vec2(1.0, 0.5), mu2 = vec2(-0.3, 0.8);
  const ScoreField uncond = oracle_field(
      GaussianMixture::single(Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2)), vp);
  const ScoreField c1 =
      oracle_field(GaussianMixture::single(mu1, Eigen::MatrixXd::Identity(2, 2)), vp);
  const ScoreField c2 =
      oracle_field(GaussianMixture::single(mu2, Eigen::MatrixXd::Identity(2, 2)), vp);
  RngStream rng(derive_key(50, 4));
  for (int i = 0; i < 50; ++i) {
    const Eigen::VectorXd x = rng.normal_vector(2);
    const Eigen::VectorXd out = cfg_compose(uncond, {c1, c2}, {1.0, 1.0}, 0.0, x);
    const Eigen::VectorXd expected = -(x - mu1 - mu2);
    CHECK((out - expected).norm() <= 1e-12);
  }
}

TEST_CASE("convex-combined Gaussian scores form a precision-weighted Gaussian score") {
  // The product-density reading of score composition: at fixed t the convex
  // combination of two Gaussian scores is itself the score of a Gaussian with
  // precision w P1 + (1-w) P2.
  const NoiseSchedule vp = NoiseSchedule::vp_linear();
  RngStream rng(derive_key(50, 5));
  Eigen::MatrixXd s1(2, 2), s2(2, 2);
  s1 << 1.0, 0.2, 0.2, 0.7;
  s2 << 0.5, -0.1, -0.1, 1.3;
  const Eigen::VectorXd mu1 = vec2(0.8, -0.4), mu2 = vec2(-0.9, 0.6);
  const ScoreField f1 = oracle_field(GaussianMixture::single(mu1, s1), vp);
  const ScoreField f2 = oracle_field(GaussianMixture::single(mu2, s2), vp);
  for (const double t : {0.2, 0.5, 0.8}) {
    const AlphaSigma as = alpha_sigma(vp, t);
    Eigen::MatrixXd c1 = as.alpha * as.alpha * s1, c2 = as.alpha * as.alpha * s2;
    c1.diagonal().array() += as.sigma * as.sigma;
    c2.diagonal().array() += as.sigma * as.sigma;
    const Eigen::MatrixXd p1 = c1.inverse(), p2 = c2.inverse();
    for (const double w : {0.3, 0.5, 0.9}) {
      const Eigen::MatrixXd pbar = w * p1 + (1.0 - w) * p2;
      const Eigen::VectorXd mbar =
          pbar.inverse() * (w * p1 * (as.alpha * mu1) + (1.0 - w) * p2 * (as.alpha * mu2));
      for (int i = 0; i < 20; ++i) {
        const Eigen::VectorXd x = rng.normal_vector(2);
        const Eigen::VectorXd combined = convex_compose({f1, f2}, {w, 1.0 - w}, t, x);
        const Eigen::VectorXd closed = -pbar * (x - mbar);
        CHECK((combined - closed).norm() <= 1e-9);
      }
    }
  }
}

TEST_CASE("or weights: uniform limits") {
  const NoiseSchedule vp = NoiseSchedule::vp_linear();
  const ScoreField f1 = oracle_field(
      GaussianMixture::single(vec2(1.0, 0.0), Eigen::MatrixXd::Identity(2, 2)), vp);
  const ScoreField f2 = oracle_field(
      GaussianMixture::single(vec2(-1.0, 0.0), Eigen::MatrixXd::Identity(2, 2)), vp);
  const Eigen::VectorXd x = vec2(0.4, 0.2);
  // T = 0: softmax of constants.
  std::vector<double> w = or_weights({f1, f2}, 0.0, 0.3, 0.5, x);
  CHECK(w[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(w[1] == doctest::Approx(0.5).epsilon(1e-15));
  // Equal densities by symmetry at any temperature.
  w = or_weights({f1, f2}, 7.0, 0.0, 0.5, vec2(0.0, 1.3));
  CHECK(w[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(w[0] + w[1] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("or weights concentrate on the densest member at high temperature") {
  const NoiseSchedule vp = NoiseSchedule::vp_linear();
  const ScoreField near = oracle_field(
      GaussianMixture::single(vec2(0.0, 0.0), Eigen::MatrixXd::Identity(2, 2)), vp);
  const ScoreField far = oracle_field(
      GaussianMixture::single(vec2(3.0, 0.0), Eigen::MatrixXd::Identity(2, 2)), vp);
  const std::vector<double> w = or_weights({near, far}, 1000.0, 0.0, 0.0, vec2(0.0, 0.0));
  CHECK(std::abs(w[0] - 1.0) <= 1e-6);
  CHECK(std::abs(w[1]) <= 1e-6);
}

TEST_CASE("or weights are permutation equivariant") {
  const NoiseSchedule vp = NoiseSchedule::vp_linear();
  const ScoreField a = oracle_field(
      GaussianMixture::single(vec2(0.6, 0.0), Eigen::MatrixXd::Identity(2, 2)), vp);
  const ScoreField b = oracle_field(
      GaussianMixture::single(vec2(-0.2, 0.5), 0.7 * Eigen::MatrixXd::Identity(2, 2)), vp);
  const ScoreField c = oracle_field(
      GaussianMixture::single(vec2(0.1, -0.9), 1.4 * Eigen::MatrixXd::Identity(2, 2)), vp);
  const Eigen::VectorXd x = vec2(0.25, -0.1);
  const std::vector<double> w_abc = or_weights({a, b, c}, 2.0, 0.1, 0.4, x);
  const std::vector<double> w_cab = or_weights({c, a, b}, 2.0, 0.1, 0.4, x);
  CHECK(w_abc[0] == doctest::Approx(w_cab[1]).epsilon(1e-14));
  CHECK(w_abc[1] == doctest::Approx(w_cab[2]).epsilon(1e-14));
  CHECK(w_abc[2] == doctest::Approx(w_cab[0]).epsilon(1e-14));
  CHECK(w_abc[0] + w_abc[1] + w_abc[2] == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("or weights require density-capable members") {
  const NoiseSchedule vp = NoiseSchedule::vp_linear();
  const GaussianMixture mix =
      GaussianMixture::single(Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2));
  const ScoreField biased = make_estimator(
      {mix, BiasSpec::constant(vec2(0.1, 0.0)), NoiseSpec::none(), NoiseFreshness::per_call},
      vp, 1);
  const ScoreField fine = oracle_field(mix, vp);
  CHECK_THROWS_AS(or_weights({fine, biased}, 1.0, 0.0, 0.5, vec2(0.0, 0.0)),
                  std::runtime_error);
}

TEST_CASE("and weights: identical members degenerate to uniform") {
  const NoiseSchedule vp = NoiseSchedule::vp_linear();
  const ScoreField f = oracle_field(
      GaussianMixture::single(vec2(0.3, 0.1), Eigen::MatrixXd::Identity(2, 2)), vp);
  const OdeDynamics dyn = reverse_ode(vp);
  const AndWeights w = and_weights({f, f}, dyn, 0.5, vec2(0.2, -0.4));
  CHECK(w.degenerate);
  CHECK(w.weights[0] == 0.5);
  CHECK(w.weights[1] == 0.5);
}

TEST_CASE("and weights: mirror symmetry splits evenly") {
  const NoiseSchedule vp = NoiseSchedule::vp_linear();
  const Eigen::VectorXd m = vec2(2.0, 0.0);
  const ScoreField f1 =
      oracle_field(GaussianMixture::single(m, Eigen::MatrixXd::Identity(2, 2)), vp);
  const ScoreField f2 =
      oracle_field(GaussianMixture::single(-m, Eigen::MatrixXd::Identity(2, 2)), vp);
  const OdeDynamics dyn = reverse_ode(vp);
  for (const double t : {0.3, 0.6, 0.9}) {
    // Points on the symmetry axis (orthogonal to m).
    const AndWeights w = and_weights({f1, f2}, dyn, t, vec2(0.0, 0.7));
    CHECK_FALSE(w.degenerate);
    CHECK(w.weights[0] == doctest::Approx(0.5).epsilon(1e-10));
  }
}

TEST_CASE("and weights match a brute-force drift-matching scan") {
  const NoiseSchedule vp = NoiseSchedule::vp_linear();
  const GaussianMixture g1 = gauss1d(1.0, 1.0);
  const GaussianMixture g2 = gauss1d(-2.0, 4.0);
  const ScoreField f1 = oracle_field(g1, vp);
  const ScoreField f2 = oracle_field(g2, vp);
  const OdeDynamics dyn = reverse_ode(vp);
  const double t = 0.5;
  Eigen::VectorXd x(1);
  x << -0.5;

  const AndWeights solved = and_weights({f1, f2}, dyn, t, x);
  REQUIRE_FALSE(solved.degenerate);

  const double xc = dyn.xcoef(t), sc = dyn.scoef(t);
  const Eigen::VectorXd s1 = f1(t, x), s2 = f2(t, x);
  const double d1 = f1.dt_logdensity(t, x), d2 = f2.dt_logdensity(t, x);
  auto mismatch = [&](double w) {
    const Eigen::VectorXd u = xc * x + sc * (w * s1 + (1.0 - w) * s2);
    return std::abs((d1 + s1.dot(u)) - (d2 + s2.dot(u)));
  };
  double best_w = 0.0, best = mismatch(0.0);
  for (int i = 1; i <= 10000; ++i) {
    const double w = i / 10000.0;
    const double v = mismatch(w);
    if (v < best) {
      best = v;
      best_w = w;
    }
  }
  CHECK(best_w > 0.0);
  CHECK(best_w < 1.0);
  CHECK(std::abs(solved.weights[0] - best_w) <= 2e-4);

  // At the returned interior solution the drift-matching residual vanishes.
  const double w = solved.weights[0];
  const Eigen::VectorXd u = xc * x + sc * (w * s1 + (1.0 - w) * s2);
  const double big_d1 = d1 + s1.dot(u);
  const double big_d2 = d2 + s2.dot(u);
  CHECK(std::abs(big_d1 - big_d2) <= 1e-8 * (1.0 + std::abs(big_d1)));
}

TEST_CASE("composed fields dispatch per operator") {
  const NoiseSchedule vp = NoiseSchedule::vp_linear();
  const ScoreField f1 = oracle_field(
      GaussianMixture::single(vec2(1.0, 0.0), Eigen::MatrixXd::Identity(2, 2)), vp);
  const ScoreField f2 = oracle_field(
      GaussianMixture::single(vec2(-1.0, 0.0), Eigen::MatrixXd::Identity(2, 2)), vp);
  const Eigen::VectorXd x = vec2(0.3, -0.2);
  const double t = 0.45;

  CompositionSpec convex;
  convex.op = CompositionOperator::convex;
  convex.weights = {0.25, 0.75};
  const ScoreField cf = compose_field(convex, {f1, f2});
  CHECK(cf.provenance == Provenance::composed);
  CHECK((cf(t, x) - convex_compose({f1, f2}, {0.25, 0.75}, t, x)).norm() == 0.0);

  CompositionSpec orspec;
  orspec.op = CompositionOperator::logical_or;
  orspec.temperature = 3.0;
  const ScoreField of = compose_field(orspec, {f1, f2});
  const std::vector<double> ow = or_weights({f1, f2}, 3.0, 0.0, t, x);
  CHECK((of(t, x) - (ow[0] * f1(t, x) + ow[1] * f2(t, x))).norm() <= 1e-14);

  CompositionSpec andspec;
  andspec.op = CompositionOperator::logical_and;
  const OdeDynamics dyn = reverse_ode(vp);
  const ScoreField af = compose_field(andspec, {f1, f2}, std::nullopt, dyn);
  const AndWeights aw = and_weights({f1, f2}, dyn, t, x);
  CHECK((af(t, x) - (aw.weights[0] * f1(t, x) + aw.weights[1] * f2(t, x))).norm() <= 1e-14);

  CompositionSpec cfgspec;
  cfgspec.op = CompositionOperator::cfg;
  cfgspec.weights = {0.7, 0.4};
  CHECK_THROWS_AS(compose_field(cfgspec, {f1, f2}), std::invalid_argument);  // no uncond
  const ScoreField anchor = oracle_field(
      GaussianMixture::single(vec2(0.0, 0.0), Eigen::MatrixXd::Identity(2, 2)), vp);
  const ScoreField gf = compose_field(cfgspec, {f1, f2}, anchor);
  CHECK((gf(t, x) - cfg_compose(anchor, {f1, f2}, {0.7, 0.4}, t, x)).norm() == 0.0);

  CHECK_THROWS_AS(compose_field(andspec, {f1, f2}), std::invalid_argument);  // no dynamics
}

TEST_CASE("simplex projection handles interior, boundary, and exterior points") {
  std::vector<double> w = project_to_simplex({0.5, 0.5});
  CHECK(w[0] == doctest::Approx(0.5).epsilon(1e-15));
  w = project_to_simplex({2.0, 0.0});
  CHECK(w[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(w[1] == doctest::Approx(0.0).epsilon(1e-15));
  w = project_to_simplex({-1.0, -1.0});
  CHECK(w[0] == doctest::Approx(0.5).epsilon(1e-15));
  w = project_to_simplex({1.2, 0.4});
  CHECK(w[0] == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(w[1] == doctest::Approx(0.1).epsilon(1e-12));
  double sum = 0.0;
  for (double v : project_to_simplex({0.3, -2.0, 1.4, 0.9})) {
    CHECK(v >= 0.0);
    sum += v;
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
}
