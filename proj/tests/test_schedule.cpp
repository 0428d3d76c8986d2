// Noise schedules: forward coefficients, closed-form integrals, solver step
// coefficients, and the ancestral/deterministic transport checks.

#include <doctest.h>

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "gpc/oracle.hpp"
#include "gpc/rng.hpp"
#include "gpc/sampler.hpp"
#include "gpc/schedule.hpp"

using namespace gpc;

namespace {

// Composite Simpson quadrature; exact for polynomials of degree <= 3, which
// covers both linear and scaled-linear beta profiles.
double simpson(const std::function<double(double)>& f, double a, double b, int n) {
  if (n % 2 != 0) ++n;
  const double h = (b - a) / n;
  double acc = f(a) + f(b);
  for (int i = 1; i < n; ++i) acc += f(a + i * h) * (i % 2 == 0 ? 2.0 : 4.0);
  return acc * h / 3.0;
}

std::vector<NoiseSchedule> all_schedules() {
  return {NoiseSchedule::vp_linear(), NoiseSchedule::vp_scaled_linear(),
          NoiseSchedule::flow_linear()};
}

}  // namespace

TEST_CASE("forward coefficients are pinned at the data endpoint") {
  for (const NoiseSchedule& sched : all_schedules()) {
    CHECK(std::abs(sched.alpha(0.0) - 1.0) <= 1e-9);
    CHECK(std::abs(sched.sigma(0.0)) <= 1e-9);
  }
}

TEST_CASE("flow-linear interpolates linearly") {
  const NoiseSchedule flow = NoiseSchedule::flow_linear();
  AlphaSigma as = alpha_sigma(flow, 0.0);
  CHECK(as.alpha == 1.0);
  CHECK(as.sigma == 0.0);
  as = alpha_sigma(flow, 0.25);
  CHECK(as.alpha == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(as.sigma == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(flow.alpha(1.0) == 0.0);
  CHECK(flow.sigma(1.0) == 1.0);
}

TEST_CASE("variance preservation holds for vp kinds on a fine grid") {
  for (const ScheduleKind kind : {ScheduleKind::vp_linear, ScheduleKind::vp_scaled_linear}) {
    const NoiseSchedule sched = NoiseSchedule::make(kind);
    for (int i = 0; i <= 1000; ++i) {
      const double t = i / 1000.0;
      const double a = sched.alpha(t), s = sched.sigma(t);
      CHECK(std::abs(a * a + s * s - 1.0) <= 1e-9);
    }
  }
}

TEST_CASE("alpha is nonincreasing and sigma nondecreasing on a 1e-3 grid") {
  for (const NoiseSchedule& sched : all_schedules()) {
    double prev_a = sched.alpha(0.0), prev_s = sched.sigma(0.0);
    for (int i = 1; i <= 1000; ++i) {
      const double t = i / 1000.0;
      const double a = sched.alpha(t), s = sched.sigma(t);
      CHECK(a <= prev_a + 1e-15);
      CHECK(s >= prev_s - 1e-15);
      prev_a = a;
      prev_s = s;
    }
  }
}

TEST_CASE("vp alpha matches the quadrature of beta") {
  // alpha(t) = exp(-1/2 int_0^t beta); Simpson is exact for these profiles,
  // so the closed-form running integral must agree to roundoff.
  for (const ScheduleKind kind : {ScheduleKind::vp_linear, ScheduleKind::vp_scaled_linear}) {
    const NoiseSchedule sched = NoiseSchedule::make(kind);
    for (const double t : {0.1, 0.5, 0.9, 1.0}) {
      const double numeric = simpson([&](double u) { return sched.beta(u); }, 0.0, t, 200);
      CHECK(sched.beta_integral(t) == doctest::Approx(numeric).epsilon(1e-12));
      CHECK(sched.alpha(t) == doctest::Approx(std::exp(-0.5 * numeric)).epsilon(1e-12));
      const double s = sched.sigma(t);
      CHECK(sched.alpha(t) * sched.alpha(t) + s * s == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
  // Spot value for the default vp-linear range at t = 0.5.
  const NoiseSchedule vp = NoiseSchedule::vp_linear();
  CHECK(vp.beta_integral(0.5) == doctest::Approx(0.1 * 0.5 + 0.5 * 19.9 * 0.25).epsilon(1e-14));
}

TEST_CASE("domain errors outside [0,1] and for flow beta") {
  const NoiseSchedule vp = NoiseSchedule::vp_linear();
  CHECK_THROWS_AS(vp.alpha(-0.1), std::domain_error);
  CHECK_THROWS_AS(vp.sigma(1.5), std::domain_error);
  CHECK_THROWS_AS(NoiseSchedule::flow_linear().beta(0.5), std::domain_error);
  CHECK_THROWS_AS(NoiseSchedule::flow_linear().beta_integral(0.5), std::domain_error);
  CHECK_THROWS_AS(NoiseSchedule::vp_linear(0.0, 20.0), std::invalid_argument);
}

TEST_CASE("schedule kind names round-trip") {
  for (const ScheduleKind kind : {ScheduleKind::vp_linear, ScheduleKind::vp_scaled_linear,
                                  ScheduleKind::flow_linear}) {
    CHECK(schedule_kind_from_string(to_string(kind)) == kind);
  }
  CHECK_THROWS_AS(schedule_kind_from_string("cosine"), std::invalid_argument);
  for (const Solver solver : {Solver::ddpm, Solver::ddim, Solver::pf_ode_euler,
                              Solver::flow_euler}) {
    CHECK(solver_from_string(to_string(solver)) == solver);
  }
}

TEST_CASE("time_grid is the ascending uniform grid") {
  const std::vector<double> grid = time_grid(4);
  REQUIRE(grid.size() == 5);
  CHECK(grid.front() == 0.0);
  CHECK(grid.back() == 1.0);
  CHECK(grid[2] == 0.5);
  CHECK_THROWS_AS(time_grid(0), std::invalid_argument);
}

TEST_CASE("zero-length step is the identity for every solver") {
  for (const NoiseSchedule& sched : all_schedules()) {
    for (const Solver solver : {Solver::ddpm, Solver::ddim, Solver::pf_ode_euler,
                                Solver::flow_euler}) {
      const StepCoefficients c = step_coefficients(sched, solver, 0.5, 0.5);
      CHECK(c.a == 1.0);
      CHECK(c.b == 0.0);
      CHECK(c.noise == 0.0);
    }
  }
}

TEST_CASE("reverse-step ordering is enforced") {
  const NoiseSchedule vp = NoiseSchedule::vp_linear();
  CHECK_THROWS_AS(step_coefficients(vp, Solver::ddim, 0.4, 0.5), std::invalid_argument);
}

TEST_CASE("singular departure nodes are refused") {
  // flow-linear has alpha(1) = 0, so score-form steps leaving t = 1 divide by 0.
  const NoiseSchedule flow = NoiseSchedule::flow_linear();
  CHECK_THROWS_AS(step_coefficients(flow, Solver::ddim, 1.0, 0.99), std::domain_error);
  CHECK_THROWS_AS(step_coefficients(flow, Solver::ddpm, 1.0, 0.99), std::domain_error);
  // flow-euler consumes velocity and has no singularity there.
  CHECK_NOTHROW(step_coefficients(flow, Solver::flow_euler, 1.0, 0.99));
}

TEST_CASE("deterministic solvers carry zero step noise; ddpm nonnegative") {
  const NoiseSchedule vp = NoiseSchedule::vp_linear();
  RngStream rng(derive_key(2024, 7));
  for (int i = 0; i < 200; ++i) {
    double t0 = 0.05 + 0.95 * rng.uniform();
    double t1 = t0 * rng.uniform();
    for (const Solver solver : {Solver::ddim, Solver::pf_ode_euler}) {
      CHECK(step_coefficients(vp, solver, t0, t1).noise == 0.0);
    }
    CHECK(step_coefficients(NoiseSchedule::flow_linear(), Solver::flow_euler, t0, t1).noise ==
          0.0);
    CHECK(step_coefficients(vp, Solver::ddpm, t0, t1).noise >= 0.0);
  }
  // Interior ancestral steps are strictly stochastic; the final step to t=0
  // has zero posterior variance.
  CHECK(step_coefficients(vp, Solver::ddpm, 0.5, 0.4).noise > 0.0);
  CHECK(step_coefficients(vp, Solver::ddpm, 0.01, 0.0).noise == 0.0);
}

TEST_CASE("solver input parameterizations") {
  const NoiseSchedule vp = NoiseSchedule::vp_linear();
  CHECK(step_coefficients(vp, Solver::ddim, 0.5, 0.4).input == Parameterization::score);
  CHECK(step_coefficients(vp, Solver::ddpm, 0.5, 0.4).input == Parameterization::score);
  CHECK(step_coefficients(vp, Solver::pf_ode_euler, 0.5, 0.4).input == Parameterization::score);
  const NoiseSchedule flow = NoiseSchedule::flow_linear();
  CHECK(step_coefficients(flow, Solver::flow_euler, 0.5, 0.4).input ==
        Parameterization::velocity);
}

TEST_CASE("ddim coefficients match the score-form ancestral step") {
  const NoiseSchedule vp = NoiseSchedule::vp_linear();
  const double t0 = 0.6, t1 = 0.5;
  const double a0 = vp.alpha(t0), s0 = vp.sigma(t0);
  const double a1 = vp.alpha(t1), s1 = vp.sigma(t1);
  const StepCoefficients c = step_coefficients(vp, Solver::ddim, t0, t1);
  CHECK(c.a == doctest::Approx(a1 / a0).epsilon(1e-15));
  CHECK(c.b == doctest::Approx(a1 * s0 * s0 / a0 - s1 * s0).epsilon(1e-15));
  CHECK(c.noise == 0.0);
}

TEST_CASE("flow-euler is the plain Euler step on the velocity field") {
  const NoiseSchedule flow = NoiseSchedule::flow_linear();
  const StepCoefficients c = step_coefficients(flow, Solver::flow_euler, 0.8, 0.55);
  CHECK(c.a == 1.0);
  CHECK(c.b == doctest::Approx(-0.25).epsilon(1e-15));
}

TEST_CASE("pf-ode-euler uses the departure-node drift coefficients") {
  for (const NoiseSchedule& sched :
       {NoiseSchedule::vp_linear(), NoiseSchedule::flow_linear()}) {
    const double t0 = 0.7, t1 = 0.6, h = t0 - t1;
    const StepCoefficients c = step_coefficients(sched, Solver::pf_ode_euler, t0, t1);
    CHECK(c.a == doctest::Approx(1.0 - h * sched.drift_x_coef(t0)).epsilon(1e-15));
    CHECK(c.b == doctest::Approx(-h * sched.drift_s_coef(t0)).epsilon(1e-15));
  }
  // VP probability-flow drift collapses to -beta/2 on both terms.
  const NoiseSchedule vp = NoiseSchedule::vp_linear();
  CHECK(vp.drift_x_coef(0.3) == doctest::Approx(-0.5 * vp.beta(0.3)).epsilon(1e-15));
  CHECK(vp.drift_s_coef(0.3) == doctest::Approx(-0.5 * vp.beta(0.3)).epsilon(1e-15));
}

TEST_CASE("ddpm posterior step reproduces the mean/variance identities") {
  const NoiseSchedule vp = NoiseSchedule::vp_linear();
  const double t0 = 0.5, t1 = 0.45;
  const double a0 = vp.alpha(t0), s0 = vp.sigma(t0);
  const double a1 = vp.alpha(t1), s1 = vp.sigma(t1);
  const double r = (a0 * a0) / (a1 * a1);
  const StepCoefficients c = step_coefficients(vp, Solver::ddpm, t0, t1);
  CHECK(c.a == doctest::Approx(a1 / a0).epsilon(1e-15));
  CHECK(c.b == doctest::Approx((1.0 - r) * a1 / a0).epsilon(1e-15));
  CHECK(c.noise ==
        doctest::Approx(std::sqrt(s1 * s1 / (s0 * s0) * (1.0 - r))).epsilon(1e-12));
}

TEST_CASE("ancestral chains preserve the standard normal law") {
  // 5e4 ddpm chains on an N=1000 grid with the exact score of N(0,1): the
  // terminal batch must look standard normal (mean within 0.02, variance
  // within 5%).
  const NoiseSchedule vp = NoiseSchedule::vp_linear();
  const GaussianMixture std1 =
      GaussianMixture::single(Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1));
  const ScoreField field = oracle_field(std1, vp);
  const Eigen::MatrixXd endpoints =
      sample_endpoints(field, vp, Solver::ddpm, 1000, 50000, 20240901, 0);
  REQUIRE(endpoints.rows() == 50000);
  REQUIRE(endpoints.cols() == 1);
  const double mean = endpoints.col(0).mean();
  const double var = (endpoints.col(0).array() - mean).square().sum() / (endpoints.rows() - 1);
  CHECK(std::abs(mean) <= 0.02);
  CHECK(std::abs(var - 1.0) <= 0.05);
}

TEST_CASE("ddim transports noise to the target single Gaussian") {
  // Exact-score DDIM on a fine grid: terminal sample moments must match the
  // target within 3 Monte-Carlo standard errors at n = 5e4 (the step count is
  // chosen so discretization error sits well below the MC error).
  const NoiseSchedule vp = NoiseSchedule::vp_linear();
  Eigen::VectorXd mu(2);
  mu << 1.0, -0.5;
  Eigen::MatrixXd cov(2, 2);
  cov << 1.0, 0.0, 0.0, 0.64;
  const ScoreField field = oracle_field(GaussianMixture::single(mu, cov), vp);
  const int n = 50000;
  const Eigen::MatrixXd endpoints =
      sample_endpoints(field, vp, Solver::ddim, 1000, n, 777, 0);
  const Eigen::VectorXd mean = endpoints.colwise().mean();
  Eigen::MatrixXd centered = endpoints.rowwise() - mean.transpose();
  const Eigen::MatrixXd cov_hat = centered.transpose() * centered / (n - 1);
  for (int i = 0; i < 2; ++i) {
    CHECK(std::abs(mean[i] - mu[i]) <= 3.0 * std::sqrt(cov(i, i) / n));
    for (int j = 0; j < 2; ++j) {
      const double se = std::sqrt((cov(i, i) * cov(j, j) + cov(i, j) * cov(i, j)) / n);
      CHECK(std::abs(cov_hat(i, j) - cov(i, j)) <= 3.0 * se);
    }
  }
}
