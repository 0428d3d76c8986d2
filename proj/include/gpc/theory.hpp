#pragma once

// Numerical certification of the composition guarantees:
//
//   * single-step MSE quadratic Q(w) = A w^2 + B w + C for the convex pair,
//     with closed-form coefficients from declared bias/noise moments and a
//     common-random-number Monte-Carlo curve with standard errors;
//   * the Gronwall trajectory bounds (pathwise and expected form) for
//     bias-only estimators under affine reverse dynamics, checked against
//     paired simulations;
//   * the corollary transfer: integrated score MSE ordering implies certified
//     bound ordering for the composed field, with measured errors reported.

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "gpc/oracle.hpp"
#include "gpc/sampler.hpp"
#include "gpc/schedule.hpp"

namespace gpc {

struct MSEQuadratic {
  double A = 0.0, B = 0.0, C = 0.0;
  double w_star = 0.0;  // -B / (2A) for A > 0
  double q_star = 0.0;  // C - B^2 / (4A)
  double gap0 = 0.0;    // Q(0) - Q(w*) = B^2 / (4A)
  double gap1 = 0.0;    // Q(1) - Q(w*) = (2A + B)^2 / (4A)
  bool aligned = false; // A ~ 0: perfectly aligned errors, Q effectively linear

  double q(double w) const { return (A * w + B) * w + C; }
};

struct EstimatorPairSpec {
  EstimatorSpec first;
  EstimatorSpec second;
  double noise_correlation = 0.0;  // rho coupling the two gaussian noises
};

// Closed-form Q(w) at (t, x) from exact noise moments (declared covariances;
// E<eta1,eta2> = rho tr(L1^T L2)). If n_mc > 0 a Monte-Carlo cross-check of
// the three moment groups runs and its agreement is recorded.
struct MSECrossCheck {
  double a_mc = 0.0, b_mc = 0.0, c_mc = 0.0;  // MC-estimated coefficients
  double a_se = 0.0, b_se = 0.0, c_se = 0.0;
  int n_mc = 0;
};
MSEQuadratic analytic_mse(const EstimatorPairSpec& pair, const NoiseSchedule& sched, double t,
                          const Eigen::VectorXd& x, int n_mc = 0, std::uint64_t seed = 0,
                          MSECrossCheck* cross = nullptr);

struct MSECurve {
  std::vector<double> w;
  std::vector<double> q;   // MC estimate of Q at each w
  std::vector<double> se;  // standard error of each estimate
  // Per-draw moment means (|u|^2, <u,v>, |v|^2) and their covariance; the
  // curve at ANY w is v(w)^T means with v(w) = (w^2, 2w(1-w), (1-w)^2), so
  // callers can evaluate arbitrary grids from one draw set.
  Eigen::Vector3d moments = Eigen::Vector3d::Zero();
  Eigen::Matrix3d moment_cov = Eigen::Matrix3d::Zero();
  int n_mc = 0;

  double q_at(double w) const;
  double se_at(double w) const;
};

// Monte-Carlo Q(w) on a grid with common random numbers across w.
MSECurve empirical_mse_curve(const EstimatorPairSpec& pair, const NoiseSchedule& sched, double t,
                             const Eigen::VectorXd& x, const std::vector<double>& w_grid,
                             int n_mc, std::uint64_t seed, int workers = 1);

// ----------------------------------------------------------------------------
// Trajectory stability
// ----------------------------------------------------------------------------

struct GronwallCertificate {
  std::vector<double> grid;        // ascending 0..1 (data -> noise end)
  std::vector<double> l_x;         // Lipschitz of f in x
  std::vector<double> l_s;         // |score coefficient| of the dynamics
  std::vector<double> lambda_hat;  // estimator score Jacobian spectral norm
  std::vector<double> kappa;       // uniform score-error bound
  std::vector<double> l_tilde;     // l_x + l_s * lambda_hat

  double pathwise_bound = 0.0;     // integral e^{int L~} L_s kappa dt
  double expected_bound = 0.0;     // sqrt(int e^{2 int L~} L_s^2) * sqrt(int kappa^2)
  std::vector<double> measured;    // terminal errors of the simulated pairs
  double mean_measured = 0.0;
  double max_measured = 0.0;
  double slack = 0.0;              // pathwise_bound - max_measured
  std::string dynamics_convention;
};

// Certify a bias-only estimator on a single-Gaussian oracle under affine
// reverse dynamics. kappa(t): constant bias -> ||b||; mean-shift ->
// alpha(t) ||C(t)^{-1} delta|| (exact). Linear bias or stochastic noise has
// no uniform bound and is refused.
GronwallCertificate gronwall_certificate(const GaussianMixture& oracle_mix,
                                         const EstimatorSpec& estimator,
                                         const NoiseSchedule& sched, const OdeDynamics& dynamics,
                                         int n_steps, int n_pairs, std::uint64_t seed,
                                         int workers = 1);

// Raw expected-bound quadrature over arbitrary grid functions (the closed-form
// spot checks drive this directly).
double expected_bound_from_functions(const std::vector<double>& grid,
                                     const std::vector<double>& l_tilde,
                                     const std::vector<double>& l_s,
                                     const std::vector<double>& kappa);
double pathwise_bound_from_functions(const std::vector<double>& grid,
                                     const std::vector<double>& l_tilde,
                                     const std::vector<double>& l_s,
                                     const std::vector<double>& kappa);

// ----------------------------------------------------------------------------
// Corollary transfer
// ----------------------------------------------------------------------------

struct CorollaryEntry {
  double w = 0.0;
  double integrated_mse = 0.0;   // int Q_w(t) dt along the oracle trajectory
  double certified_bound = 0.0;  // shared-prefactor bound, monotone in the above
  double measured_error = 0.0;   // mean terminal error over pairs
};

struct CorollaryReport {
  std::vector<CorollaryEntry> entries;     // one per w in the grid
  CorollaryEntry parent_first;             // w = 1
  CorollaryEntry parent_second;            // w = 0
  // For every w whose integrated MSE is strictly below both parents', the
  // certified bound is strictly below both parents' bounds (asserted), and
  // whether the measured error also improved (reported).
  bool premise_holds_somewhere = false;
  bool bounds_follow_premise = true;
  bool measured_follows_premise = true;
};

CorollaryReport corollary_check(const EstimatorPairSpec& pair, const NoiseSchedule& sched,
                                const std::vector<double>& w_grid, const OdeDynamics& dynamics,
                                int n_steps, int n_pairs, std::uint64_t seed, int workers = 1);

}  // namespace gpc
