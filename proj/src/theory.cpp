#include "gpc/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Cholesky>

#include "gpc/compose.hpp"
#include "gpc/rng.hpp"
#include "gpc/util.hpp"

namespace gpc {

namespace {

// Deterministic score-error component b_i(t, x) of an estimator spec. For all
// supported kinds this is exact; mean-shift is the score difference of the
// translated and original laws (x-independent for single Gaussians).
Eigen::VectorXd bias_vector(const EstimatorSpec& spec, const NoiseSchedule& sched, double t,
                            const Eigen::VectorXd& x) {
  switch (spec.bias.kind) {
    case BiasKind::none:
      return Eigen::VectorXd::Zero(x.size());
    case BiasKind::constant:
      return spec.bias.vector;
    case BiasKind::linear:
      return spec.bias.matrix * x;
    case BiasKind::mean_shift: {
      const GaussianMixture shifted = spec.base.shifted(spec.bias.vector);
      return oracle_score(shifted, sched, t, x) - oracle_score(spec.base, sched, t, x);
    }
  }
  throw std::logic_error("unreachable bias kind");
}

MSEQuadratic quadratic_from_coeffs(double a, double b, double c) {
  MSEQuadratic q;
  q.A = a;
  q.B = b;
  q.C = c;
  const double scale = std::max({1.0, std::abs(b), std::abs(c)});
  q.aligned = !(a > 1e-12 * scale);
  if (q.aligned) {
    // Degenerate quadratic: the two error vectors coincide in distribution and
    // Q is effectively linear; minimize over the endpoints of [0, 1].
    q.w_star = (b >= 0.0) ? 0.0 : 1.0;
    q.q_star = q.q(q.w_star);
    q.gap0 = q.q(0.0) - q.q_star;
    q.gap1 = q.q(1.0) - q.q_star;
  } else {
    q.w_star = -b / (2.0 * a);
    q.q_star = c - b * b / (4.0 * a);
    q.gap0 = b * b / (4.0 * a);
    q.gap1 = (2.0 * a + b) * (2.0 * a + b) / (4.0 * a);
  }
  return q;
}

// One CRN draw set for the pair's error vectors u = b1 + eta1, v = b2 + eta2,
// reduced to the per-draw moment triple (|u|^2, <u,v>, |v|^2) — every Q(w) on
// any grid is a fixed linear functional of these rows.
Eigen::MatrixXd moment_rows(const EstimatorPairSpec& pair, const NoiseSchedule& sched, double t,
                            const Eigen::VectorXd& x, int n_mc, std::uint64_t seed, int workers) {
  const Eigen::Index dim = x.size();
  const Eigen::VectorXd b1 = bias_vector(pair.first, sched, t, x);
  const Eigen::VectorXd b2 = bias_vector(pair.second, sched, t, x);
  const Eigen::MatrixXd l1 = noise_chol(pair.first.noise, dim);
  const Eigen::MatrixXd l2 = noise_chol(pair.second.noise, dim);
  const double rho = pair.noise_correlation;
  if (!(rho >= -1.0 && rho <= 1.0)) {
    throw std::invalid_argument("noise correlation must lie in [-1, 1]");
  }
  const double comp = std::sqrt(std::max(0.0, 1.0 - rho * rho));
  const std::uint64_t key_a = derive_key(seed, 0xa);
  const std::uint64_t key_b = derive_key(seed, 0xb);

  Eigen::MatrixXd rows(n_mc, 3);
  parallel_for(n_mc, workers, [&](std::int64_t i) {
    const Eigen::VectorXd za = normal_vector_at(key_a, static_cast<std::uint64_t>(i), dim);
    const Eigen::VectorXd zb = normal_vector_at(key_b, static_cast<std::uint64_t>(i), dim);
    const Eigen::VectorXd u = b1 + l1 * za;
    const Eigen::VectorXd v = b2 + l2 * (rho * za + comp * zb);
    rows(i, 0) = u.squaredNorm();
    rows(i, 1) = u.dot(v);
    rows(i, 2) = v.squaredNorm();
  });
  return rows;
}

void reduce_moments(const Eigen::MatrixXd& rows, Eigen::Vector3d* mean, Eigen::Matrix3d* cov) {
  const Eigen::Index n = rows.rows();
  *mean = rows.colwise().mean();
  cov->setZero();
  if (n < 2) return;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Vector3d d = rows.row(i).transpose() - *mean;
    *cov += d * d.transpose();
  }
  *cov /= static_cast<double>(n - 1);
}

Eigen::Vector3d weight_loadings(double w) {
  return {w * w, 2.0 * w * (1.0 - w), (1.0 - w) * (1.0 - w)};
}

// Exponent E(t) = int_0^t l_tilde, accumulated from the data end: the reverse
// solve starts at t = 1 with zero error, so in proof time u = 1 - t the
// Gronwall exponent over [u, U] is exactly E(t).
std::vector<double> gronwall_exponent(const std::vector<double>& grid,
                                      const std::vector<double>& l_tilde) {
  return cumulative_trapezoid(grid, l_tilde);
}

void check_bias_only(const EstimatorSpec& spec, const char* where) {
  if (spec.noise.kind != NoiseKind::none) {
    throw std::invalid_argument(std::string(where) +
                                ": stochastic estimator noise admits no uniform score-error "
                                "bound; certification refused");
  }
  if (spec.bias.kind == BiasKind::linear) {
    throw std::invalid_argument(std::string(where) +
                                ": linear bias grows unboundedly in x and admits no uniform "
                                "score-error bound; certification refused");
  }
}

// kappa(t): uniform-in-x norm of the deterministic score error.
std::vector<double> kappa_profile(const EstimatorSpec& spec, const NoiseSchedule& sched,
                                  const std::vector<double>& grid) {
  std::vector<double> kappa(grid.size(), 0.0);
  if (spec.bias.kind == BiasKind::none) return kappa;
  if (spec.bias.kind == BiasKind::constant) {
    std::fill(kappa.begin(), kappa.end(), spec.bias.vector.norm());
    return kappa;
  }
  // Mean shift on a single Gaussian: the score error is alpha C(t)^{-1} delta,
  // independent of x, so its norm is the exact uniform bound.
  const Eigen::MatrixXd& cov0 = spec.base.components()[0].cov;
  const Eigen::Index dim = spec.base.dim();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double a = sched.alpha(grid[i]);
    const double s = sched.sigma(grid[i]);
    const Eigen::MatrixXd c =
        a * a * cov0 + s * s * Eigen::MatrixXd::Identity(dim, dim);
    Eigen::LLT<Eigen::MatrixXd> llt(c);
    kappa[i] = a * llt.solve(spec.bias.vector).norm();
  }
  return kappa;
}

}  // namespace

double MSECurve::q_at(double w) const { return weight_loadings(w).dot(moments); }

double MSECurve::se_at(double w) const {
  if (n_mc < 2) return 0.0;
  const Eigen::Vector3d g = weight_loadings(w);
  const double var = g.dot(moment_cov * g) / static_cast<double>(n_mc);
  return std::sqrt(std::max(0.0, var));
}

MSEQuadratic analytic_mse(const EstimatorPairSpec& pair, const NoiseSchedule& sched, double t,
                          const Eigen::VectorXd& x, int n_mc, std::uint64_t seed,
                          MSECrossCheck* cross) {
  const Eigen::Index dim = x.size();
  if (pair.first.base.dim() != dim || pair.second.base.dim() != dim) {
    throw std::invalid_argument("analytic_mse: estimator/base dimension mismatch");
  }
  const Eigen::VectorXd b1 = bias_vector(pair.first, sched, t, x);
  const Eigen::VectorXd b2 = bias_vector(pair.second, sched, t, x);
  const Eigen::MatrixXd l1 = noise_chol(pair.first.noise, dim);
  const Eigen::MatrixXd l2 = noise_chol(pair.second.noise, dim);
  const double e11 = l1.squaredNorm();                                  // E|eta1|^2
  const double e22 = l2.squaredNorm();                                  // E|eta2|^2
  const double e12 = pair.noise_correlation * (l1.transpose() * l2).trace();  // E<eta1,eta2>

  const Eigen::VectorXd db = b1 - b2;
  const double a = db.squaredNorm() + e11 + e22 - 2.0 * e12;
  const double b = 2.0 * b2.dot(db) - 2.0 * e22 + 2.0 * e12;
  const double c = b2.squaredNorm() + e22;
  const MSEQuadratic quad = quadratic_from_coeffs(a, b, c);

  if (n_mc > 0 && cross != nullptr) {
    const Eigen::MatrixXd rows = moment_rows(pair, sched, t, x, n_mc, seed, 1);
    Eigen::Vector3d mean;
    Eigen::Matrix3d cov;
    reduce_moments(rows, &mean, &cov);
    // A = m1 - 2 m2 + m3, B = 2 m2 - 2 m3, C = m3 as linear functionals.
    const Eigen::Vector3d ga(1.0, -2.0, 1.0), gb(0.0, 2.0, -2.0), gc(0.0, 0.0, 1.0);
    const double inv_n = 1.0 / static_cast<double>(n_mc);
    cross->a_mc = ga.dot(mean);
    cross->b_mc = gb.dot(mean);
    cross->c_mc = gc.dot(mean);
    cross->a_se = std::sqrt(std::max(0.0, ga.dot(cov * ga) * inv_n));
    cross->b_se = std::sqrt(std::max(0.0, gb.dot(cov * gb) * inv_n));
    cross->c_se = std::sqrt(std::max(0.0, gc.dot(cov * gc) * inv_n));
    cross->n_mc = n_mc;
  }
  return quad;
}

MSECurve empirical_mse_curve(const EstimatorPairSpec& pair, const NoiseSchedule& sched, double t,
                             const Eigen::VectorXd& x, const std::vector<double>& w_grid,
                             int n_mc, std::uint64_t seed, int workers) {
  if (n_mc < 2) throw std::invalid_argument("empirical_mse_curve: n_mc must be >= 2");
  MSECurve curve;
  curve.n_mc = n_mc;
  const Eigen::MatrixXd rows = moment_rows(pair, sched, t, x, n_mc, seed, workers);
  Eigen::Vector3d mean;
  Eigen::Matrix3d cov;
  reduce_moments(rows, &mean, &cov);
  curve.moments = mean;
  curve.moment_cov = cov;
  curve.w = w_grid;
  curve.q.reserve(w_grid.size());
  curve.se.reserve(w_grid.size());
  for (double w : w_grid) {
    curve.q.push_back(curve.q_at(w));
    curve.se.push_back(curve.se_at(w));
  }
  return curve;
}

double pathwise_bound_from_functions(const std::vector<double>& grid,
                                     const std::vector<double>& l_tilde,
                                     const std::vector<double>& l_s,
                                     const std::vector<double>& kappa) {
  if (grid.size() != l_tilde.size() || grid.size() != l_s.size() || grid.size() != kappa.size()) {
    throw std::invalid_argument("bound quadrature: mismatched grid function lengths");
  }
  const std::vector<double> expo = gronwall_exponent(grid, l_tilde);
  std::vector<double> integrand(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    integrand[i] = std::exp(expo[i]) * l_s[i] * kappa[i];
  }
  return trapezoid(grid, integrand);
}

double expected_bound_from_functions(const std::vector<double>& grid,
                                     const std::vector<double>& l_tilde,
                                     const std::vector<double>& l_s,
                                     const std::vector<double>& kappa) {
  if (grid.size() != l_tilde.size() || grid.size() != l_s.size() || grid.size() != kappa.size()) {
    throw std::invalid_argument("bound quadrature: mismatched grid function lengths");
  }
  const std::vector<double> expo = gronwall_exponent(grid, l_tilde);
  std::vector<double> weight(grid.size());
  std::vector<double> kappa2(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    weight[i] = std::exp(2.0 * expo[i]) * l_s[i] * l_s[i];
    kappa2[i] = kappa[i] * kappa[i];
  }
  return std::sqrt(trapezoid(grid, weight)) * std::sqrt(trapezoid(grid, kappa2));
}

GronwallCertificate gronwall_certificate(const GaussianMixture& oracle_mix,
                                         const EstimatorSpec& estimator,
                                         const NoiseSchedule& sched, const OdeDynamics& dynamics,
                                         int n_steps, int n_pairs, std::uint64_t seed,
                                         int workers) {
  if (!oracle_mix.is_single()) {
    throw std::invalid_argument(
        "gronwall_certificate: exact score Lipschitz profile requires a single-Gaussian oracle");
  }
  check_bias_only(estimator, "gronwall_certificate");
  if (n_steps < 1) throw std::invalid_argument("gronwall_certificate: n_steps must be >= 1");
  if (n_pairs < 1) throw std::invalid_argument("gronwall_certificate: n_pairs must be >= 1");

  GronwallCertificate cert;
  cert.dynamics_convention = dynamics.convention;
  cert.grid = time_grid(n_steps);
  const std::size_t n = cert.grid.size();
  cert.l_x.resize(n);
  cert.l_s.resize(n);
  cert.lambda_hat.resize(n);
  cert.l_tilde.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = cert.grid[i];
    cert.l_x[i] = dynamics.l_x(t);
    cert.l_s[i] = dynamics.l_s(t);
    cert.lambda_hat[i] = oracle_score_lipschitz(oracle_mix, sched, t);
    cert.l_tilde[i] = cert.l_x[i] + cert.l_s[i] * cert.lambda_hat[i];
  }
  cert.kappa = kappa_profile(estimator, sched, cert.grid);
  cert.pathwise_bound = pathwise_bound_from_functions(cert.grid, cert.l_tilde, cert.l_s, cert.kappa);
  cert.expected_bound = expected_bound_from_functions(cert.grid, cert.l_tilde, cert.l_s, cert.kappa);

  const ScoreField oracle_f = oracle_field(oracle_mix, sched);
  const ScoreField est_f = make_estimator(estimator, sched, derive_key(seed, 0xe5));
  cert.measured.assign(static_cast<std::size_t>(n_pairs), 0.0);
  parallel_for(n_pairs, workers, [&](std::int64_t i) {
    const PairResult pr = simulate_pair(oracle_f, est_f, dynamics, n_steps,
                                        derive_key(seed, static_cast<std::uint64_t>(i)));
    cert.measured[static_cast<std::size_t>(i)] = pr.terminal_error;
  });
  double sum = 0.0, mx = 0.0;
  for (double e : cert.measured) {
    sum += e;
    mx = std::max(mx, e);
  }
  cert.mean_measured = sum / static_cast<double>(n_pairs);
  cert.max_measured = mx;
  cert.slack = cert.pathwise_bound - cert.max_measured;
  return cert;
}

CorollaryReport corollary_check(const EstimatorPairSpec& pair, const NoiseSchedule& sched,
                                const std::vector<double>& w_grid, const OdeDynamics& dynamics,
                                int n_steps, int n_pairs, std::uint64_t seed, int workers) {
  check_bias_only(pair.first, "corollary_check");
  check_bias_only(pair.second, "corollary_check");
  if (!pair.first.base.is_single() || !pair.second.base.is_single()) {
    throw std::invalid_argument("corollary_check: single-Gaussian bases required");
  }
  const MixtureComponent& c1 = pair.first.base.components()[0];
  const MixtureComponent& c2 = pair.second.base.components()[0];
  if (!c1.mean.isApprox(c2.mean) || !c1.cov.isApprox(c2.cov)) {
    throw std::invalid_argument(
        "corollary_check: both estimators must target the same base law");
  }
  if (n_steps < 1) throw std::invalid_argument("corollary_check: n_steps must be >= 1");
  if (n_pairs < 1) throw std::invalid_argument("corollary_check: n_pairs must be >= 1");

  const GaussianMixture& base = pair.first.base;
  const std::vector<double> grid = time_grid(n_steps);
  const std::size_t n = grid.size();

  // Shared dynamics profile: all convex combinations of bias-only estimators
  // on the same base have the oracle's score Jacobian, so one exponent serves
  // every w — the bound is prefactor * sqrt(integrated MSE).
  std::vector<double> l_s(n), l_tilde(n), weight(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = grid[i];
    const double lx = dynamics.l_x(t);
    l_s[i] = dynamics.l_s(t);
    l_tilde[i] = lx + l_s[i] * oracle_score_lipschitz(base, sched, t);
  }
  const std::vector<double> expo = cumulative_trapezoid(grid, l_tilde);
  for (std::size_t i = 0; i < n; ++i) {
    weight[i] = std::exp(2.0 * expo[i]) * l_s[i] * l_s[i];
  }
  const double prefactor = std::sqrt(trapezoid(grid, weight));

  // Deterministic per-node error vectors of the two parents (x-independent).
  const Eigen::VectorXd probe = Eigen::VectorXd::Zero(base.dim());
  std::vector<Eigen::VectorXd> bias1(n), bias2(n);
  for (std::size_t i = 0; i < n; ++i) {
    bias1[i] = bias_vector(pair.first, sched, grid[i], probe);
    bias2[i] = bias_vector(pair.second, sched, grid[i], probe);
  }

  const ScoreField oracle_f = oracle_field(base, sched);
  const ScoreField est1 = make_estimator(pair.first, sched, derive_key(seed, 1));
  const ScoreField est2 = make_estimator(pair.second, sched, derive_key(seed, 2));

  auto entry_for = [&](double w, std::uint64_t w_slot) {
    CorollaryEntry e;
    e.w = w;
    std::vector<double> q(n);
    for (std::size_t i = 0; i < n; ++i) {
      q[i] = (w * bias1[i] + (1.0 - w) * bias2[i]).squaredNorm();
    }
    e.integrated_mse = trapezoid(grid, q);
    e.certified_bound = prefactor * std::sqrt(e.integrated_mse);

    CompositionSpec mix_spec;
    mix_spec.op = CompositionOperator::convex;
    mix_spec.weights = {w, 1.0 - w};
    const ScoreField mixed = compose_field(mix_spec, {est1, est2});
    std::vector<double> errs(static_cast<std::size_t>(n_pairs), 0.0);
    parallel_for(n_pairs, workers, [&](std::int64_t i) {
      const PairResult pr =
          simulate_pair(oracle_f, mixed, dynamics, n_steps,
                        derive_key(seed, 0x3c, w_slot, static_cast<std::uint64_t>(i)));
      errs[static_cast<std::size_t>(i)] = pr.terminal_error;
    });
    double sum = 0.0;
    for (double v : errs) sum += v;
    e.measured_error = sum / static_cast<double>(n_pairs);
    return e;
  };

  CorollaryReport rep;
  rep.parent_first = entry_for(1.0, 1000001);
  rep.parent_second = entry_for(0.0, 1000002);
  rep.entries.reserve(w_grid.size());
  for (std::size_t k = 0; k < w_grid.size(); ++k) {
    rep.entries.push_back(entry_for(w_grid[k], static_cast<std::uint64_t>(k)));
  }

  const double parent_mse = std::min(rep.parent_first.integrated_mse,
                                     rep.parent_second.integrated_mse);
  const double parent_bound = std::min(rep.parent_first.certified_bound,
                                       rep.parent_second.certified_bound);
  const double parent_measured = std::min(rep.parent_first.measured_error,
                                          rep.parent_second.measured_error);
  for (const CorollaryEntry& e : rep.entries) {
    if (e.integrated_mse < parent_mse) {
      rep.premise_holds_somewhere = true;
      if (!(e.certified_bound < parent_bound)) rep.bounds_follow_premise = false;
      if (!(e.measured_error < parent_measured)) rep.measured_follows_premise = false;
    }
  }
  return rep;
}

}  // namespace gpc
