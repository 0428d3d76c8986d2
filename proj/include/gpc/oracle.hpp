#pragma once

// Analytic ground truth: Gaussian mixtures with closed-form time-t marginal
// scores and log-densities, plus estimator factories realizing the
// bias/noise error model eps_i = s* + b_i + eta_i.
//
// The time-t marginal of a mixture sum_k w_k N(mu_k, Sigma_k) under the
// forward process x_t = alpha x_0 + sigma eps is
//   p_t = sum_k w_k N(alpha mu_k, alpha^2 Sigma_k + sigma^2 I).
// Everything below is computed from that closed form through Cholesky
// factors; no sample-based approximation enters the oracle path.

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "gpc/field.hpp"
#include "gpc/schedule.hpp"

namespace gpc {

struct MixtureComponent {
  double weight = 1.0;
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;  // symmetric positive-definite
};

class GaussianMixture {
 public:
  explicit GaussianMixture(std::vector<MixtureComponent> components);
  static GaussianMixture single(Eigen::VectorXd mean, Eigen::MatrixXd cov);

  Eigen::Index dim() const { return dim_; }
  const std::vector<MixtureComponent>& components() const { return components_; }
  bool is_single() const { return components_.size() == 1; }

  // Mixture with every component mean translated by delta.
  GaussianMixture shifted(const Eigen::VectorXd& delta) const;

  // Draw from the mixture itself (t=0 law); used by bench data-law batches.
  Eigen::VectorXd draw(std::uint64_t key, std::uint64_t counter) const;

 private:
  std::vector<MixtureComponent> components_;
  std::vector<Eigen::MatrixXd> chol_;  // lower factors of the t=0 covariances
  Eigen::Index dim_ = 0;
};

// Closed-form marginal quantities at (sched, t).
Eigen::VectorXd oracle_score(const GaussianMixture& mix, const NoiseSchedule& sched, double t,
                             const Eigen::VectorXd& x);
double oracle_logdensity(const GaussianMixture& mix, const NoiseSchedule& sched, double t,
                         const Eigen::VectorXd& x);
// d/dt log p_t(x) from the analytic derivative of the marginal parameters.
double oracle_dt_logdensity(const GaussianMixture& mix, const NoiseSchedule& sched, double t,
                            const Eigen::VectorXd& x);

// Exact Lipschitz constant (in x) of the score at time t. Single-Gaussian
// mixtures only, where the score is linear with matrix -(alpha^2 Sigma +
// sigma^2 I)^{-1}; returns that matrix's spectral norm.
double oracle_score_lipschitz(const GaussianMixture& mix, const NoiseSchedule& sched, double t);

// Wrap the closed forms as a ScoreField (score-native, density-capable).
ScoreField oracle_field(const GaussianMixture& mix, const NoiseSchedule& sched);

// ----------------------------------------------------------------------------
// Estimator error model
// ----------------------------------------------------------------------------

enum class BiasKind { none, constant, linear, mean_shift };
enum class NoiseKind { none, gaussian };
enum class NoiseFreshness { per_call, frozen_per_trajectory };

struct BiasSpec {
  BiasKind kind = BiasKind::none;
  Eigen::VectorXd vector;  // constant b, or mean-shift delta
  Eigen::MatrixXd matrix;  // linear G (bias term G x)

  static BiasSpec none() { return {}; }
  static BiasSpec constant(Eigen::VectorXd b);
  static BiasSpec linear(Eigen::MatrixXd G);
  static BiasSpec mean_shift(Eigen::VectorXd delta);
};

struct NoiseSpec {
  NoiseKind kind = NoiseKind::none;
  Eigen::MatrixXd cov;  // gaussian covariance

  static NoiseSpec none() { return {}; }
  static NoiseSpec gaussian(Eigen::MatrixXd cov);
};

struct EstimatorSpec {
  GaussianMixture base;
  BiasSpec bias;
  NoiseSpec noise;
  NoiseFreshness freshness = NoiseFreshness::per_call;
};

// Realize the spec as a ScoreField. Mean-shift bias returns the exact oracle
// score of the delta-translated mixture (a wrong policy that is still a true
// score, hence density-capable); other biases and any noise drop the density
// capabilities. `seed` keys the noise realizations.
ScoreField make_estimator(const EstimatorSpec& spec, const NoiseSchedule& sched,
                          std::uint64_t seed);

// Two estimator fields whose Gaussian noises are coupled with correlation
// rho through shared standard-normal lanes: eta1 = L1 z1,
// eta2 = L2 (rho z1 + sqrt(1-rho^2) z2), so E<eta1,eta2> = rho tr(L1^T L2).
std::pair<ScoreField, ScoreField> make_estimator_pair(const EstimatorSpec& spec1,
                                                      const EstimatorSpec& spec2, double rho,
                                                      const NoiseSchedule& sched,
                                                      std::uint64_t seed);

// Lower Cholesky factor of a declared noise covariance (identity-free check
// shared by estimators and the theory module's exact noise moments).
Eigen::MatrixXd noise_chol(const NoiseSpec& noise, Eigen::Index dim);

}  // namespace gpc
