#include "gpc/oracle.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "gpc/rng.hpp"

namespace gpc {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;  // log(2*pi)

// Marginal parameters of one component at time t and their Cholesky factor.
struct MarginalComponent {
  Eigen::VectorXd mean;        // alpha * mu
  Eigen::MatrixXd cov;         // alpha^2 Sigma + sigma^2 I
  Eigen::LLT<Eigen::MatrixXd> llt;
  double log_det = 0.0;
};

MarginalComponent marginal_component(const MixtureComponent& comp, double a, double s) {
  MarginalComponent m;
  m.mean = a * comp.mean;
  m.cov = (a * a) * comp.cov;
  m.cov.diagonal().array() += s * s;
  m.llt.compute(m.cov);
  if (m.llt.info() != Eigen::Success) {
    throw std::runtime_error("marginal covariance not positive definite");
  }
  m.log_det = 2.0 * m.llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return m;
}

// log N(x; mean, cov) through the Cholesky factor.
double component_logpdf(const MarginalComponent& m, const Eigen::VectorXd& x,
                        Eigen::VectorXd* whitened = nullptr) {
  const Eigen::VectorXd diff = x - m.mean;
  Eigen::VectorXd w = m.llt.matrixL().solve(diff);
  const double quad = w.squaredNorm();
  if (whitened) *whitened = std::move(w);
  return -0.5 * (static_cast<double>(x.size()) * kLog2Pi + m.log_det + quad);
}

// alpha*alpha_dot and sigma*sigma_dot, in closed form so the products stay
// finite at the endpoints where sigma_dot itself diverges.
void coef_products(const NoiseSchedule& sched, double t, double* aa_dot, double* ss_dot) {
  if (sched.kind() == ScheduleKind::flow_linear) {
    *aa_dot = -(1.0 - t);
    *ss_dot = t;
    return;
  }
  const double beta = sched.beta(t);
  const double a = sched.alpha(t);
  *aa_dot = -0.5 * beta * a * a;
  *ss_dot = 0.5 * beta * a * a;
}

}  // namespace

GaussianMixture::GaussianMixture(std::vector<MixtureComponent> components)
    : components_(std::move(components)) {
  if (components_.empty()) throw std::invalid_argument("mixture needs at least one component");
  dim_ = components_.front().mean.size();
  if (dim_ <= 0) throw std::invalid_argument("mixture dimension must be positive");
  double weight_sum = 0.0;
  chol_.reserve(components_.size());
  for (const auto& c : components_) {
    if (!(c.weight > 0.0)) throw std::invalid_argument("component weights must be positive");
    if (c.mean.size() != dim_ || c.cov.rows() != dim_ || c.cov.cols() != dim_) {
      throw std::invalid_argument("component dimensions disagree");
    }
    if (!c.cov.isApprox(c.cov.transpose(), 1e-12)) {
      throw std::invalid_argument("component covariance not symmetric");
    }
    Eigen::LLT<Eigen::MatrixXd> llt(c.cov);
    if (llt.info() != Eigen::Success) {
      throw std::invalid_argument("component covariance not positive definite");
    }
    chol_.push_back(llt.matrixL());
    weight_sum += c.weight;
  }
  if (std::abs(weight_sum - 1.0) > 1e-12) {
    throw std::invalid_argument("component weights must sum to 1 (got " +
                                std::to_string(weight_sum) + ")");
  }
}

GaussianMixture GaussianMixture::single(Eigen::VectorXd mean, Eigen::MatrixXd cov) {
  std::vector<MixtureComponent> comps(1);
  comps[0].weight = 1.0;
  comps[0].mean = std::move(mean);
  comps[0].cov = std::move(cov);
  return GaussianMixture(std::move(comps));
}

GaussianMixture GaussianMixture::shifted(const Eigen::VectorXd& delta) const {
  if (delta.size() != dim_) throw std::invalid_argument("shift dimension mismatch");
  std::vector<MixtureComponent> comps = components_;
  for (auto& c : comps) c.mean += delta;
  return GaussianMixture(std::move(comps));
}

Eigen::VectorXd GaussianMixture::draw(std::uint64_t key, std::uint64_t counter) const {
  std::size_t pick = 0;
  if (components_.size() > 1) {
    const double u = unit_double(mix64(derive_key(key, 1) ^ mix64(counter)));
    double acc = 0.0;
    for (std::size_t k = 0; k < components_.size(); ++k) {
      acc += components_[k].weight;
      if (u <= acc) {
        pick = k;
        break;
      }
      pick = k;  // rounding tail falls into the last component
    }
  }
  const Eigen::VectorXd z = normal_vector_at(derive_key(key, 2), counter, dim_);
  return components_[pick].mean + chol_[pick] * z;
}

double oracle_logdensity(const GaussianMixture& mix, const NoiseSchedule& sched, double t,
                         const Eigen::VectorXd& x) {
  if (x.size() != mix.dim()) throw std::invalid_argument("oracle_logdensity: dimension mismatch");
  const AlphaSigma as = alpha_sigma(sched, t);
  const auto& comps = mix.components();
  double max_term = -std::numeric_limits<double>::infinity();
  std::vector<double> terms(comps.size());
  for (std::size_t k = 0; k < comps.size(); ++k) {
    const MarginalComponent m = marginal_component(comps[k], as.alpha, as.sigma);
    terms[k] = std::log(comps[k].weight) + component_logpdf(m, x);
    max_term = std::max(max_term, terms[k]);
  }
  double acc = 0.0;
  for (double v : terms) acc += std::exp(v - max_term);
  return max_term + std::log(acc);
}

Eigen::VectorXd oracle_score(const GaussianMixture& mix, const NoiseSchedule& sched, double t,
                             const Eigen::VectorXd& x) {
  if (x.size() != mix.dim()) throw std::invalid_argument("oracle_score: dimension mismatch");
  const AlphaSigma as = alpha_sigma(sched, t);
  const auto& comps = mix.components();
  const std::size_t n = comps.size();

  // Responsibilities via log-sum-exp, gradients via triangular solves.
  std::vector<double> logw(n);
  std::vector<Eigen::VectorXd> grads(n);  // -C^{-1}(x - m) per component
  double max_term = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k) {
    const MarginalComponent m = marginal_component(comps[k], as.alpha, as.sigma);
    Eigen::VectorXd whitened;
    logw[k] = std::log(comps[k].weight) + component_logpdf(m, x, &whitened);
    // C^{-1}(x - m) = L^{-T} (L^{-1} (x - m)).
    grads[k] = -m.llt.matrixL().transpose().solve(whitened);
    max_term = std::max(max_term, logw[k]);
  }
  double norm = 0.0;
  for (double v : logw) norm += std::exp(v - max_term);
  Eigen::VectorXd score = Eigen::VectorXd::Zero(mix.dim());
  for (std::size_t k = 0; k < n; ++k) {
    score += (std::exp(logw[k] - max_term) / norm) * grads[k];
  }
  return score;
}

double oracle_dt_logdensity(const GaussianMixture& mix, const NoiseSchedule& sched, double t,
                            const Eigen::VectorXd& x) {
  if (x.size() != mix.dim()) {
    throw std::invalid_argument("oracle_dt_logdensity: dimension mismatch");
  }
  const AlphaSigma as = alpha_sigma(sched, t);
  double aa_dot = 0.0, ss_dot = 0.0;
  coef_products(sched, t, &aa_dot, &ss_dot);
  const double alpha_dot = sched.alpha_dot(t);

  const auto& comps = mix.components();
  const std::size_t n = comps.size();
  std::vector<double> logw(n), dk(n);
  double max_term = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k) {
    const MarginalComponent m = marginal_component(comps[k], as.alpha, as.sigma);
    Eigen::VectorXd whitened;
    logw[k] = std::log(comps[k].weight) + component_logpdf(m, x, &whitened);
    max_term = std::max(max_term, logw[k]);

    // d/dt of the component parameters: m_dot = alpha_dot mu,
    // C_dot = 2 alpha alpha_dot Sigma + 2 sigma sigma_dot I.
    Eigen::MatrixXd cov_dot = (2.0 * aa_dot) * comps[k].cov;
    cov_dot.diagonal().array() += 2.0 * ss_dot;
    const Eigen::VectorXd mean_dot = alpha_dot * comps[k].mean;

    // d/dt log N = -1/2 tr(C^{-1} C_dot) + (x-m)^T C^{-1} m_dot
    //              + 1/2 (x-m)^T C^{-1} C_dot C^{-1} (x-m).
    const Eigen::VectorXd cinv_diff = m.llt.matrixL().transpose().solve(whitened);
    const Eigen::MatrixXd cinv_cdot = m.llt.solve(cov_dot);
    dk[k] = -0.5 * cinv_cdot.trace() + cinv_diff.dot(mean_dot) +
            0.5 * cinv_diff.dot(cov_dot * cinv_diff);
  }
  double norm = 0.0, acc = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double r = std::exp(logw[k] - max_term);
    norm += r;
    acc += r * dk[k];
  }
  return acc / norm;
}

double oracle_score_lipschitz(const GaussianMixture& mix, const NoiseSchedule& sched, double t) {
  if (!mix.is_single()) {
    throw std::invalid_argument(
        "oracle_score_lipschitz: exact constant available for single-Gaussian mixtures only");
  }
  const AlphaSigma as = alpha_sigma(sched, t);
  const MixtureComponent& comp = mix.components().front();
  Eigen::MatrixXd cov = (as.alpha * as.alpha) * comp.cov;
  cov.diagonal().array() += as.sigma * as.sigma;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov, Eigen::EigenvaluesOnly);
  const double lambda_min = es.eigenvalues().minCoeff();
  if (!(lambda_min > 0.0)) throw std::runtime_error("degenerate marginal covariance");
  // Score is linear with matrix -C^{-1}; its spectral norm is 1/lambda_min(C).
  return 1.0 / lambda_min;
}

ScoreField oracle_field(const GaussianMixture& mix, const NoiseSchedule& sched) {
  auto mix_ptr = std::make_shared<GaussianMixture>(mix);
  auto sched_ptr = std::make_shared<NoiseSchedule>(sched);
  ScoreField f;
  f.dim = mix.dim();
  f.provenance = Provenance::oracle;
  f.native_kind = Parameterization::score;
  f.eval = [mix_ptr, sched_ptr](double t, const Eigen::VectorXd& x, const EvalContext&) {
    return oracle_score(*mix_ptr, *sched_ptr, t, x);
  };
  f.logdensity = [mix_ptr, sched_ptr](double t, const Eigen::VectorXd& x) {
    return oracle_logdensity(*mix_ptr, *sched_ptr, t, x);
  };
  f.dt_logdensity = [mix_ptr, sched_ptr](double t, const Eigen::VectorXd& x) {
    return oracle_dt_logdensity(*mix_ptr, *sched_ptr, t, x);
  };
  return f;
}

BiasSpec BiasSpec::constant(Eigen::VectorXd b) {
  BiasSpec s;
  s.kind = BiasKind::constant;
  s.vector = std::move(b);
  return s;
}

BiasSpec BiasSpec::linear(Eigen::MatrixXd G) {
  BiasSpec s;
  s.kind = BiasKind::linear;
  s.matrix = std::move(G);
  return s;
}

BiasSpec BiasSpec::mean_shift(Eigen::VectorXd delta) {
  BiasSpec s;
  s.kind = BiasKind::mean_shift;
  s.vector = std::move(delta);
  return s;
}

NoiseSpec NoiseSpec::gaussian(Eigen::MatrixXd cov) {
  NoiseSpec s;
  s.kind = NoiseKind::gaussian;
  s.cov = std::move(cov);
  return s;
}

Eigen::MatrixXd noise_chol(const NoiseSpec& noise, Eigen::Index dim) {
  if (noise.kind == NoiseKind::none) return Eigen::MatrixXd::Zero(dim, dim);
  if (noise.cov.rows() != dim || noise.cov.cols() != dim) {
    throw std::invalid_argument("noise covariance dimension mismatch");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(noise.cov);
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument("noise covariance not positive definite");
  }
  return llt.matrixL();
}

namespace {

// Additive bias term at (t, x). Mean-shift is handled elsewhere (it is an
// exact oracle of the shifted law, not an additive perturbation).
Eigen::VectorXd bias_term(const BiasSpec& bias, const Eigen::VectorXd& x) {
  switch (bias.kind) {
    case BiasKind::none:
      return Eigen::VectorXd::Zero(x.size());
    case BiasKind::constant:
      return bias.vector;
    case BiasKind::linear:
      return bias.matrix * x;
    case BiasKind::mean_shift:
      throw std::logic_error("mean-shift is not an additive bias");
  }
  throw std::logic_error("unreachable bias kind");
}

void check_bias_dims(const BiasSpec& bias, Eigen::Index dim) {
  if (bias.kind == BiasKind::constant || bias.kind == BiasKind::mean_shift) {
    if (bias.vector.size() != dim) throw std::invalid_argument("bias vector dimension mismatch");
  }
  if (bias.kind == BiasKind::linear) {
    if (bias.matrix.rows() != dim || bias.matrix.cols() != dim) {
      throw std::invalid_argument("bias matrix dimension mismatch");
    }
  }
}

}  // namespace

ScoreField make_estimator(const EstimatorSpec& spec, const NoiseSchedule& sched,
                          std::uint64_t seed) {
  const Eigen::Index dim = spec.base.dim();
  check_bias_dims(spec.bias, dim);

  if (spec.bias.kind == BiasKind::mean_shift && spec.noise.kind == NoiseKind::none) {
    // Exact oracle of the delta-translated law: density-capable on purpose.
    ScoreField f = oracle_field(spec.base.shifted(spec.bias.vector), sched);
    f.provenance = Provenance::perturbed;
    return f;
  }

  ScoreField base_field = spec.bias.kind == BiasKind::mean_shift
                              ? oracle_field(spec.base.shifted(spec.bias.vector), sched)
                              : oracle_field(spec.base, sched);
  if (spec.bias.kind == BiasKind::none && spec.noise.kind == NoiseKind::none) {
    // Identical to the oracle, capabilities included.
    return base_field;
  }

  ScoreField f;
  f.dim = dim;
  f.provenance = Provenance::perturbed;
  f.native_kind = Parameterization::score;

  const BiasSpec bias = spec.bias;
  const NoiseSpec noise = spec.noise;
  const NoiseFreshness freshness = spec.freshness;
  const Eigen::MatrixXd chol = noise_chol(noise, dim);
  const std::uint64_t field_seed = derive_key(seed, 0x6f5e);

  f.eval = [base_field, bias, noise, freshness, chol, field_seed](
               double t, const Eigen::VectorXd& x, const EvalContext& ctx) {
    Eigen::VectorXd v = base_field(t, x, ctx);
    if (bias.kind == BiasKind::constant || bias.kind == BiasKind::linear) {
      v += bias_term(bias, x);
    }
    if (noise.kind == NoiseKind::gaussian) {
      if (freshness == NoiseFreshness::per_call) {
        if (ctx.stream == nullptr) {
          throw std::runtime_error(
              "per-call noise requires an explicit RNG stream in the evaluation context");
        }
        v += chol * ctx.stream->normal_vector(x.size());
      } else {
        // Frozen realization addressed by (seed, trajectory, step).
        const std::uint64_t key = derive_key(field_seed, ctx.trajectory_id);
        v += chol * normal_vector_at(key, static_cast<std::uint64_t>(ctx.step_index), x.size());
      }
    }
    return v;
  };
  return f;
}

std::pair<ScoreField, ScoreField> make_estimator_pair(const EstimatorSpec& spec1,
                                                      const EstimatorSpec& spec2, double rho,
                                                      const NoiseSchedule& sched,
                                                      std::uint64_t seed) {
  if (spec1.base.dim() != spec2.base.dim()) {
    throw std::invalid_argument("estimator pair dimension mismatch");
  }
  if (!(rho >= -1.0 && rho <= 1.0)) {
    throw std::invalid_argument("noise correlation must lie in [-1, 1]");
  }
  if (rho == 0.0 || spec1.noise.kind == NoiseKind::none || spec2.noise.kind == NoiseKind::none) {
    return {make_estimator(spec1, sched, derive_key(seed, 1)),
            make_estimator(spec2, sched, derive_key(seed, 2))};
  }
  // Correlated noises share standard-normal lanes; realizations are frozen by
  // (seed, trajectory, step) so paired trajectories see common random numbers.
  const Eigen::Index dim = spec1.base.dim();
  const Eigen::MatrixXd l1 = noise_chol(spec1.noise, dim);
  const Eigen::MatrixXd l2 = noise_chol(spec2.noise, dim);
  const std::uint64_t key_a = derive_key(seed, 0xa);
  const std::uint64_t key_b = derive_key(seed, 0xb);
  const double comp = std::sqrt(std::max(0.0, 1.0 - rho * rho));

  EstimatorSpec bias_only1 = spec1;
  bias_only1.noise = NoiseSpec::none();
  EstimatorSpec bias_only2 = spec2;
  bias_only2.noise = NoiseSpec::none();
  ScoreField f1 = make_estimator(bias_only1, sched, derive_key(seed, 1));
  ScoreField f2 = make_estimator(bias_only2, sched, derive_key(seed, 2));
  f1.provenance = Provenance::perturbed;
  f2.provenance = Provenance::perturbed;
  f1.logdensity = nullptr;
  f1.dt_logdensity = nullptr;
  f2.logdensity = nullptr;
  f2.dt_logdensity = nullptr;

  auto shared_z = [dim](std::uint64_t key, const EvalContext& ctx) {
    const std::uint64_t k = derive_key(key, ctx.trajectory_id);
    return normal_vector_at(k, static_cast<std::uint64_t>(ctx.step_index), dim);
  };
  const ScoreField base1 = f1;
  const ScoreField base2 = f2;
  f1.eval = [base1, l1, key_a, shared_z](double t, const Eigen::VectorXd& x,
                                         const EvalContext& ctx) {
    return Eigen::VectorXd(base1(t, x, ctx) + l1 * shared_z(key_a, ctx));
  };
  f2.eval = [base2, l2, key_a, key_b, rho, comp, shared_z](double t, const Eigen::VectorXd& x,
                                                           const EvalContext& ctx) {
    const Eigen::VectorXd z = rho * shared_z(key_a, ctx) + comp * shared_z(key_b, ctx);
    return Eigen::VectorXd(base2(t, x, ctx) + l2 * z);
  };
  return {std::move(f1), std::move(f2)};
}

}  // namespace gpc
