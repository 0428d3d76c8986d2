#include "gpc/compose.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <stdexcept>

#include <Eigen/Dense>

namespace gpc {

namespace {

constexpr double kWeightSumTol = 1e-12;
constexpr double kAndDenomTol = 1e-10;
constexpr double kTimeDerivStep = 1e-5;  // central difference in t

void check_members(const std::vector<ScoreField>& fields, std::size_t min_count = 2) {
  if (fields.size() < min_count) {
    throw std::invalid_argument("composition needs at least " + std::to_string(min_count) +
                                " member fields");
  }
  const Eigen::Index dim = fields.front().dim;
  for (const auto& f : fields) {
    if (f.dim != dim) throw std::invalid_argument("composition member dimensions disagree");
  }
}

void check_simplex(const std::vector<double>& weights, std::size_t n) {
  if (weights.size() != n) throw std::invalid_argument("weight count != member count");
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("convex weights must be nonnegative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > kWeightSumTol) {
    throw std::invalid_argument("convex weights must sum to 1 within 1e-12");
  }
}

double member_dt_logdensity(const ScoreField& f, double t, const Eigen::VectorXd& x) {
  if (f.has_time_derivative()) return f.dt_logdensity(t, x);
  if (!f.has_logdensity()) {
    throw std::runtime_error("AND composition requires density-capable members");
  }
  // Central difference, clamped into [0, 1].
  const double lo = std::max(0.0, t - kTimeDerivStep);
  const double hi = std::min(1.0, t + kTimeDerivStep);
  return (f.logdensity(hi, x) - f.logdensity(lo, x)) / (hi - lo);
}

}  // namespace

std::string to_string(CompositionOperator op) {
  switch (op) {
    case CompositionOperator::convex: return "convex";
    case CompositionOperator::cfg: return "cfg";
    case CompositionOperator::logical_and: return "and";
    case CompositionOperator::logical_or: return "or";
  }
  throw std::logic_error("unreachable composition operator");
}

CompositionOperator composition_operator_from_string(const std::string& name) {
  if (name == "convex") return CompositionOperator::convex;
  if (name == "cfg") return CompositionOperator::cfg;
  if (name == "and") return CompositionOperator::logical_and;
  if (name == "or") return CompositionOperator::logical_or;
  throw std::invalid_argument("unknown composition operator: " + name);
}

Eigen::VectorXd convex_compose(const std::vector<ScoreField>& fields,
                               const std::vector<double>& weights, double t,
                               const Eigen::VectorXd& x, const EvalContext& ctx) {
  check_members(fields);
  check_simplex(weights, fields.size());
  Eigen::VectorXd acc = weights[0] * fields[0](t, x, ctx);
  for (std::size_t i = 1; i < fields.size(); ++i) {
    acc += weights[i] * fields[i](t, x, ctx);
  }
  return acc;
}

Eigen::VectorXd cfg_compose(const ScoreField& uncond, const std::vector<ScoreField>& cond,
                            const std::vector<double>& weights, double t,
                            const Eigen::VectorXd& x, const EvalContext& ctx) {
  if (cond.empty()) throw std::invalid_argument("cfg needs at least one conditional field");
  if (weights.size() != cond.size()) throw std::invalid_argument("weight count != member count");
  for (const auto& f : cond) {
    if (f.dim != uncond.dim) throw std::invalid_argument("cfg member dimensions disagree");
  }
  const Eigen::VectorXd s_u = uncond(t, x, ctx);
  Eigen::VectorXd acc = s_u;
  for (std::size_t i = 0; i < cond.size(); ++i) {
    acc += weights[i] * (cond[i](t, x, ctx) - s_u);
  }
  return acc;
}

std::vector<double> or_weights(const std::vector<ScoreField>& fields, double temperature,
                               double offset, double t, const Eigen::VectorXd& x) {
  check_members(fields);
  if (!(temperature >= 0.0)) throw std::invalid_argument("or temperature must be >= 0");
  std::vector<double> logits(fields.size());
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (!fields[i].has_logdensity()) {
      throw std::runtime_error("OR composition requires density-capable members");
    }
    // The uniform offset ell cancels in the softmax; kept for transparency.
    logits[i] = temperature * fields[i].logdensity(t, x) + offset;
  }
  const double m = *std::max_element(logits.begin(), logits.end());
  double norm = 0.0;
  for (double& v : logits) {
    v = std::exp(v - m);
    norm += v;
  }
  for (double& v : logits) v /= norm;
  return logits;
}

AndWeights and_weights(const std::vector<ScoreField>& fields, const OdeDynamics& dynamics,
                       double t, const Eigen::VectorXd& x) {
  check_members(fields);
  const std::size_t n = fields.size();
  const double xc = dynamics.xcoef(t);
  const double sc = dynamics.scoef(t);

  std::vector<Eigen::VectorXd> grads(n);
  std::vector<double> dts(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!fields[i].has_logdensity()) {
      throw std::runtime_error("AND composition requires density-capable members");
    }
    grads[i] = fields[i](t, x);  // member score = grad log p_i
    dts[i] = member_dt_logdensity(fields[i], t, x);
  }

  AndWeights out;
  out.weights.assign(n, 1.0 / static_cast<double>(n));

  if (n == 2) {
    // D1(w) - D2(w) = (d1 - d2) + <g1 - g2, u0 + w sc (g1 - g2 ... )>, with
    // u(w) = xc x + sc (w g1 + (1-w) g2) = u0 + w sc (g1 - g2), u0 = xc x + sc g2.
    const Eigen::VectorXd dg = grads[0] - grads[1];
    const Eigen::VectorXd u0 = xc * x + sc * grads[1];
    const double denom = sc * dg.squaredNorm();
    const double num = (dts[0] - dts[1]) + dg.dot(u0);
    if (std::abs(denom) < kAndDenomTol) {
      out.degenerate = true;
      return out;
    }
    const double w = std::clamp(-num / denom, 0.0, 1.0);
    out.weights = {w, 1.0 - w};
    return out;
  }

  // n > 2: all-pairs equalities, simplex constraint eliminated through
  // w_n = 1 - sum_{k<n} w_k, least squares, then simplex projection.
  const std::size_t rows = n * (n - 1) / 2;
  Eigen::MatrixXd m(rows, n);
  Eigen::VectorXd r(rows);
  std::size_t row = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j, ++row) {
      const Eigen::VectorXd dg = grads[i] - grads[j];
      for (std::size_t k = 0; k < n; ++k) m(row, k) = sc * dg.dot(grads[k]);
      r(row) = -(dts[i] - dts[j]) - dg.dot(xc * x);
    }
  }
  Eigen::MatrixXd reduced(rows, n - 1);
  Eigen::VectorXd rhs = r - m.col(static_cast<Eigen::Index>(n - 1));
  for (std::size_t k = 0; k + 1 < n; ++k) {
    reduced.col(static_cast<Eigen::Index>(k)) =
        m.col(static_cast<Eigen::Index>(k)) - m.col(static_cast<Eigen::Index>(n - 1));
  }
  const auto svd = reduced.jacobiSvd(Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.singularValues().size() == 0 ||
      svd.singularValues()(0) < kAndDenomTol ||
      svd.singularValues().tail(1)(0) < kAndDenomTol * svd.singularValues()(0)) {
    out.degenerate = true;
    return out;
  }
  const Eigen::VectorXd head = svd.solve(rhs);
  std::vector<double> w(n);
  double tail = 1.0;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    w[k] = head(static_cast<Eigen::Index>(k));
    tail -= w[k];
  }
  w[n - 1] = tail;
  out.weights = project_to_simplex(std::move(w));
  return out;
}

std::vector<double> project_to_simplex(std::vector<double> v) {
  // Euclidean projection onto {w >= 0, sum w = 1} (sort-based).
  std::vector<double> u = v;
  std::sort(u.begin(), u.end(), std::greater<>());
  double css = 0.0;
  double theta = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    css += u[i];
    const double cand = (css - 1.0) / static_cast<double>(i + 1);
    if (u[i] - cand > 0.0) theta = cand;
  }
  for (double& w : v) w = std::max(0.0, w - theta);
  // Normalize away roundoff drift so downstream simplex checks hold exactly.
  const double sum = std::accumulate(v.begin(), v.end(), 0.0);
  if (sum > 0.0) {
    for (double& w : v) w /= sum;
  }
  return v;
}

ScoreField compose_field(const CompositionSpec& spec, std::vector<ScoreField> fields,
                         std::optional<ScoreField> uncond, std::optional<OdeDynamics> dynamics) {
  check_members(fields);
  ScoreField out;
  out.dim = fields.front().dim;
  out.provenance = Provenance::composed;
  out.native_kind = Parameterization::score;
  auto members = std::make_shared<std::vector<ScoreField>>(std::move(fields));

  switch (spec.op) {
    case CompositionOperator::convex: {
      check_simplex(spec.weights, members->size());
      const std::vector<double> weights = spec.weights;
      out.eval = [members, weights](double t, const Eigen::VectorXd& x, const EvalContext& ctx) {
        return convex_compose(*members, weights, t, x, ctx);
      };
      break;
    }
    case CompositionOperator::cfg: {
      if (!uncond) throw std::invalid_argument("cfg composition requires an unconditional field");
      const ScoreField anchor = *uncond;
      const std::vector<double> weights = spec.weights;
      out.eval = [members, anchor, weights](double t, const Eigen::VectorXd& x,
                                            const EvalContext& ctx) {
        return cfg_compose(anchor, *members, weights, t, x, ctx);
      };
      break;
    }
    case CompositionOperator::logical_or: {
      const double temperature = spec.temperature;
      const double offset = spec.offset;
      out.eval = [members, temperature, offset](double t, const Eigen::VectorXd& x,
                                                const EvalContext& ctx) {
        const std::vector<double> w = or_weights(*members, temperature, offset, t, x);
        return convex_compose(*members, w, t, x, ctx);
      };
      break;
    }
    case CompositionOperator::logical_and: {
      if (!dynamics) throw std::invalid_argument("and composition requires dynamics");
      const OdeDynamics dyn = *dynamics;
      out.eval = [members, dyn](double t, const Eigen::VectorXd& x, const EvalContext& ctx) {
        const AndWeights w = and_weights(*members, dyn, t, x);
        return convex_compose(*members, w.weights, t, x, ctx);
      };
      break;
    }
  }
  return out;
}

}  // namespace gpc
