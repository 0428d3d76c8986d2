#include "gpc/param.hpp"

#include <memory>
#include <stdexcept>
#include <string>

namespace gpc {

namespace {

[[noreturn]] void singular(const char* division, double t) {
  throw std::domain_error(std::string("singular-time conversion: ") + division + " at t=" +
                          std::to_string(t) + "; use the native kind at endpoint times");
}

// To the epsilon hub.
Eigen::VectorXd to_epsilon(Parameterization from, const Eigen::VectorXd& value, double t,
                           const Eigen::VectorXd& x, double alpha, double sigma) {
  switch (from) {
    case Parameterization::epsilon:
      return value;
    case Parameterization::score:
      return -sigma * value;  // s = -eps/sigma inverted without division
    case Parameterization::sample:
      if (sigma == 0.0) singular("(x - alpha x0)/sigma", t);
      return (x - alpha * value) / sigma;
    case Parameterization::velocity:
      return alpha * value + sigma * x;
  }
  throw std::logic_error("unreachable parameterization");
}

// From the epsilon hub.
Eigen::VectorXd from_epsilon(Parameterization to, const Eigen::VectorXd& eps, double t,
                             const Eigen::VectorXd& x, double alpha, double sigma) {
  switch (to) {
    case Parameterization::epsilon:
      return eps;
    case Parameterization::score:
      if (sigma == 0.0) singular("-eps/sigma", t);
      return -eps / sigma;
    case Parameterization::sample:
      if (alpha == 0.0) singular("(x - sigma eps)/alpha", t);
      return (x - sigma * eps) / alpha;
    case Parameterization::velocity:
      if (alpha == 0.0) singular("(eps - sigma x)/alpha", t);
      return (eps - sigma * x) / alpha;
  }
  throw std::logic_error("unreachable parameterization");
}

}  // namespace

Eigen::VectorXd convert_value(Parameterization from, Parameterization to,
                              const Eigen::VectorXd& value, double t, const Eigen::VectorXd& x,
                              const NoiseSchedule& sched) {
  if (value.size() != x.size()) throw std::invalid_argument("convert: dimension mismatch");
  if (from == to) return value;
  const AlphaSigma as = alpha_sigma(sched, t);
  const Eigen::VectorXd eps = to_epsilon(from, value, t, x, as.alpha, as.sigma);
  return from_epsilon(to, eps, t, x, as.alpha, as.sigma);
}

Prediction convert(const Prediction& p, Parameterization target, const NoiseSchedule& sched) {
  Prediction out;
  out.kind = target;
  out.t = p.t;
  out.x = p.x;
  out.value = convert_value(p.kind, target, p.value, p.t, p.x, sched);
  return out;
}

ScoreField as_kind_field(const ScoreField& field, Parameterization target,
                         const NoiseSchedule& sched) {
  if (field.native_kind == target) return field;
  auto sched_ptr = std::make_shared<NoiseSchedule>(sched);
  ScoreField out = field;
  out.native_kind = target;
  const Parameterization from = field.native_kind;
  const ScoreField inner = field;
  out.eval = [inner, from, target, sched_ptr](double t, const Eigen::VectorXd& x,
                                              const EvalContext& ctx) {
    return convert_value(from, target, inner(t, x, ctx), t, x, *sched_ptr);
  };
  return out;
}

ScoreField as_score_field(const ScoreField& field, const NoiseSchedule& sched) {
  return as_kind_field(field, Parameterization::score, sched);
}

}  // namespace gpc
