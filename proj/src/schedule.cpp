#include "gpc/schedule.hpp"

#include <cmath>

namespace gpc {

namespace {

void check_time(double t) {
  if (!(t >= 0.0 && t <= 1.0)) {
    throw std::domain_error("time out of range [0,1]: t=" + std::to_string(t));
  }
}

[[noreturn]] void singular(const char* what, double t) {
  throw std::domain_error(std::string("singular time for ") + what + " at t=" +
                          std::to_string(t) + "; use the native parameterization there");
}

}  // namespace

std::string to_string(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::vp_linear: return "vp-linear";
    case ScheduleKind::vp_scaled_linear: return "vp-scaled-linear";
    case ScheduleKind::flow_linear: return "flow-linear";
  }
  throw std::logic_error("unreachable schedule kind");
}

std::string to_string(Solver solver) {
  switch (solver) {
    case Solver::ddpm: return "ddpm";
    case Solver::ddim: return "ddim";
    case Solver::pf_ode_euler: return "pf-ode-euler";
    case Solver::flow_euler: return "flow-euler";
  }
  throw std::logic_error("unreachable solver");
}

std::string to_string(Parameterization kind) {
  switch (kind) {
    case Parameterization::score: return "score";
    case Parameterization::epsilon: return "epsilon";
    case Parameterization::sample: return "sample";
    case Parameterization::velocity: return "velocity";
  }
  throw std::logic_error("unreachable parameterization");
}

ScheduleKind schedule_kind_from_string(const std::string& name) {
  if (name == "vp-linear") return ScheduleKind::vp_linear;
  if (name == "vp-scaled-linear") return ScheduleKind::vp_scaled_linear;
  if (name == "flow-linear") return ScheduleKind::flow_linear;
  throw std::invalid_argument("unknown schedule kind: " + name);
}

Solver solver_from_string(const std::string& name) {
  if (name == "ddpm") return Solver::ddpm;
  if (name == "ddim") return Solver::ddim;
  if (name == "pf-ode-euler") return Solver::pf_ode_euler;
  if (name == "flow-euler") return Solver::flow_euler;
  throw std::invalid_argument("unknown solver: " + name);
}

Parameterization parameterization_from_string(const std::string& name) {
  if (name == "score") return Parameterization::score;
  if (name == "epsilon") return Parameterization::epsilon;
  if (name == "sample") return Parameterization::sample;
  if (name == "velocity") return Parameterization::velocity;
  throw std::invalid_argument("unknown parameterization: " + name);
}

NoiseSchedule::NoiseSchedule(ScheduleKind kind, double beta_min, double beta_max)
    : kind_(kind), beta_min_(beta_min), beta_max_(beta_max) {
  if (kind_ != ScheduleKind::flow_linear) {
    if (!(beta_min > 0.0) || !(beta_max >= beta_min)) {
      throw std::invalid_argument("vp schedule requires 0 < beta_min <= beta_max");
    }
  }
}

NoiseSchedule NoiseSchedule::vp_linear(double beta_min, double beta_max) {
  return NoiseSchedule(ScheduleKind::vp_linear, beta_min, beta_max);
}

NoiseSchedule NoiseSchedule::vp_scaled_linear(double beta_min, double beta_max) {
  return NoiseSchedule(ScheduleKind::vp_scaled_linear, beta_min, beta_max);
}

NoiseSchedule NoiseSchedule::flow_linear() {
  return NoiseSchedule(ScheduleKind::flow_linear, 0.0, 0.0);
}

NoiseSchedule NoiseSchedule::make(ScheduleKind kind, double beta_min, double beta_max) {
  if (kind == ScheduleKind::flow_linear) return flow_linear();
  return NoiseSchedule(kind, beta_min, beta_max);
}

double NoiseSchedule::beta(double t) const {
  check_time(t);
  switch (kind_) {
    case ScheduleKind::vp_linear:
      return beta_min_ + (beta_max_ - beta_min_) * t;
    case ScheduleKind::vp_scaled_linear: {
      // sqrt(beta) linear between the endpoints.
      const double s = std::sqrt(beta_min_) + (std::sqrt(beta_max_) - std::sqrt(beta_min_)) * t;
      return s * s;
    }
    case ScheduleKind::flow_linear:
      throw std::domain_error("beta(t) undefined for flow-linear schedules");
  }
  throw std::logic_error("unreachable");
}

double NoiseSchedule::beta_integral(double t) const {
  check_time(t);
  switch (kind_) {
    case ScheduleKind::vp_linear:
      return beta_min_ * t + 0.5 * (beta_max_ - beta_min_) * t * t;
    case ScheduleKind::vp_scaled_linear: {
      // int (a + b u)^2 du = ((a + b t)^3 - a^3) / (3 b); b -> 0 is constant beta.
      const double a = std::sqrt(beta_min_);
      const double b = std::sqrt(beta_max_) - std::sqrt(beta_min_);
      if (b == 0.0) return beta_min_ * t;
      const double s = a + b * t;
      return (s * s * s - a * a * a) / (3.0 * b);
    }
    case ScheduleKind::flow_linear:
      throw std::domain_error("beta integral undefined for flow-linear schedules");
  }
  throw std::logic_error("unreachable");
}

double NoiseSchedule::alpha(double t) const {
  check_time(t);
  if (kind_ == ScheduleKind::flow_linear) return 1.0 - t;
  return std::exp(-0.5 * beta_integral(t));
}

double NoiseSchedule::sigma(double t) const {
  check_time(t);
  if (kind_ == ScheduleKind::flow_linear) return t;
  // sigma^2 = 1 - alpha^2 = 1 - e^{-B}; expm1 keeps t -> 0 exact.
  return std::sqrt(-std::expm1(-beta_integral(t)));
}

double NoiseSchedule::alpha_dot(double t) const {
  check_time(t);
  if (kind_ == ScheduleKind::flow_linear) return -1.0;
  return -0.5 * beta(t) * alpha(t);
}

double NoiseSchedule::sigma_dot(double t) const {
  check_time(t);
  if (kind_ == ScheduleKind::flow_linear) return 1.0;
  const double s = sigma(t);
  if (s == 0.0) singular("sigma_dot", t);
  // d/dt sqrt(1 - alpha^2) = beta alpha^2 / (2 sigma).
  const double a = alpha(t);
  return 0.5 * beta(t) * a * a / s;
}

double NoiseSchedule::drift_x_coef(double t) const {
  check_time(t);
  if (kind_ == ScheduleKind::flow_linear) {
    const double a = 1.0 - t;
    if (a == 0.0) singular("drift_x_coef", t);
    return -1.0 / a;
  }
  return -0.5 * beta(t);
}

double NoiseSchedule::drift_s_coef(double t) const {
  check_time(t);
  if (kind_ == ScheduleKind::flow_linear) {
    // (alpha'/alpha) sigma^2 - sigma' sigma = -t^2/(1-t) - t = -t/(1-t).
    const double a = 1.0 - t;
    if (a == 0.0) singular("drift_s_coef", t);
    return -t / a;
  }
  // For VP kinds the probability-flow drift collapses to -beta/2 exactly:
  // (alpha'/alpha) sigma^2 - sigma' sigma = -(beta/2)(sigma^2 + alpha^2).
  return -0.5 * beta(t);
}

AlphaSigma alpha_sigma(const NoiseSchedule& sched, double t) {
  return {sched.alpha(t), sched.sigma(t)};
}

std::vector<double> time_grid(int n_steps) {
  if (n_steps < 1) throw std::invalid_argument("time_grid: n_steps must be >= 1");
  std::vector<double> grid(static_cast<std::size_t>(n_steps) + 1);
  for (int i = 0; i <= n_steps; ++i) {
    grid[static_cast<std::size_t>(i)] = static_cast<double>(i) / n_steps;
  }
  grid.back() = 1.0;
  return grid;
}

StepCoefficients step_coefficients(const NoiseSchedule& sched, Solver solver, double t_from,
                                   double t_to) {
  check_time(t_from);
  check_time(t_to);
  if (t_to > t_from) {
    throw std::invalid_argument("step_coefficients: t_to must not exceed t_from (reverse step)");
  }
  StepCoefficients c;
  c.t_from = t_from;
  c.t_to = t_to;
  c.input = solver == Solver::flow_euler ? Parameterization::velocity : Parameterization::score;
  if (t_to == t_from) return c;  // degenerate zero-length step: identity

  switch (solver) {
    case Solver::ddim: {
      // x' = (alpha'/alpha) x + (alpha' sigma^2 / alpha - sigma' sigma) s,
      // the eta = 0 ancestral step rewritten against the score.
      const double a0 = sched.alpha(t_from), s0 = sched.sigma(t_from);
      const double a1 = sched.alpha(t_to), s1 = sched.sigma(t_to);
      if (a0 == 0.0) singular("ddim step", t_from);
      c.a = a1 / a0;
      c.b = a1 * s0 * s0 / a0 - s1 * s0;
      break;
    }
    case Solver::ddpm: {
      // Ancestral posterior step. With abar = alpha^2 and the per-step ratio
      // r = abar(t_from)/abar(t_to):
      //   mean = (alpha_to/alpha_from) (x + (1 - r) s),
      //   var  = sigma_to^2/sigma_from^2 (1 - r)   (0 at the final step).
      const double a0 = sched.alpha(t_from), s0 = sched.sigma(t_from);
      const double a1 = sched.alpha(t_to), s1 = sched.sigma(t_to);
      if (a0 == 0.0) singular("ddpm step", t_from);
      if (s0 == 0.0) singular("ddpm step", t_from);
      const double r = (a0 * a0) / (a1 * a1);
      c.a = a1 / a0;
      c.b = (1.0 - r) * a1 / a0;
      const double var = (s1 * s1) / (s0 * s0) * (1.0 - r);
      c.noise = std::sqrt(std::max(0.0, var));
      break;
    }
    case Solver::pf_ode_euler: {
      // One Euler step of x' = xc x + sc s evaluated at the departure node.
      const double h = t_from - t_to;
      const double xc = sched.drift_x_coef(t_from);
      const double sc = sched.drift_s_coef(t_from);
      c.a = 1.0 - h * xc;
      c.b = -h * sc;
      break;
    }
    case Solver::flow_euler: {
      // x <- x + (t_to - t_from) v, consumed in the velocity kind; the score
      // form of the same step is (1 + h sigma/alpha) x + (h sigma/alpha) s via
      // the v<->s conversion wherever alpha > 0.
      c.a = 1.0;
      c.b = t_to - t_from;
      break;
    }
  }
  return c;
}

}  // namespace gpc
