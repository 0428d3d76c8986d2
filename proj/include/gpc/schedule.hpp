#pragma once

// Noise schedules and per-step solver coefficients.
//
// Time convention: continuous t in [0,1], t=0 is data, t=1 is noise. The
// forward process is x_t = alpha(t) x_0 + sigma(t) eps. VP kinds satisfy
// alpha^2 + sigma^2 = 1 with alpha = exp(-1/2 int_0^t beta); flow-linear is
// the straight-line path alpha = 1-t, sigma = t.
//
// Every discrete solver step is an instance of the generic update
//   x_next = a * x + b * f(t, x) + noise * eta,    eta ~ N(0, I),
// where f is the field evaluated in the parameterization named by `input`
// (score for ddpm/ddim/pf-ode-euler, velocity for flow-euler).

#include <stdexcept>
#include <string>
#include <vector>

namespace gpc {

enum class ScheduleKind { vp_linear, vp_scaled_linear, flow_linear };
enum class Solver { ddpm, ddim, pf_ode_euler, flow_euler };
enum class Parameterization { score, epsilon, sample, velocity };

std::string to_string(ScheduleKind kind);
std::string to_string(Solver solver);
std::string to_string(Parameterization kind);
ScheduleKind schedule_kind_from_string(const std::string& name);
Solver solver_from_string(const std::string& name);
Parameterization parameterization_from_string(const std::string& name);

struct AlphaSigma {
  double alpha;
  double sigma;
};

class NoiseSchedule {
 public:
  static NoiseSchedule vp_linear(double beta_min = 0.1, double beta_max = 20.0);
  static NoiseSchedule vp_scaled_linear(double beta_min = 0.1, double beta_max = 20.0);
  static NoiseSchedule flow_linear();
  static NoiseSchedule make(ScheduleKind kind, double beta_min = 0.1, double beta_max = 20.0);

  ScheduleKind kind() const { return kind_; }
  bool is_vp() const { return kind_ != ScheduleKind::flow_linear; }
  double beta_min() const { return beta_min_; }
  double beta_max() const { return beta_max_; }

  // beta(t) and its running integral int_0^t beta; VP kinds only.
  double beta(double t) const;
  double beta_integral(double t) const;

  double alpha(double t) const;
  double sigma(double t) const;
  // d/dt of the forward coefficients. sigma_dot diverges where sigma = 0
  // (t=0 for VP kinds) and throws a domain error there.
  double alpha_dot(double t) const;
  double sigma_dot(double t) const;

  // Reverse-ODE drift written as x' = drift_x_coef(t)*x + drift_s_coef(t)*s.
  // For VP kinds both coefficients equal -beta/2 (probability-flow form);
  // for flow-linear they are -1/(1-t) and -t/(1-t) (singular at t=1).
  double drift_x_coef(double t) const;
  double drift_s_coef(double t) const;

 private:
  NoiseSchedule(ScheduleKind kind, double beta_min, double beta_max);
  ScheduleKind kind_;
  double beta_min_ = 0.0;
  double beta_max_ = 0.0;
};

AlphaSigma alpha_sigma(const NoiseSchedule& sched, double t);

struct StepCoefficients {
  double a = 1.0;      // multiplier on the current state
  double b = 0.0;      // multiplier on the field value
  double noise = 0.0;  // step noise std; 0 for deterministic solvers
  Parameterization input = Parameterization::score;  // kind the step consumes
  double t_from = 0.0;
  double t_to = 0.0;
};

// Coefficients for one reverse step t_from -> t_to (t_to <= t_from). The
// degenerate zero-length step returns the identity. Requests that would
// divide by a vanishing alpha/sigma throw a domain error naming the time.
StepCoefficients step_coefficients(const NoiseSchedule& sched, Solver solver, double t_from,
                                   double t_to);

// Uniform grid t_i = i/n for i = 0..n, ascending. Samplers walk it backwards.
std::vector<double> time_grid(int n_steps);

}  // namespace gpc
