#pragma once

// Reverse-time generation loop and paired-trajectory simulation.
//
// sample(): walks the uniform grid t = 1 -> 0 applying the generic update
// x' = a x + b f + noise*eta with per-solver coefficients; the field is
// evaluated in the solver's input parameterization (converted per node when
// the native kind differs; singular-time conversions surface as errors).
//
// simulate_pair(): integrates the same deterministic reverse ODE for an
// oracle field and an estimator field from a shared initial condition and
// reports the terminal error — the measured side of the stability bound.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gpc/field.hpp"
#include "gpc/schedule.hpp"

namespace gpc {

struct Trajectory {
  std::vector<double> grid;             // descending 1 -> 0
  std::vector<Eigen::VectorXd> states;  // aligned with grid
  Solver solver = Solver::ddim;
  std::uint64_t seed = 0;
};

// Deterministic affine reverse dynamics x' = xcoef(t) x + scoef(t) s(t, x).
// `convention` records the reverse-ODE constant convention, and l_s the
// Lipschitz-in-s coefficient used by the theory module:
//   "pf-ode":        scoef = -1/2 g^2 = -beta/2  (probability-flow form)
//   "reverse-drift": scoef = -g^2    = -beta     (full-coefficient form)
struct OdeDynamics {
  std::function<double(double)> xcoef;
  std::function<double(double)> scoef;
  std::function<double(double)> l_x;  // Lipschitz of f(t,x) in x: |xcoef|
  std::function<double(double)> l_s;  // |scoef|
  std::string convention;
};

// Probability-flow reverse ODE of a schedule (the default theory substrate).
OdeDynamics reverse_ode(const NoiseSchedule& sched);
// Full-g^2 drift variant of the same family.
OdeDynamics reverse_drift_ode(const NoiseSchedule& sched);

// Generate n_samples reverse trajectories from x_N ~ N(0, I).
std::vector<Trajectory> sample(const ScoreField& field, const NoiseSchedule& sched, Solver solver,
                               int n_steps, int n_samples, std::uint64_t seed);

// Endpoint-only batch variant (row i = trajectory i's terminal state); used
// for moment checks and bench episodes where full paths would be waste.
Eigen::MatrixXd sample_endpoints(const ScoreField& field, const NoiseSchedule& sched,
                                 Solver solver, int n_steps, int n_samples, std::uint64_t seed,
                                 int workers = 1);

struct PairResult {
  Trajectory oracle;
  Trajectory estimate;
  double terminal_error = 0.0;  // ||x_est(T) - x_oracle(T)||
};

// Euler-integrate both fields under `dynamics` on a uniform n_steps grid from
// a shared N(0, I) initial condition keyed by `seed`.
PairResult simulate_pair(const ScoreField& oracle, const ScoreField& estimate,
                         const OdeDynamics& dynamics, int n_steps, std::uint64_t seed);

// Ancestral (ddpm) paired simulation sharing one noise stream between the
// two chains — common random numbers for the stochastic stability check.
PairResult simulate_pair_sde(const ScoreField& oracle, const ScoreField& estimate,
                             const NoiseSchedule& sched, int n_steps, std::uint64_t seed);

// Persistence: one JSON record per line {grid, states, solver, seed}.
void write_trajectories_jsonl(const std::string& path, const std::vector<Trajectory>& trajs);
// Endpoint CSV: header x0,x1,...; one row per trajectory.
void write_endpoints_csv(const std::string& path, const Eigen::MatrixXd& endpoints);

}  // namespace gpc
