#include "gpc/sampler.hpp"

#include <cmath>
#include <memory>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "gpc/param.hpp"
#include "gpc/rng.hpp"
#include "gpc/util.hpp"

namespace gpc {

namespace {

// Evaluate the field in the parameterization a step consumes, converting per
// node when the native kind differs (singular times surface as domain errors).
Eigen::VectorXd field_in_kind(const ScoreField& field, Parameterization kind, double t,
                              const Eigen::VectorXd& x, const EvalContext& ctx,
                              const NoiseSchedule& sched) {
  const Eigen::VectorXd native = field(t, x, ctx);
  if (field.native_kind == kind) return native;
  return convert_value(field.native_kind, kind, native, t, x, sched);
}

Eigen::VectorXd run_one_trajectory(const ScoreField& field, const NoiseSchedule& sched,
                                   Solver solver, const std::vector<double>& grid,
                                   std::uint64_t seed, std::uint64_t traj_id,
                                   RngStream* stream, std::vector<Eigen::VectorXd>* states) {
  const int n_steps = static_cast<int>(grid.size()) - 1;
  const std::uint64_t init_key = derive_key(seed, 0x1417, traj_id);
  const std::uint64_t noise_key = derive_key(seed, 0xe7a, traj_id);
  Eigen::VectorXd x = normal_vector_at(init_key, 0, field.dim);
  if (states) {
    states->clear();
    states->reserve(static_cast<std::size_t>(n_steps) + 1);
    states->push_back(x);
  }
  EvalContext ctx;
  ctx.trajectory_id = traj_id;
  ctx.stream = stream;
  for (int k = n_steps; k >= 1; --k) {
    const double t_from = grid[static_cast<std::size_t>(k)];
    const double t_to = grid[static_cast<std::size_t>(k - 1)];
    const StepCoefficients c = step_coefficients(sched, solver, t_from, t_to);
    ctx.step_index = k;
    const Eigen::VectorXd f = field_in_kind(field, c.input, t_from, x, ctx, sched);
    x = c.a * x + c.b * f;
    if (c.noise > 0.0) {
      x += c.noise * normal_vector_at(noise_key, static_cast<std::uint64_t>(k), field.dim);
    }
    if (states) states->push_back(x);
  }
  return x;
}

}  // namespace

OdeDynamics reverse_ode(const NoiseSchedule& sched) {
  auto s = std::make_shared<NoiseSchedule>(sched);
  OdeDynamics d;
  d.xcoef = [s](double t) { return s->drift_x_coef(t); };
  d.scoef = [s](double t) { return s->drift_s_coef(t); };
  d.l_x = [s](double t) { return std::abs(s->drift_x_coef(t)); };
  d.l_s = [s](double t) { return std::abs(s->drift_s_coef(t)); };
  d.convention = "pf-ode";
  return d;
}

OdeDynamics reverse_drift_ode(const NoiseSchedule& sched) {
  if (!sched.is_vp()) {
    throw std::invalid_argument("reverse_drift_ode requires a vp schedule (g^2 = beta)");
  }
  auto s = std::make_shared<NoiseSchedule>(sched);
  OdeDynamics d;
  d.xcoef = [s](double t) { return -0.5 * s->beta(t); };
  d.scoef = [s](double t) { return -s->beta(t); };  // full g^2 coefficient
  d.l_x = [s](double t) { return 0.5 * s->beta(t); };
  d.l_s = [s](double t) { return s->beta(t); };
  d.convention = "reverse-drift";
  return d;
}

std::vector<Trajectory> sample(const ScoreField& field, const NoiseSchedule& sched, Solver solver,
                               int n_steps, int n_samples, std::uint64_t seed) {
  if (n_steps < 1) throw std::invalid_argument("sample: n_steps must be >= 1");
  if (n_samples < 0) throw std::invalid_argument("sample: n_samples must be >= 0");
  const std::vector<double> ascending = time_grid(n_steps);
  std::vector<double> descending(ascending.rbegin(), ascending.rend());

  std::vector<Trajectory> out(static_cast<std::size_t>(n_samples));
  for (int i = 0; i < n_samples; ++i) {
    Trajectory& traj = out[static_cast<std::size_t>(i)];
    traj.grid = descending;
    traj.solver = solver;
    traj.seed = seed;
    RngStream stream = RngStream::from(derive_key(seed, 0x57), static_cast<std::uint64_t>(i));
    run_one_trajectory(field, sched, solver, ascending, seed, static_cast<std::uint64_t>(i),
                       &stream, &traj.states);
  }
  return out;
}

Eigen::MatrixXd sample_endpoints(const ScoreField& field, const NoiseSchedule& sched,
                                 Solver solver, int n_steps, int n_samples, std::uint64_t seed,
                                 int workers) {
  if (n_steps < 1) throw std::invalid_argument("sample_endpoints: n_steps must be >= 1");
  if (n_samples < 0) throw std::invalid_argument("sample_endpoints: n_samples must be >= 0");
  const std::vector<double> ascending = time_grid(n_steps);
  Eigen::MatrixXd endpoints(n_samples, field.dim);
  parallel_for(n_samples, workers, [&](std::int64_t i) {
    RngStream stream = RngStream::from(derive_key(seed, 0x57), static_cast<std::uint64_t>(i));
    endpoints.row(i) = run_one_trajectory(field, sched, solver, ascending, seed,
                                          static_cast<std::uint64_t>(i), &stream, nullptr)
                           .transpose();
  });
  return endpoints;
}

PairResult simulate_pair(const ScoreField& oracle, const ScoreField& estimate,
                         const OdeDynamics& dynamics, int n_steps, std::uint64_t seed) {
  if (oracle.dim != estimate.dim) throw std::invalid_argument("simulate_pair: dimension mismatch");
  if (n_steps < 1) throw std::invalid_argument("simulate_pair: n_steps must be >= 1");
  const std::vector<double> grid = time_grid(n_steps);

  PairResult res;
  res.oracle.solver = res.estimate.solver = Solver::pf_ode_euler;
  res.oracle.seed = res.estimate.seed = seed;
  res.oracle.grid.assign(grid.rbegin(), grid.rend());
  res.estimate.grid = res.oracle.grid;

  const Eigen::VectorXd x_init = normal_vector_at(derive_key(seed, 0x1417, 0), 0, oracle.dim);
  Eigen::VectorXd xs = x_init, xe = x_init;
  res.oracle.states.push_back(xs);
  res.estimate.states.push_back(xe);
  EvalContext ctx;
  ctx.trajectory_id = seed;
  for (int k = n_steps; k >= 1; --k) {
    const double t = grid[static_cast<std::size_t>(k)];
    const double h = grid[static_cast<std::size_t>(k - 1)] - t;  // negative going down
    const double xc = dynamics.xcoef(t);
    const double sc = dynamics.scoef(t);
    ctx.step_index = k;
    xs += h * (xc * xs + sc * oracle(t, xs, ctx));
    xe += h * (xc * xe + sc * estimate(t, xe, ctx));
    res.oracle.states.push_back(xs);
    res.estimate.states.push_back(xe);
  }
  res.terminal_error = (xe - xs).norm();
  return res;
}

PairResult simulate_pair_sde(const ScoreField& oracle, const ScoreField& estimate,
                             const NoiseSchedule& sched, int n_steps, std::uint64_t seed) {
  if (oracle.dim != estimate.dim) {
    throw std::invalid_argument("simulate_pair_sde: dimension mismatch");
  }
  if (n_steps < 1) throw std::invalid_argument("simulate_pair_sde: n_steps must be >= 1");
  const std::vector<double> grid = time_grid(n_steps);

  PairResult res;
  res.oracle.solver = res.estimate.solver = Solver::ddpm;
  res.oracle.seed = res.estimate.seed = seed;
  res.oracle.grid.assign(grid.rbegin(), grid.rend());
  res.estimate.grid = res.oracle.grid;

  const Eigen::VectorXd x_init = normal_vector_at(derive_key(seed, 0x1417, 0), 0, oracle.dim);
  const std::uint64_t noise_key = derive_key(seed, 0xe7a, 0);
  Eigen::VectorXd xs = x_init, xe = x_init;
  res.oracle.states.push_back(xs);
  res.estimate.states.push_back(xe);
  EvalContext ctx;
  ctx.trajectory_id = seed;
  for (int k = n_steps; k >= 1; --k) {
    const double t_from = grid[static_cast<std::size_t>(k)];
    const double t_to = grid[static_cast<std::size_t>(k - 1)];
    const StepCoefficients c = step_coefficients(sched, Solver::ddpm, t_from, t_to);
    ctx.step_index = k;
    // One noise draw per step, shared by both chains (common random numbers).
    Eigen::VectorXd eta = Eigen::VectorXd::Zero(oracle.dim);
    if (c.noise > 0.0) {
      eta = normal_vector_at(noise_key, static_cast<std::uint64_t>(k), oracle.dim);
    }
    xs = c.a * xs + c.b * oracle(t_from, xs, ctx) + c.noise * eta;
    xe = c.a * xe + c.b * estimate(t_from, xe, ctx) + c.noise * eta;
    res.oracle.states.push_back(xs);
    res.estimate.states.push_back(xe);
  }
  res.terminal_error = (xe - xs).norm();
  return res;
}

void write_trajectories_jsonl(const std::string& path, const std::vector<Trajectory>& trajs) {
  std::ostringstream out;
  for (const auto& traj : trajs) {
    nlohmann::ordered_json rec;
    rec["solver"] = to_string(traj.solver);
    rec["seed"] = traj.seed;
    rec["grid"] = traj.grid;
    auto states = nlohmann::ordered_json::array();
    for (const auto& s : traj.states) {
      auto row = nlohmann::ordered_json::array();
      for (Eigen::Index i = 0; i < s.size(); ++i) row.push_back(s[i]);
      states.push_back(std::move(row));
    }
    rec["states"] = std::move(states);
    out << rec.dump() << '\n';
  }
  write_text_file(path, out.str());
}

void write_endpoints_csv(const std::string& path, const Eigen::MatrixXd& endpoints) {
  std::ostringstream out;
  for (Eigen::Index j = 0; j < endpoints.cols(); ++j) {
    out << (j ? "," : "") << "x" << j;
  }
  out << '\n';
  for (Eigen::Index i = 0; i < endpoints.rows(); ++i) {
    for (Eigen::Index j = 0; j < endpoints.cols(); ++j) {
      out << (j ? "," : "") << format_double(endpoints(i, j));
    }
    out << '\n';
  }
  write_text_file(path, out.str());
}

}  // namespace gpc
