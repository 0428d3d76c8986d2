#pragma once

// ScoreField: the common currency of the library. A field evaluates a
// d-vector at (t, x) in a declared native parameterization, and may expose
// log-density and time-derivative capabilities (needed by the OR/AND
// composition operators and by the theory module).
//
// Evaluation is deterministic given (t, x) and the EvalContext: perturbed
// fields with frozen-per-trajectory noise key their realization off
// (field seed, trajectory_id, step_index); per-call noise consumes the
// context's explicit RNG stream (workers each carry their own stream, no
// hidden shared state).

#include <cstdint>
#include <functional>
#include <stdexcept>

#include <Eigen/Core>

#include "gpc/rng.hpp"
#include "gpc/schedule.hpp"

namespace gpc {

enum class Provenance { oracle, perturbed, composed };

struct EvalContext {
  std::uint64_t trajectory_id = 0;
  std::int64_t step_index = 0;
  RngStream* stream = nullptr;  // required only by per-call-noise fields
};

struct ScoreField {
  using Evaluator = std::function<Eigen::VectorXd(double, const Eigen::VectorXd&, const EvalContext&)>;
  using Scalar = std::function<double(double, const Eigen::VectorXd&)>;

  Eigen::Index dim = 0;
  Provenance provenance = Provenance::oracle;
  Parameterization native_kind = Parameterization::score;

  Evaluator eval;            // value in native_kind
  Scalar logdensity;         // log p_t(x); empty if not density-capable
  Scalar dt_logdensity;      // d/dt log p_t(x); empty if unavailable

  bool has_logdensity() const { return static_cast<bool>(logdensity); }
  bool has_time_derivative() const { return static_cast<bool>(dt_logdensity); }

  // Evaluate in the native kind.
  Eigen::VectorXd operator()(double t, const Eigen::VectorXd& x,
                             const EvalContext& ctx = {}) const {
    if (!eval) throw std::runtime_error("ScoreField: empty evaluator");
    return eval(t, x, ctx);
  }
};

}  // namespace gpc
