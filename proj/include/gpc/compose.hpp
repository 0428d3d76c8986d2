#pragma once

// Composition operators over score fields.
//
//   convex: s = sum_i w_i s_i with simplex weights (the core rule);
//   cfg:    s = s_u + sum_i w_i (s_i - s_u) anchored at an unconditional field;
//   or:     mixture-style softmax weights  w = softmax(T log p_i + ell),
//           recomputed at every (t, x) (time-indexed weights);
//   and:    agreement-enforcing weights making the instantaneous density
//           change D_i(w) = d/dt log p_i + <grad log p_i, u(w)> equal across
//           members, where u(w) is the composed drift of the given dynamics.
//
// OR and AND require density-capable members; AND additionally needs time
// derivatives (analytic for oracle-backed fields, central difference with
// h = 1e-5 otherwise).

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "gpc/field.hpp"
#include "gpc/sampler.hpp"
#include "gpc/schedule.hpp"

namespace gpc {

enum class CompositionOperator { convex, cfg, logical_and, logical_or };

std::string to_string(CompositionOperator op);
CompositionOperator composition_operator_from_string(const std::string& name);

// ---- pointwise operators ----------------------------------------------------

// sum_i w_i s_i(t, x); weights must be a simplex vector (sum 1 within 1e-12).
Eigen::VectorXd convex_compose(const std::vector<ScoreField>& fields,
                               const std::vector<double>& weights, double t,
                               const Eigen::VectorXd& x, const EvalContext& ctx = {});

// s_u + sum_i w_i (s_i - s_u); guidance weights are unconstrained.
Eigen::VectorXd cfg_compose(const ScoreField& uncond, const std::vector<ScoreField>& cond,
                            const std::vector<double>& weights, double t,
                            const Eigen::VectorXd& x, const EvalContext& ctx = {});

// softmax(T log p_i(t,x) + ell), log-sum-exp stabilized.
std::vector<double> or_weights(const std::vector<ScoreField>& fields, double temperature,
                               double offset, double t, const Eigen::VectorXd& x);

struct AndWeights {
  std::vector<double> weights;
  bool degenerate = false;  // fell back to uniform (|denominator| < 1e-10)
};

// Weights equalizing D_i(w) across members under `dynamics`. Two members are
// solved in closed form (the system is affine in w); more members go through
// all-pairs least squares with the simplex constraint eliminated, then a
// Euclidean projection onto the simplex.
AndWeights and_weights(const std::vector<ScoreField>& fields, const OdeDynamics& dynamics,
                       double t, const Eigen::VectorXd& x);

// ---- composed fields ---------------------------------------------------------

struct CompositionSpec {
  CompositionOperator op = CompositionOperator::convex;
  std::vector<double> weights;        // convex: simplex; cfg: guidance weights
  double temperature = 1.0;           // or
  double offset = 0.0;                // or
};

// Build a composed ScoreField. For convex/cfg the weights are fixed; OR/AND
// recompute their weights at every evaluation point. `uncond` is required
// for cfg; `dynamics` for AND.
ScoreField compose_field(const CompositionSpec& spec, std::vector<ScoreField> fields,
                         std::optional<ScoreField> uncond = std::nullopt,
                         std::optional<OdeDynamics> dynamics = std::nullopt);

// Euclidean projection onto the probability simplex (exposed for tests).
std::vector<double> project_to_simplex(std::vector<double> v);

}  // namespace gpc
