#pragma once

// Conversions among the four prediction parameterizations at a fixed
// (t, x, schedule) context:
//
//   score   s = -eps / sigma
//   epsilon eps = (x - alpha x0) / sigma
//   sample  x0 = (x - sigma eps) / alpha
//   velocity eps = alpha v + sigma x   (inverted: v = (eps - sigma x) / alpha)
//
// epsilon is the hub; every directed conversion is a composition of these
// exact affine maps, so round trips are identities up to roundoff.
// Conversions that would divide by alpha = 0 or sigma = 0 are refused with a
// domain error (never regularized): callers must use the native kind at
// singular endpoint times.

#include <Eigen/Core>

#include "gpc/field.hpp"
#include "gpc/schedule.hpp"

namespace gpc {

struct Prediction {
  Parameterization kind = Parameterization::score;
  Eigen::VectorXd value;
  double t = 0.0;
  Eigen::VectorXd x;  // the state the prediction was made at
};

// Convert a tagged value to `target` within the (t, x, sched) context.
Prediction convert(const Prediction& p, Parameterization target, const NoiseSchedule& sched);

// Convenience: raw-value conversion.
Eigen::VectorXd convert_value(Parameterization from, Parameterization to,
                              const Eigen::VectorXd& value, double t, const Eigen::VectorXd& x,
                              const NoiseSchedule& sched);

// Wrap any-kind field so it evaluates in score kind (or any requested kind).
// Singular-time errors propagate from convert.
ScoreField as_score_field(const ScoreField& field, const NoiseSchedule& sched);
ScoreField as_kind_field(const ScoreField& field, Parameterization target,
                         const NoiseSchedule& sched);

}  // namespace gpc
