#pragma once

#include <Eigen/Dense>

#include "manifold/common.hpp"

namespace manifold {

// Which axis of a derivative matrix indexes the parameters of the chart.
// The Gram product always contracts the long axis, so the value only
// documents intent; shape validation uses it.
enum class ParamAxis { Columns, Rows };

struct DerivativeMatrix {
  Eigen::MatrixXd entries;
  ParamAxis params = ParamAxis::Columns;

  void validate() const;
};

// J = sqrt(det Gram). `squared` keeps the raw determinant because callers
// on the moment manifold work with it directly; `degenerate` is set when
// the determinant is at or below the round-off scale of the Gram entries.
struct JacobianValue {
  double value = 0.0;
  double squared = 0.0;
  bool degenerate = false;
};

// Determinant of the small-side Gram product, clamped at zero from below.
// The degeneracy tolerance is 1e-14 times the Hadamard bound of the Gram
// matrix, so it scales with the entries.
JacobianValue gram_jacobian(const DerivativeMatrix& d);

// Same, starting from an already-formed (symmetric PSD) Gram matrix.
JacobianValue jacobian_from_gram(const Eigen::MatrixXd& gram);

// Test oracle: sqrt of the explicit sum of squared k x k minors.
// Enumeration only; throws CapacityError when the subset count is too large.
double cauchy_binet_oracle(const DerivativeMatrix& d);

// det(I_q + V V^T + W W^T) collapsed to the 2x2 determinant
// (1 + V.V)(1 + W.W) - (V.W)^2. Always >= 1 for finite inputs.
double det_identity_reduce(const Eigen::VectorXd& v, const Eigen::VectorXd& w);

// One Metropolis accept/reject decision in log space. Consumes exactly one
// uniform draw. current must be finite: a chain may never sit on a
// zero-density state.
bool metropolis_step(double current_log_target, double proposal_log_target, Rng& rng);

// Unnormalized conditional density p(x)/J on a fiber (co-area slicing).
double coarea_conditional_unnormalized(double p_value, const JacobianValue& jacobian);

}  // namespace manifold
