#include "manifold/core_geometry.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <vector>

namespace manifold {

std::string format_g17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::vector<int> sample_indices(int n, int k, Rng& rng) {
  if (k < 0 || k > n) throw InputError("sample_indices: need 0 <= k <= n");
  std::vector<int> pool(n);
  for (int i = 0; i < n; ++i) pool[i] = i;
  std::vector<int> out(k);
  for (int i = 0; i < k; ++i) {
    const auto j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - i)));
    std::swap(pool[i], pool[j]);
    out[i] = pool[i];
  }
  return out;
}

void DerivativeMatrix::validate() const {
  if (entries.rows() < 1 || entries.cols() < 1)
    throw InputError("DerivativeMatrix: empty matrix");
  if (!entries.allFinite())
    throw InputError("DerivativeMatrix: non-finite entries");
}

JacobianValue jacobian_from_gram(const Eigen::MatrixXd& gram) {
  const auto k = gram.rows();
  // Degeneracy cut at 1e-14 times the scale of the Gram entries: round-off
  // junk from a rank-deficient factorization stays well below it, while
  // genuinely small determinants of clustered-but-distinct states clear it.
  double scale = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) scale = std::max(scale, std::fabs(gram(i, i)));
  const double tol = 1e-14 * scale;

  double det;
  if (k == 1) {
    det = gram(0, 0);
  } else {
    // Pivoted LDL^T of the (small) symmetric side.
    Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    det = ldlt.vectorD().prod();
  }

  JacobianValue j;
  j.degenerate = !(det > tol);
  j.squared = std::max(det, 0.0);  // round-off can push a singular Gram negative
  j.value = std::sqrt(j.squared);
  return j;
}

JacobianValue gram_jacobian(const DerivativeMatrix& d) {
  d.validate();
  const auto& m = d.entries;
  Eigen::MatrixXd gram;
  if (m.rows() >= m.cols()) {
    gram = m.transpose() * m;
  } else {
    gram = m * m.transpose();
  }
  return jacobian_from_gram(gram);
}

namespace {

double binomial_count(int n, int k) {
  double c = 1.0;
  for (int i = 0; i < k; ++i) c = c * (n - i) / (i + 1);
  return c;
}

// Determinant by expansion along the first column; exact enough for the
// k <= 8 submatrices this oracle handles.
double det_by_minors(const Eigen::MatrixXd& m) {
  const auto n = m.rows();
  if (n == 1) return m(0, 0);
  if (n == 2) return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
  double acc = 0.0;
  Eigen::MatrixXd sub(n - 1, n - 1);
  for (Eigen::Index r = 0; r < n; ++r) {
    Eigen::Index ri = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (i == r) continue;
      for (Eigen::Index j = 1; j < n; ++j) sub(ri, j - 1) = m(i, j);
      ++ri;
    }
    const double t = m(r, 0) * det_by_minors(sub);
    acc += (r % 2 == 0) ? t : -t;
  }
  return acc;
}

}  // namespace

double cauchy_binet_oracle(const DerivativeMatrix& d) {
  d.validate();
  // Orient so rows >= cols; minors are chosen along rows.
  Eigen::MatrixXd m = d.entries;
  if (m.rows() < m.cols()) m.transposeInPlace();
  const int rows = static_cast<int>(m.rows());
  const int k = static_cast<int>(m.cols());
  if (k > 8) throw CapacityError("cauchy_binet_oracle: more than 8 columns");
  if (binomial_count(rows, k) > 2e6)
    throw CapacityError("cauchy_binet_oracle: too many minors to enumerate");

  std::vector<int> comb(k);
  for (int i = 0; i < k; ++i) comb[i] = i;
  Eigen::MatrixXd sub(k, k);
  double sum = 0.0;
  while (true) {
    for (int i = 0; i < k; ++i) sub.row(i) = m.row(comb[i]);
    const double det = det_by_minors(sub);
    sum += det * det;
    // next combination in lexicographic order
    int i = k - 1;
    while (i >= 0 && comb[i] == rows - k + i) --i;
    if (i < 0) break;
    ++comb[i];
    for (int j = i + 1; j < k; ++j) comb[j] = comb[j - 1] + 1;
  }
  return std::sqrt(sum);
}

double det_identity_reduce(const Eigen::VectorXd& v, const Eigen::VectorXd& w) {
  if (v.size() != w.size())
    throw InputError("det_identity_reduce: length mismatch");
  if (!v.allFinite() || !w.allFinite())
    throw InputError("det_identity_reduce: non-finite entries");
  const double vv = v.dot(v);
  const double ww = w.dot(w);
  const double vw = v.dot(w);
  return (1.0 + vv) * (1.0 + ww) - vw * vw;
}

bool metropolis_step(double current_log_target, double proposal_log_target, Rng& rng) {
  if (!std::isfinite(current_log_target))
    throw InvalidStateError("metropolis_step: current state has zero density");
  if (std::isnan(proposal_log_target) ||
      proposal_log_target == std::numeric_limits<double>::infinity())
    throw InputError("metropolis_step: proposal log target must be in [-inf, inf)");
  const double u = rng.uniform();
  return u < std::exp(proposal_log_target - current_log_target);
}

double coarea_conditional_unnormalized(double p_value, const JacobianValue& jacobian) {
  if (p_value < 0.0 || !std::isfinite(p_value))
    throw InputError("coarea_conditional_unnormalized: p must be finite and >= 0");
  if (p_value == 0.0) return 0.0;
  if (jacobian.degenerate)
    throw DegeneracyError(
        "coarea_conditional_unnormalized: degenerate Jacobian with positive density");
  return p_value / jacobian.value;
}

}  // namespace manifold
