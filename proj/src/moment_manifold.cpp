#include "manifold/moment_manifold.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>

#include "manifold/stats_util.hpp"

namespace manifold {

Eigen::VectorXd power_sums(const Eigen::VectorXd& x, int m) {
  if (m < 1) throw InputError("power_sums: m must be >= 1");
  Eigen::VectorXd sums = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd comp = Eigen::VectorXd::Zero(m);  // Neumaier carry
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    double pw = 1.0;
    for (int i = 0; i < m; ++i) {
      pw *= x(j);
      const double t = sums(i) + pw;
      if (std::fabs(sums(i)) >= std::fabs(pw))
        comp(i) += (sums(i) - t) + pw;
      else
        comp(i) += (pw - t) + sums(i);
      sums(i) = t;
    }
  }
  return sums + comp;
}

void MomentState::validate(double tol) const {
  if (x.size() < 1) throw InputError("MomentState: empty state");
  if ((x.array() < 0.0).any() || (x.array() > 1.0).any())
    throw InputError("MomentState: coordinates must lie in [0,1]");
  if (power_sum.size() != m) throw InputError("MomentState: power sum cache has wrong order");
  const Eigen::VectorXd actual = power_sums(x, m);
  for (int i = 0; i < m; ++i)
    if (std::fabs(actual(i) - power_sum(i)) > tol)
      throw InvalidStateError("MomentState: cached power sums drifted beyond tolerance");
}

MomentState make_moment_state(const Eigen::VectorXd& x, int m) {
  MomentState s;
  s.x = x;
  s.m = m;
  s.power_sum = power_sums(x, m);
  s.validate();
  return s;
}

Eigen::Vector4d newton_to_elementary(const Eigen::Vector4d& p) {
  if (!p.allFinite()) throw InputError("newton_to_elementary: non-finite power sums");
  Eigen::Vector4d e;
  e(0) = p(0);
  e(1) = (e(0) * p(0) - p(1)) / 2.0;
  e(2) = (e(1) * p(0) - e(0) * p(1) + p(2)) / 3.0;
  e(3) = (e(2) * p(0) - e(1) * p(1) + e(0) * p(2) - p(3)) / 4.0;
  return e;
}

namespace {

using Complex = std::complex<double>;

// Monic quartic with coefficients a (t^0..t^3): t^4 + a3 t^3 + a2 t^2 + a1 t + a0.
Complex quartic_eval(const std::array<double, 4>& a, Complex z) {
  return (((z + a[3]) * z + a[2]) * z + a[1]) * z + a[0];
}

Complex quartic_deriv(const std::array<double, 4>& a, Complex z) {
  return ((4.0 * z + 3.0 * a[3]) * z + 2.0 * a[2]) * z + a[1];
}

void polish_root(const std::array<double, 4>& a, Complex& z) {
  Complex best = z;
  double best_abs = std::abs(quartic_eval(a, z));
  for (int it = 0; it < 24; ++it) {
    const Complex d = quartic_deriv(a, z);
    if (std::abs(d) < 1e-300) break;
    z -= quartic_eval(a, z) / d;
    const double f = std::abs(quartic_eval(a, z));
    if (f < best_abs) {
      best_abs = f;
      best = z;
    }
    if (f == 0.0) break;
  }
  z = best;
}

std::array<double, 4> elementary_from_roots(const std::array<double, 4>& r) {
  std::array<double, 4> e{};
  e[0] = r[0] + r[1] + r[2] + r[3];
  e[1] = r[0] * r[1] + r[0] * r[2] + r[0] * r[3] + r[1] * r[2] + r[1] * r[3] + r[2] * r[3];
  e[2] = r[0] * r[1] * r[2] + r[0] * r[1] * r[3] + r[0] * r[2] * r[3] + r[1] * r[2] * r[3];
  e[3] = r[0] * r[1] * r[2] * r[3];
  return e;
}

bool reconstructs(const Eigen::Vector4d& e, const std::array<double, 4>& roots, double tol) {
  const auto er = elementary_from_roots(roots);
  for (int i = 0; i < 4; ++i)
    if (std::fabs(er[i] - e(i)) > tol) return false;
  return true;
}

// Merge root clusters at their mean: individual members of a multiple root
// are ill-conditioned but the cluster mean is second-order accurate, and for
// a full quadruple root it is exact (trace/4).
std::array<Complex, 4> merge_clusters(std::array<Complex, 4> z, double radius) {
  std::array<int, 4> group{0, 1, 2, 3};
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j)
      if (std::abs(z[i] - z[j]) <= radius) {
        const int gi = group[i], gj = group[j];
        for (auto& g : group)
          if (g == gj) g = gi;
      }
  for (int g = 0; g < 4; ++g) {
    Complex sum = 0.0;
    int count = 0;
    for (int i = 0; i < 4; ++i)
      if (group[i] == g) {
        sum += z[i];
        ++count;
      }
    if (count > 1)
      for (int i = 0; i < 4; ++i)
        if (group[i] == g) z[i] = sum / static_cast<double>(count);
  }
  return z;
}

}  // namespace

QuarticResult solve_quartic_in_box(const Eigen::Vector4d& e) {
  if (!e.allFinite()) throw InputError("solve_quartic_in_box: non-finite coefficients");
  // t^4 - e1 t^3 + e2 t^2 - e3 t + e4 as a[0..3] = coefficients of t^0..t^3
  const std::array<double, 4> a = {e(3), -e(2), e(1), -e(0)};

  Eigen::Matrix4d companion = Eigen::Matrix4d::Zero();
  companion(1, 0) = companion(2, 1) = companion(3, 2) = 1.0;
  for (int i = 0; i < 4; ++i) companion(i, 3) = -a[i];
  const Eigen::EigenSolver<Eigen::Matrix4d> solver(companion);

  std::array<Complex, 4> raw;
  std::array<Complex, 4> z;
  for (int i = 0; i < 4; ++i) {
    raw[i] = solver.eigenvalues()(i);
    z[i] = raw[i];
    polish_root(a, z[i]);
  }

  const double scale = std::max(1.0, e.cwiseAbs().maxCoeff());
  const double tol_imag = 1e-9 * scale;
  const double tol_recon = 1e-10 * scale;

  auto realize = [&](const std::array<Complex, 4>& cand) -> std::optional<std::array<double, 4>> {
    std::array<double, 4> r{};
    for (int i = 0; i < 4; ++i) {
      if (std::fabs(cand[i].imag()) > tol_imag) return std::nullopt;
      r[i] = cand[i].real();
    }
    if (!reconstructs(e, r, tol_recon)) return std::nullopt;
    return r;
  };

  auto roots = realize(z);
  if (!roots) roots = realize(merge_clusters(z, 3e-3 * scale));
  // Newton is noise-driven right at a multiple root; the raw eigenvalue
  // cluster keeps the exact trace, so its mean is the better estimate there.
  if (!roots) roots = realize(merge_clusters(raw, 3e-3 * scale));

  QuarticResult result;
  if (!roots) {
    result.status = QuarticStatus::ComplexRoots;
    return result;
  }
  std::sort(roots->begin(), roots->end());
  for (double& r : *roots) {
    if (r < -1e-12 || r > 1.0 + 1e-12) {
      result.status = QuarticStatus::OutOfBox;
      return result;
    }
    r = std::clamp(r, 0.0, 1.0);
  }
  result.status = QuarticStatus::Ok;
  result.roots = *roots;
  return result;
}

MomentGram gram_moment_matrix(const Eigen::VectorXd& y, int m) {
  if (m < 1) throw InputError("gram_moment_matrix: m must be >= 1");
  if (y.size() < 1) throw InputError("gram_moment_matrix: empty point");
  // local power sums up to index 2m-2, with pbar_0 = point count
  std::vector<double> pbar(static_cast<std::size_t>(2 * m - 1), 0.0);
  pbar[0] = static_cast<double>(y.size());
  if (2 * m - 2 >= 1) {
    const Eigen::VectorXd high = power_sums(y, 2 * m - 2);
    for (int k = 1; k <= 2 * m - 2; ++k) pbar[static_cast<std::size_t>(k)] = high(k - 1);
  }

  MomentGram g;
  g.matrix.resize(m, m);
  for (int i = 1; i <= m; ++i)
    for (int j = 1; j <= m; ++j)
      g.matrix(i - 1, j - 1) = i * j * pbar[static_cast<std::size_t>(i + j - 2)];
  g.determinant = jacobian_from_gram(g.matrix);
  return g;
}

std::string to_string(CurveMoveFailure f) {
  switch (f) {
    case CurveMoveFailure::None:
      return "none";
    case CurveMoveFailure::ComplexRoots:
      return "complex_roots";
    case CurveMoveFailure::OutOfBox:
      return "out_of_box";
    case CurveMoveFailure::DegenerateJacobian:
      return "degenerate_jacobian";
  }
  return "unknown";
}

CurveMoveRecord curve_move(const MomentState& state, const std::array<int, 5>& indices, double eps,
                           Rng& rng) {
  if (!(eps >= 0.0)) throw InputError("curve_move: eps must be >= 0");
  CurveMoveRecord rec;
  rec.indices = indices;

  Eigen::VectorXd local(5);
  for (int i = 0; i < 5; ++i) {
    if (indices[i] < 0 || indices[i] >= state.x.size())
      throw InputError("curve_move: index out of range");
    local(i) = state.x(indices[i]);
  }
  rec.local_sums = power_sums(local, 4);

  const int pick = static_cast<int>(rng.below(5));
  const double y1 = local(pick) + rng.uniform(-eps, eps);
  if (y1 < 0.0 || y1 > 1.0) {
    rec.failure = CurveMoveFailure::OutOfBox;
    return rec;
  }

  Eigen::Vector4d residual;
  double pw = 1.0;
  for (int i = 0; i < 4; ++i) {
    pw *= y1;
    residual(i) = rec.local_sums(i) - pw;
  }

  const QuarticResult quartic = solve_quartic_in_box(newton_to_elementary(residual));
  if (quartic.status == QuarticStatus::ComplexRoots) {
    rec.failure = CurveMoveFailure::ComplexRoots;
    return rec;
  }
  if (quartic.status == QuarticStatus::OutOfBox) {
    rec.failure = CurveMoveFailure::OutOfBox;
    return rec;
  }

  // assign the four roots to the four remaining slots in random order
  std::vector<int> order = {0, 1, 2, 3};
  shuffle(order, rng);
  std::array<double, 5> proposal{};
  proposal[static_cast<std::size_t>(pick)] = y1;
  int slot = 0;
  for (int i = 0; i < 5; ++i) {
    if (i == pick) continue;
    proposal[static_cast<std::size_t>(i)] = quartic.roots[static_cast<std::size_t>(order[slot++])];
  }

  Eigen::VectorXd check(5);
  for (int i = 0; i < 5; ++i) check(i) = proposal[static_cast<std::size_t>(i)];
  const Eigen::Vector4d new_sums = power_sums(check, 4);
  for (int i = 0; i < 4; ++i) {
    if (std::fabs(new_sums(i) - rec.local_sums(i)) > 1e-9) {
      rec.failure = CurveMoveFailure::ComplexRoots;  // solver output failed verification
      return rec;
    }
  }

  rec.proposal = proposal;
  return rec;
}

bool moment_accept(double j4_current, double j4_proposal, Rng& rng) {
  if (j4_current >= j4_proposal) return true;
  return rng.uniform() < std::sqrt(j4_current / j4_proposal);
}

namespace {

// Shared tail of a chain step once the 5-subset is fixed and its local
// Jacobian is known to be nondegenerate.
void finish_move(MomentState& state, CurveMoveRecord& rec, Rng& rng) {
  if (rec.failure != CurveMoveFailure::None || !rec.proposal) return;
  Eigen::VectorXd prop(5);
  for (int i = 0; i < 5; ++i) prop(i) = (*rec.proposal)[static_cast<std::size_t>(i)];
  const MomentGram gy = gram_moment_matrix(prop, 4);
  rec.j4_proposal = gy.determinant.squared;
  if (gy.determinant.degenerate) {
    rec.failure = CurveMoveFailure::DegenerateJacobian;
    return;
  }
  if (moment_accept(rec.j4_current, rec.j4_proposal, rng)) {
    for (int i = 0; i < 5; ++i) state.x(rec.indices[i]) = (*rec.proposal)[static_cast<std::size_t>(i)];
    rec.accepted = true;
  }
}

}  // namespace

CurveMoveRecord neyman_chain_step(MomentState& state, double eps, Rng& rng) {
  const int n = static_cast<int>(state.x.size());
  if (n < 5) throw InputError("neyman_chain_step: need at least 5 coordinates");
  if (state.m != 4) throw InputError("neyman_chain_step: curve moves are implemented for m = 4");

  constexpr int kRetryCap = 100;
  std::array<int, 5> indices{};
  double j4x = 0.0;
  bool found = false;
  for (int attempt = 0; attempt < kRetryCap && !found; ++attempt) {
    const auto chosen = sample_indices(n, 5, rng);
    Eigen::VectorXd local(5);
    for (int i = 0; i < 5; ++i) {
      indices[static_cast<std::size_t>(i)] = chosen[static_cast<std::size_t>(i)];
      local(i) = state.x(chosen[static_cast<std::size_t>(i)]);
    }
    const MomentGram gx = gram_moment_matrix(local, 4);
    if (!gx.determinant.degenerate) {
      j4x = gx.determinant.squared;
      found = true;
    }
  }
  if (!found)
    throw DegeneracyError("neyman_chain_step: every sampled 5-subset had a degenerate Jacobian");

  CurveMoveRecord rec = curve_move(state, indices, eps, rng);
  rec.j4_current = j4x;
  finish_move(state, rec, rng);
  return rec;
}

RankDiagnostic rank_diagnostic(const Eigen::VectorXd& x) {
  RankDiagnostic d;
  const Eigen::Index n = x.size();
  if (n == 0) return d;

  Eigen::MatrixXd moment(4, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    moment(0, j) = 1.0;
    moment(1, j) = x(j);
    moment(2, j) = x(j) * x(j);
    moment(3, j) = x(j) * x(j) * x(j);
  }
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(moment);
  const double cutoff = 1e-10 * svd.singularValues()(0);
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) > cutoff) ++d.rank;

  constexpr double tol = 1e-9;
  std::vector<double> sorted(x.data(), x.data() + n);
  std::sort(sorted.begin(), sorted.end());
  d.distinct_count = 1;
  bool near_diag = false;
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i] - sorted[i - 1] > tol)
      ++d.distinct_count;
    else
      near_diag = true;
  }
  const bool near_boundary = sorted.front() <= tol || sorted.back() >= 1.0 - tol;
  d.near_degenerate_set = near_diag || near_boundary;
  return d;
}

namespace {

double neyman_exponent(double y, const Eigen::VectorXd& theta) {
  double acc = 0.0;
  for (Eigen::Index i = theta.size(); i > 0; --i) acc = y * (theta(i - 1) + acc);
  return acc;
}

}  // namespace

NeymanModel NeymanModel::make(const Eigen::VectorXd& theta) {
  if (theta.size() < 1) throw InputError("NeymanModel: need at least one parameter");
  NeymanModel model;
  model.theta = theta;
  auto integrand = [&](double y) { return std::exp(neyman_exponent(y, theta)); };
  // coarse magnitude first so the absolute tolerance tracks the scale
  double coarse = 0.0;
  for (int i = 0; i < 64; ++i) coarse += integrand((i + 0.5) / 64.0) / 64.0;
  model.normalizer = integrate(integrand, 0.0, 1.0, 1e-12 * std::max(1.0, coarse));
  return model;
}

double neyman_density(double y, const NeymanModel& model) {
  if (y < 0.0 || y > 1.0) throw InputError("neyman_density: y must be in [0,1]");
  return std::exp(neyman_exponent(y, model.theta)) / model.normalizer;
}

void gray_code_advance(std::vector<int>& combination, int n) {
  const int t = static_cast<int>(combination.size());
  if (t <= 0 || t >= n) return;
  // revolving-door successor; wraps to the initial combination at the end
  std::vector<int> c(static_cast<std::size_t>(t) + 2);
  for (int i = 1; i <= t; ++i) c[static_cast<std::size_t>(i)] = combination[static_cast<std::size_t>(i - 1)];
  c[static_cast<std::size_t>(t) + 1] = n;

  bool advanced = false;
  int j = 0;
  if (t % 2 == 1) {
    if (c[1] + 1 < c[2]) {
      ++c[1];
      advanced = true;
    } else {
      j = 2;
    }
  } else {
    if (c[1] > 0) {
      --c[1];
      advanced = true;
    } else {
      j = 2;
    }
  }
  bool try_decrease = t % 2 == 1;
  while (!advanced && j <= t) {
    if (try_decrease) {
      if (c[static_cast<std::size_t>(j)] >= j) {
        c[static_cast<std::size_t>(j)] = c[static_cast<std::size_t>(j - 1)];
        c[static_cast<std::size_t>(j - 1)] = j - 2;
        advanced = true;
        break;
      }
    } else {
      if (c[static_cast<std::size_t>(j)] + 1 < c[static_cast<std::size_t>(j + 1)]) {
        c[static_cast<std::size_t>(j - 1)] = c[static_cast<std::size_t>(j)];
        ++c[static_cast<std::size_t>(j)];
        advanced = true;
        break;
      }
    }
    ++j;
    try_decrease = !try_decrease;
  }

  if (!advanced) {
    // past the last combination: restart the cycle
    for (int i = 0; i < t; ++i) combination[static_cast<std::size_t>(i)] = i;
    return;
  }
  for (int i = 1; i <= t; ++i) combination[static_cast<std::size_t>(i - 1)] = c[static_cast<std::size_t>(i)];
}

NeymanChain::NeymanChain(MomentState state, double eps, IndexSchedule schedule)
    : state_(std::move(state)), eps_(eps), schedule_(schedule) {
  state_.validate();
  if (state_.x.size() < 5) throw InputError("NeymanChain: need at least 5 coordinates");
  if (schedule_ == IndexSchedule::GrayCode) {
    gray_combination_ = {0, 1, 2, 3, 4};
  }
}

CurveMoveRecord NeymanChain::step(Rng& rng) {
  CurveMoveRecord rec;
  if (schedule_ == IndexSchedule::UniformRandom) {
    rec = neyman_chain_step(state_, eps_, rng);
  } else {
    std::array<int, 5> indices{};
    for (int i = 0; i < 5; ++i) indices[static_cast<std::size_t>(i)] = gray_combination_[static_cast<std::size_t>(i)];
    gray_code_advance(gray_combination_, static_cast<int>(state_.x.size()));

    Eigen::VectorXd local(5);
    for (int i = 0; i < 5; ++i) local(i) = state_.x(indices[static_cast<std::size_t>(i)]);
    const MomentGram gx = gram_moment_matrix(local, 4);
    if (gx.determinant.degenerate) {
      rec.indices = indices;
      rec.local_sums = power_sums(local, 4);
      rec.failure = CurveMoveFailure::DegenerateJacobian;
    } else {
      rec = curve_move(state_, indices, eps_, rng);
      rec.j4_current = gx.determinant.squared;
      finish_move(state_, rec, rng);
    }
  }

  if (rec.accepted)
    ++counts_["accepted"];
  else if (rec.failure == CurveMoveFailure::None)
    ++counts_["rejected_by_coin"];
  else
    ++counts_[to_string(rec.failure)];

  if (++steps_since_refresh_ >= 10000) {
    state_.power_sum = power_sums(state_.x, state_.m);
    steps_since_refresh_ = 0;
  }
  return rec;
}

double evaluate_neyman_statistic(const MomentState& state, NeymanStatistic statistic) {
  switch (statistic) {
    case NeymanStatistic::Legendre5: {
      double acc = 0.0;
      for (Eigen::Index j = 0; j < state.x.size(); ++j) acc += legendre5_orthonormal(state.x(j));
      return acc * acc / static_cast<double>(state.x.size());
    }
    case NeymanStatistic::FifthPowerSum: {
      double acc = 0.0;
      for (Eigen::Index j = 0; j < state.x.size(); ++j) {
        const double v = state.x(j);
        acc += v * v * v * v * v;
      }
      return acc;
    }
  }
  throw InputError("evaluate_neyman_statistic: unknown statistic");
}

TestReport neyman_smooth_gof(const Eigen::VectorXd& data, const ChainConfig& cfg,
                             std::int64_t b_replicates, std::int64_t t_steps,
                             NeymanStatistic statistic) {
  cfg.validate();
  if (data.size() < 6)
    throw InputError("neyman_smooth_gof: need n >= 6 (five moving coordinates plus an anchor)");
  if (b_replicates < 1) throw InputError("neyman_smooth_gof: B must be >= 1 (no replicates)");
  const RankDiagnostic diag = rank_diagnostic(data);
  if (diag.rank < 4 || diag.distinct_count < 4)
    throw DegeneracyError("neyman_smooth_gof: data has fewer than 4 distinct values");

  const MomentState x0 = make_moment_state(data, 4);

  auto counts = std::make_shared<std::map<std::string, std::uint64_t>>();
  ChainHandle<MomentState> chain;
  chain.reversible = true;
  const double eps = cfg.eps;
  chain.step = [eps, counts](const MomentState& s, Rng& rng) {
    MomentState next = s;
    const CurveMoveRecord rec = neyman_chain_step(next, eps, rng);
    if (rec.failure != CurveMoveFailure::None) ++(*counts)[to_string(rec.failure)];
    ++(*counts)[rec.accepted ? "accepted" : "rejected"];
    return next;
  };

  Rng rng(cfg.seed);
  TestReport report = besag_serial_test(
      chain, x0, t_steps, b_replicates,
      [statistic](const MomentState& s) { return evaluate_neyman_statistic(s, statistic); }, rng);
  report.seed = cfg.seed;
  report.rejection_counts = *counts;
  return report;
}

}  // namespace manifold
