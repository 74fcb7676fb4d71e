#include "manifold/gamma_manifold.hpp"

#include <cmath>
#include <iostream>

#include "manifold/stats_util.hpp"

namespace manifold {

void GammaConstraint::validate() const {
  if (n < 3) throw InputError("GammaConstraint: n must be >= 3");
  if (!(sum > 0.0) || !(product > 0.0))
    throw InputError("GammaConstraint: S and P must be positive");
  // arithmetic-geometric mean inequality, with head-room for round-off
  const double gm = std::exp(std::log(product) / n);
  if (gm > sum / n * (1.0 + 1e-12))
    throw InputError("GammaConstraint: P^(1/n) must not exceed S/n");
}

bool GammaConstraint::is_single_point() const {
  const double gm = std::exp(std::log(product) / n);
  return gm >= sum / n * (1.0 - 1e-12);
}

double discriminant_tolerance(double t, double four_p_over_p) {
  return 1e-12 * std::max(t * t, four_p_over_p);
}

std::optional<ChartPoint> lift_to_manifold(const Eigen::VectorXd& free_coords,
                                           const GammaConstraint& c) {
  c.validate();
  if (free_coords.size() != c.n - 2)
    throw InputError("lift_to_manifold: free coordinate count must be n - 2");
  if ((free_coords.array() <= 0.0).any()) return std::nullopt;

  const double t = c.sum - free_coords.sum();
  if (t <= 0.0) return std::nullopt;
  const double p = free_coords.prod();
  const double disc = t * t - 4.0 * c.product / p;
  if (disc < 0.0) return std::nullopt;

  const double sq = std::sqrt(disc);
  ChartPoint pt;
  pt.free = free_coords;
  pt.t = t;
  pt.p = p;
  pt.discriminant = disc;
  pt.lifted.resize(c.n);
  pt.lifted(0) = (t + sq) / 2.0;
  pt.lifted(1) = (t - sq) / 2.0;
  pt.lifted.tail(c.n - 2) = free_coords;
  if (pt.lifted(1) <= 0.0) return std::nullopt;  // round-off guard; x1 x2 = P/p > 0
  return pt;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> chart_partials(const ChartPoint& point,
                                                           const GammaConstraint& c) {
  const double sq = std::sqrt(point.discriminant);
  const auto& free = point.free;
  const Eigen::Index m = free.size();
  Eigen::VectorXd v(m), w(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const double g = (-point.t + 2.0 * c.product / (point.p * free(j))) / (2.0 * sq);
    v(j) = -0.5 + g;  // D_j f1
    w(j) = -0.5 - g;  // D_j f2
  }
  return {v, w};
}

JacobianValue chart_jacobian(const ChartPoint& point, const GammaConstraint& c) {
  c.validate();
  const double tol = discriminant_tolerance(point.t, 4.0 * c.product / point.p);
  if (point.discriminant <= tol)
    throw DegeneracyError("chart_jacobian: discriminant at the fold x1 = x2");

  const auto [v, w] = chart_partials(point, c);
  const double det = det_identity_reduce(v, w);
  JacobianValue jac;
  jac.squared = det;
  jac.value = std::sqrt(det);
  jac.degenerate = false;  // det >= 1 by construction
  return jac;
}

JacobianValue jacobian_sufficient_gamma(const Eigen::VectorXd& x) {
  if (x.size() < 2) throw InputError("jacobian_sufficient_gamma: need at least two coordinates");
  if ((x.array() <= 0.0).any())
    throw InputError("jacobian_sufficient_gamma: coordinates must be positive");

  double sum = 0.0;
  double scale = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double xi_inv = 1.0 / x(i);
    scale += xi_inv * xi_inv;
    for (Eigen::Index j = i + 1; j < x.size(); ++j) {
      const double diff = xi_inv - 1.0 / x(j);
      sum += diff * diff;
    }
  }
  JacobianValue jac;
  jac.squared = sum;
  jac.value = std::sqrt(sum);
  jac.degenerate = sum <= 1e-14 * static_cast<double>(x.size()) * scale;
  return jac;
}

double gamma_conditional_logdensity(const ChartPoint& point, const GammaConstraint& c) {
  const JacobianValue chart = chart_jacobian(point, c);
  const JacobianValue suff = jacobian_sufficient_gamma(point.lifted);
  if (suff.degenerate)
    throw DegeneracyError("gamma_conditional_logdensity: J2 of the sufficient statistic vanishes");
  return std::log(chart.value) - std::log(suff.value);
}

ChartPoint GammaChain::default_start(const GammaConstraint& c) {
  c.validate();
  if (c.is_single_point())
    throw DegeneracyError(
        "GammaChain: P^(1/n) = S/n, the constraint set is the single point (S/n,...,S/n)");

  const int m = c.n - 2;
  auto disc_at = [&](double v) {
    const double t = c.sum - m * v;
    if (t <= 0.0 || v <= 0.0) return -std::numeric_limits<double>::infinity();
    return t * t - 4.0 * c.product / std::pow(v, m);
  };
  auto try_lift = [&](double v) -> std::optional<ChartPoint> {
    auto pt = lift_to_manifold(Eigen::VectorXd::Constant(m, v), c);
    if (!pt) return std::nullopt;
    const double tol = discriminant_tolerance(pt->t, 4.0 * c.product / pt->p);
    if (pt->discriminant <= tol) return std::nullopt;
    return pt;
  };

  // All coordinates equal to S/n sits on the constraint set whenever the
  // AM-GM inequality is strict, so it is the natural interior start.
  if (auto pt = try_lift(c.sum / c.n)) return *pt;

  // Near AM-GM equality round-off can spoil it; scan the scaling for the
  // largest discriminant instead.
  double best_v = 0.0, best_disc = 0.0;
  const double hi = c.sum / m;
  for (int i = 1; i < 4096; ++i) {
    const double v = hi * i / 4096.0;
    const double d = disc_at(v);
    if (d > best_disc) {
      best_disc = d;
      best_v = v;
    }
  }
  if (best_v > 0.0) {
    if (auto pt = try_lift(best_v)) return *pt;
  }
  throw InfeasibilityError("GammaChain: no feasible interior start found");
}

GammaChain::GammaChain(const GammaConstraint& c, GammaTarget target, double eps)
    : GammaChain(c, target, eps, default_start(c)) {}

GammaChain::GammaChain(const GammaConstraint& c, GammaTarget target, double eps,
                       const ChartPoint& start)
    : constraint_(c), target_(target), eps_(eps), state_(start) {
  if (!(eps >= 0.0)) throw InputError("GammaChain: eps must be >= 0");
  try {
    log_target_ = log_target_at(state_);
  } catch (const DegeneracyError& e) {
    throw InputError(std::string("GammaChain: degenerate start point: ") + e.what());
  }
  if (!std::isfinite(log_target_)) throw InputError("GammaChain: start point has zero density");
}

double GammaChain::log_target_at(const ChartPoint& pt) const {
  if (target_ == GammaTarget::Area) return std::log(chart_jacobian(pt, constraint_).value);
  return gamma_conditional_logdensity(pt, constraint_);
}

bool GammaChain::step(Rng& rng) {
  const Eigen::Index m = state_.free.size();
  Eigen::VectorXd proposal(m);
  for (Eigen::Index j = 0; j < m; ++j)
    proposal(j) = state_.free(j) + rng.uniform(-eps_, eps_);

  auto lifted = lift_to_manifold(proposal, constraint_);
  double proposal_log = -std::numeric_limits<double>::infinity();
  if (!lifted) {
    ++rejected_out_of_domain_;
  } else {
    const double tol = discriminant_tolerance(lifted->t, 4.0 * constraint_.product / lifted->p);
    if (lifted->discriminant > tol) {
      proposal_log = log_target_at(*lifted);
    } else {
      ++rejected_near_fold_;
    }
  }

  if (metropolis_step(log_target_, proposal_log, rng)) {
    state_ = *lifted;
    log_target_ = proposal_log;
    return true;
  }
  return false;
}

GammaChainResult gamma_metropolis_chain(const GammaConstraint& c, const ChainConfig& cfg,
                                        GammaTarget target) {
  cfg.validate();
  c.validate();
  if (c.is_single_point()) {
    // AM = GM: the constraint set is the single point (S/n, ..., S/n); there
    // is nothing to walk on, so return that point directly.
    std::cerr << "gamma chain warning: P^(1/n) = S/n, constraint set is a single point; "
                 "returning it without running a chain\n";
    ChartPoint pt;
    pt.free = Eigen::VectorXd::Constant(c.n - 2, c.sum / c.n);
    pt.lifted = Eigen::VectorXd::Constant(c.n, c.sum / c.n);
    pt.t = 2.0 * c.sum / c.n;
    pt.p = std::pow(c.sum / c.n, c.n - 2);
    pt.discriminant = 0.0;
    GammaChainResult result;
    result.states.push_back(pt);
    result.log_densities.push_back(std::numeric_limits<double>::quiet_NaN());
    result.accepted.push_back(false);
    return result;
  }
  GammaChain chain(c, target, cfg.eps);
  Rng rng(cfg.seed);
  GammaChainResult result;
  for (std::int64_t i = 0; i < cfg.steps; ++i) {
    const bool accepted = chain.step(rng);
    if (accepted) ++result.accepted_count;
    ++result.step_count;
    if (i >= cfg.burnin && (i - cfg.burnin) % cfg.thin == 0) {
      result.states.push_back(chain.state());
      result.log_densities.push_back(chain.log_target());
      result.accepted.push_back(accepted);
    }
  }
  return result;
}

Eigen::VectorXd randomize_symmetry(const ChartPoint& point, Rng& rng) {
  Eigen::VectorXd x = point.lifted;
  if (rng.below(2) == 1) std::swap(x(0), x(1));
  for (Eigen::Index i = x.size(); i > 1; --i) {
    const auto j = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(i)));
    std::swap(x(i - 1), x(j));
  }
  return x;
}

double evaluate_gamma_statistic(const Eigen::VectorXd& x, GammaStatistic statistic, double sum,
                                double product) {
  switch (statistic) {
    case GammaStatistic::SumOfSquares:
      return x.squaredNorm();
    case GammaStatistic::AndersonDarling: {
      const int n = static_cast<int>(x.size());
      const GammaFit fit = fit_gamma_mle(sum / n, std::log(product) / n);
      std::vector<double> sample(x.data(), x.data() + x.size());
      return anderson_darling(sample, [&](double v) { return gamma_cdf(v, fit); });
    }
  }
  throw InputError("evaluate_gamma_statistic: unknown statistic");
}

TestReport gamma_gof_test(const Eigen::VectorXd& data, const ChainConfig& cfg, int b_replicates,
                          GammaStatistic statistic) {
  cfg.validate();
  if (data.size() < 4) throw InputError("gamma_gof_test: need n >= 4");
  if ((data.array() <= 0.0).any()) throw InputError("gamma_gof_test: data must be positive");
  if (b_replicates < 1) throw InputError("gamma_gof_test: B must be >= 1");

  GammaConstraint c;
  c.n = static_cast<int>(data.size());
  c.sum = data.sum();
  c.product = data.prod();
  if (c.is_single_point()) throw DegeneracyError("gamma_gof_test: all observations equal");

  // Chart representation of the data: first two coordinates ordered so that
  // x1 >= x2, remaining ones are the free block.
  Eigen::VectorXd free = data.tail(c.n - 2);
  auto start = lift_to_manifold(free, c);
  if (!start) throw DegeneracyError("gamma_gof_test: data does not lift (round-off at the fold)");

  Rng rng(cfg.seed);
  const double eps = cfg.eps > 0.0 ? cfg.eps : default_gamma_eps(c);
  GammaChain chain(c, GammaTarget::Conditional, eps, *start);

  TestReport report;
  report.statistic_observed = evaluate_gamma_statistic(data, statistic, c.sum, c.product);
  report.statistic_replicates.reserve(static_cast<std::size_t>(b_replicates));
  for (int b = 0; b < b_replicates; ++b) {
    for (std::int64_t i = 0; i < cfg.thin; ++i) chain.step(rng);
    const Eigen::VectorXd replicate = randomize_symmetry(chain.state(), rng);
    report.statistic_replicates.push_back(
        evaluate_gamma_statistic(replicate, statistic, c.sum, c.product));
  }

  const auto [rank, p] = rank_p_value(report.statistic_observed, report.statistic_replicates, rng);
  report.rank = rank;
  report.p_value = p;
  report.seed = cfg.seed;
  report.chain_steps = cfg.thin;
  report.replicates = b_replicates;
  report.rejection_counts["out_of_domain"] = chain.rejected_out_of_domain();
  report.rejection_counts["near_fold"] = chain.rejected_near_fold();
  return report;
}

}  // namespace manifold
