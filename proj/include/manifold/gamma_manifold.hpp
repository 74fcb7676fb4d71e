#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "manifold/common.hpp"
#include "manifold/core_geometry.hpp"
#include "manifold/mc_validation.hpp"

namespace manifold {

// Sum/product constraint set {x > 0 : sum x = S, prod x = P} in R^n.
struct GammaConstraint {
  int n = 3;
  double sum = 0.0;      // S
  double product = 0.0;  // P

  void validate() const;
  // True when P^(1/n) == S/n up to round-off: the constraint set collapses
  // to the single point (S/n, ..., S/n).
  bool is_single_point() const;
};

// A point of the chart U -> M+ : free coordinates (x3..xn) plus the lifted
// ambient vector with x1 >= x2 recovered from the quadratic.
struct ChartPoint {
  Eigen::VectorXd free;    // x3..xn, all positive
  Eigen::VectorXd lifted;  // x1..xn
  double t = 0.0;          // S - sum(free)
  double p = 0.0;          // prod(free)
  double discriminant = 0.0;
};

// Tolerance below which the discriminant counts as on the fold x1 = x2.
double discriminant_tolerance(double t, double four_p_over_p);

// Lift free coordinates onto M+. nullopt when the point falls outside the
// chart domain (a nonpositive coordinate, sum >= S, or negative
// discriminant) -- routine signals during Metropolis proposals.
// The solved-coordinate formulas are only locally Lipschitz (the free-block
// product sits in a denominator); callers stay inside the chart domain,
// where everything is smooth, so no special handling is needed.
std::optional<ChartPoint> lift_to_manifold(const Eigen::VectorXd& free_coords,
                                           const GammaConstraint& c);

// Analytic partials of the two solved coordinates with respect to the free
// block: the rows V = Df1 and W = Df2 of the chart derivative.
std::pair<Eigen::VectorXd, Eigen::VectorXd> chart_partials(const ChartPoint& point,
                                                           const GammaConstraint& c);

// Area Jacobian of the chart via the rank-2 determinant identity applied to
// the analytic partials of the two solved coordinates. Throws DegeneracyError
// on or below the fold.
JacobianValue chart_jacobian(const ChartPoint& point, const GammaConstraint& c);

// J2 of the sufficient statistic (sum, sum of logs):
// sqrt( sum_{i<j} (1/x_i - 1/x_j)^2 ). Zero exactly when all coordinates agree.
JacobianValue jacobian_sufficient_gamma(const Eigen::VectorXd& x);

// log( chart Jacobian / J2(sufficient statistic at the lifted point) ):
// the conditional density of a Gamma sample given (S, P), up to the
// normalizer, in chart coordinates.
double gamma_conditional_logdensity(const ChartPoint& point, const GammaConstraint& c);

enum class GammaTarget { Area, Conditional };

// Proposal half-width default: 0.05 of the coordinate scale S/n.
inline double default_gamma_eps(const GammaConstraint& c) { return 0.05 * c.sum / c.n; }

// Random-walk Metropolis over the chart with uniform cube proposals.
// Proposals outside the chart domain (including the fold neighborhood)
// auto-reject.
class GammaChain {
 public:
  GammaChain(const GammaConstraint& c, GammaTarget target, double eps);
  GammaChain(const GammaConstraint& c, GammaTarget target, double eps, const ChartPoint& start);

  // One Metropolis step; returns true on acceptance.
  bool step(Rng& rng);

  const ChartPoint& state() const { return state_; }
  double log_target() const { return log_target_; }
  std::uint64_t rejected_out_of_domain() const { return rejected_out_of_domain_; }
  std::uint64_t rejected_near_fold() const { return rejected_near_fold_; }

  // Feasible interior start: free coordinates all equal, scale chosen by a
  // 1-D search maximizing the discriminant.
  static ChartPoint default_start(const GammaConstraint& c);

 private:
  double log_target_at(const ChartPoint& pt) const;

  GammaConstraint constraint_;
  GammaTarget target_;
  double eps_;
  ChartPoint state_;
  double log_target_;
  std::uint64_t rejected_out_of_domain_ = 0;
  std::uint64_t rejected_near_fold_ = 0;  // discriminant at tolerance
};

struct GammaChainResult {
  std::vector<ChartPoint> states;       // post burn-in, thinned
  std::vector<double> log_densities;    // log target per emitted state
  std::vector<bool> accepted;           // whether the step that produced the state moved
  std::uint64_t accepted_count = 0;     // over all steps
  std::uint64_t step_count = 0;
};

GammaChainResult gamma_metropolis_chain(const GammaConstraint& c, const ChainConfig& cfg,
                                        GammaTarget target);

// Coin-flip swap of the two solved coordinates followed by a uniform random
// permutation: turns an M+ chart point into a sample from the full manifold.
Eigen::VectorXd randomize_symmetry(const ChartPoint& point, Rng& rng);

enum class GammaStatistic { AndersonDarling, SumOfSquares };

// Conditional goodness-of-fit test for the Gamma family: S and P are taken
// from the data, replicates come from the conditional chain started at the
// data point, thinned by cfg.thin per replicate. Rank p-value with random
// tie-breaking; for the exactly valid variant route the same chain through
// besag_serial_test.
TestReport gamma_gof_test(const Eigen::VectorXd& data, const ChainConfig& cfg, int b_replicates,
                          GammaStatistic statistic = GammaStatistic::AndersonDarling);

double evaluate_gamma_statistic(const Eigen::VectorXd& x, GammaStatistic statistic, double sum,
                                double product);

}  // namespace manifold
