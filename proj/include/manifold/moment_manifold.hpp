#pragma once

#include <Eigen/Dense>
#include <array>
#include <optional>
#include <string>
#include <vector>

#include "manifold/common.hpp"
#include "manifold/core_geometry.hpp"
#include "manifold/mc_validation.hpp"

namespace manifold {

// A point of the moment constraint set in [0,1]^n together with its first m
// power sums, cached as certified invariants of the chain.
struct MomentState {
  Eigen::VectorXd x;          // coordinates in [0,1]
  int m = 4;                  // constraint order
  Eigen::VectorXd power_sum;  // p_i = sum_j x_j^i, i = 1..m

  void validate(double tol = 1e-9) const;
};

MomentState make_moment_state(const Eigen::VectorXd& x, int m = 4);

// Compensated (Neumaier) accumulation of p_i = sum_j x_j^i for i = 1..m.
Eigen::VectorXd power_sums(const Eigen::VectorXd& x, int m);

// Newton's identities for exactly four values: power sums -> elementary
// symmetric functions.
Eigen::Vector4d newton_to_elementary(const Eigen::Vector4d& p);

enum class QuarticStatus { Ok, ComplexRoots, OutOfBox };

struct QuarticResult {
  QuarticStatus status = QuarticStatus::ComplexRoots;
  std::array<double, 4> roots{};  // valid when status == Ok, each in [0,1]
};

// All roots of t^4 - e1 t^3 + e2 t^2 - e3 t + e4 via companion-matrix
// eigenvalues plus Newton polishing. Succeeds only when the four roots are
// real (clusters of a repeated root are merged at their mean), reproduce the
// requested symmetric functions, and lie in [0,1]. Failures are signals for
// the chain, not faults.
QuarticResult solve_quartic_in_box(const Eigen::Vector4d& e);

// The m x m Gram matrix of the local moment map derivative, entry (i,j) =
// i*j*pbar_{i+j-2} with pbar_0 = #points; for m = 4 this needs local power
// sums up to index 6. Returns the matrix and its determinant J_m (the
// squared Jacobian).
struct MomentGram {
  Eigen::MatrixXd matrix;
  JacobianValue determinant;  // .squared is J_m
};
MomentGram gram_moment_matrix(const Eigen::VectorXd& y, int m = 4);

enum class CurveMoveFailure { None, ComplexRoots, OutOfBox, DegenerateJacobian };

std::string to_string(CurveMoveFailure f);

struct CurveMoveRecord {
  std::array<int, 5> indices{};        // chosen coordinates
  Eigen::Vector4d local_sums{};        // pbar_1..pbar_4 over the chosen five
  std::optional<std::array<double, 5>> proposal;  // new values for the five slots
  CurveMoveFailure failure = CurveMoveFailure::None;
  bool accepted = false;
  double j4_current = 0.0;
  double j4_proposal = 0.0;
};

// One curve move: perturb one of the five chosen coordinates uniformly in
// [-eps, eps], solve the remaining four through Newton's identities and the
// quartic, and assign the roots to the remaining slots in uniformly random
// order. Does not apply the move and never throws; failures are recorded.
CurveMoveRecord curve_move(const MomentState& state, const std::array<int, 5>& indices, double eps,
                           Rng& rng);

// The acceptance rule: move outright when J4(x) >= J4(y), otherwise flip a
// coin with success probability sqrt(J4(x)/J4(y)).
bool moment_accept(double j4_current, double j4_proposal, Rng& rng);

enum class IndexSchedule { UniformRandom, GrayCode };

// One Metropolis-within-Gibbs step: choose a 5-subset (resampling up to a
// retry cap when the local Jacobian is degenerate), run the curve move,
// accept per the square-root rule, and update the state in place.
CurveMoveRecord neyman_chain_step(MomentState& state, double eps, Rng& rng);

struct RankDiagnostic {
  int rank = 0;            // numerical rank of the 4 x n moment derivative
  int distinct_count = 0;  // distinct coordinate values at tolerance 1e-9
  bool near_degenerate_set = false;  // near the generalized diagonal or the box boundary
};

RankDiagnostic rank_diagnostic(const Eigen::VectorXd& x);

// Exponential-family density exp(sum_{i=1..m} theta_i y^i)/z on [0,1].
// The order is theta.size(); curve moves exist for m = 4 only, but the
// density and the Gram matrix accept any order.
struct NeymanModel {
  Eigen::VectorXd theta;
  double normalizer = 1.0;  // z, from adaptive quadrature

  static NeymanModel make(const Eigen::VectorXd& theta);
};

double neyman_density(double y, const NeymanModel& model);

// Long-run chain wrapper: keeps rejection counts and recomputes the cached
// power sums every 10^4 steps to stop drift accumulating.
class NeymanChain {
 public:
  NeymanChain(MomentState state, double eps, IndexSchedule schedule = IndexSchedule::UniformRandom);

  CurveMoveRecord step(Rng& rng);

  const MomentState& state() const { return state_; }
  const std::map<std::string, std::uint64_t>& rejection_counts() const { return counts_; }

 private:
  MomentState state_;
  double eps_;
  IndexSchedule schedule_;
  std::vector<int> gray_combination_;
  std::int64_t steps_since_refresh_ = 0;
  std::map<std::string, std::uint64_t> counts_;
};

enum class NeymanStatistic { Legendre5, FifthPowerSum };

double evaluate_neyman_statistic(const MomentState& state, NeymanStatistic statistic);

// Conditional smooth goodness-of-fit test: condition on the first four
// power sums, move with the curve chain, and calibrate the fifth orthogonal
// polynomial (default) through the exchangeable serial test.
TestReport neyman_smooth_gof(const Eigen::VectorXd& data, const ChainConfig& cfg,
                             std::int64_t b_replicates, std::int64_t t_steps,
                             NeymanStatistic statistic = NeymanStatistic::Legendre5);

// Successor in the revolving-door Gray code for k-subsets: consecutive
// combinations differ by exactly one element.
void gray_code_advance(std::vector<int>& combination, int n);

}  // namespace manifold
