#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "manifold/common.hpp"
#include "manifold/stats_util.hpp"

namespace manifold {

// Everything a serialized test needs for replay: the observed statistic, the
// replicate statistics, the rank-based p-value and how ties were broken.
struct TestReport {
  double statistic_observed = 0.0;
  std::vector<double> statistic_replicates;
  int rank = 0;        // 1..B+1, counted from the top (upper tail)
  double p_value = 0;  // rank/(B+1), in (0, 1]
  std::string tie_policy = "uniform_random";
  std::uint64_t seed = 0;
  std::int64_t chain_steps = 0;  // T
  std::int64_t replicates = 0;   // B
  std::map<std::string, std::uint64_t> rejection_counts;
};

struct KsResult {
  double statistic = 0.0;
  double p_value = 0.0;
};

// One-sample Kolmogorov-Smirnov against an arbitrary CDF evaluator, with the
// asymptotic p-value (Stephens' small-sample adjustment).
KsResult ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf);

// Two-sample Kolmogorov-Smirnov with the asymptotic p-value.
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

struct ChiSquareResult {
  double statistic = 0.0;
  double p_value = 0.0;
  double df = 0.0;
  bool low_expected_count = false;  // some expected count < 5
};

// Pearson statistic for pre-binned counts against expected cell
// probabilities; df = bins - 1.
ChiSquareResult chi_square_gof(const std::vector<double>& samples,
                               const std::vector<double>& bin_edges,
                               const std::vector<double>& expected_probs);
ChiSquareResult chi_square_from_counts(const std::vector<std::int64_t>& counts,
                                       const std::vector<double>& expected_probs);

// Upper-tail rank of `observed` among {observed} + replicates with uniform
// random tie-breaking. Returns (rank, p = rank/(B+1)).
std::pair<int, double> rank_p_value(double observed, const std::vector<double>& replicates,
                                    Rng& rng);

// A chain usable by the serial test. `step` advances one transition.
// `reverse_step` may be empty only when `reversible` is true (Metropolis
// kernels are their own reversal); a non-reversible chain without an
// explicit reversal is rejected loudly.
template <class State>
struct ChainHandle {
  std::function<State(const State&, Rng&)> step;
  std::function<State(const State&, Rng&)> reverse_step;
  bool reversible = false;
};

// Exchangeable serial test: run T steps forward from x0 to a midpoint y,
// then B independent reversed runs of T steps from y. The B+1 end states
// (the original x0 plus the B replicates) are exchangeable under the null,
// so the rank of the observed statistic gives an exactly valid p-value,
// connected chain or not.
template <class State, class Stat>
TestReport besag_serial_test(const ChainHandle<State>& chain, const State& x0, std::int64_t t_steps,
                             std::int64_t b_replicates, Stat&& statistic, Rng& rng) {
  if (b_replicates < 1) throw InputError("besag_serial_test: B must be >= 1");
  if (t_steps < 0) throw InputError("besag_serial_test: T must be >= 0");
  if (!chain.step) throw InputError("besag_serial_test: chain.step missing");
  auto reverse = chain.reverse_step;
  if (!reverse) {
    if (!chain.reversible)
      throw InputError(
          "besag_serial_test: chain is not declared reversible and no reverse_step given");
    reverse = chain.step;
  }

  State midpoint = x0;
  for (std::int64_t i = 0; i < t_steps; ++i) midpoint = chain.step(midpoint, rng);

  const std::uint64_t replicate_seed = rng.raw();
  TestReport report;
  report.statistic_observed = statistic(x0);
  report.statistic_replicates.reserve(static_cast<std::size_t>(b_replicates));
  for (std::int64_t b = 0; b < b_replicates; ++b) {
    Rng rep_rng = Rng::derive(replicate_seed, static_cast<std::uint64_t>(b));
    State s = midpoint;
    for (std::int64_t i = 0; i < t_steps; ++i) s = reverse(s, rep_rng);
    report.statistic_replicates.push_back(statistic(s));
  }

  const auto [rank, p] = rank_p_value(report.statistic_observed, report.statistic_replicates, rng);
  report.rank = rank;
  report.p_value = p;
  report.chain_steps = t_steps;
  report.replicates = b_replicates;
  return report;
}

}  // namespace manifold
