#include "manifold/mc_validation.hpp"

#include <algorithm>
#include <cmath>

namespace manifold {

KsResult ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) throw InputError("ks_statistic: empty sample");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max(d, (i + 1) / n - f);
    d = std::max(d, f - i / n);
  }
  const double sqrt_n = std::sqrt(n);
  KsResult r;
  r.statistic = d;
  r.p_value = kolmogorov_tail(d * (sqrt_n + 0.12 + 0.11 / sqrt_n));
  return r;
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw InputError("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] <= b[j])
      ++i;
    else
      ++j;
    d = std::max(d, std::fabs(i / na - j / nb));
  }
  const double ne = std::sqrt(na * nb / (na + nb));
  KsResult r;
  r.statistic = d;
  r.p_value = kolmogorov_tail(d * (ne + 0.12 + 0.11 / ne));
  return r;
}

ChiSquareResult chi_square_from_counts(const std::vector<std::int64_t>& counts,
                                       const std::vector<double>& expected_probs) {
  if (counts.size() != expected_probs.size())
    throw InputError("chi_square: counts/probabilities length mismatch");
  if (counts.size() < 2) throw InputError("chi_square: need at least two bins");
  double psum = 0.0;
  std::int64_t n = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    psum += expected_probs[i];
    n += counts[i];
  }
  if (std::fabs(psum - 1.0) > 1e-9)
    throw InputError("chi_square: expected probabilities must sum to 1");

  ChiSquareResult r;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double expected = expected_probs[i] * static_cast<double>(n);
    if (expected < 5.0) r.low_expected_count = true;
    if (expected <= 0.0) throw InputError("chi_square: zero expected count");
    const double diff = static_cast<double>(counts[i]) - expected;
    r.statistic += diff * diff / expected;
  }
  r.df = static_cast<double>(counts.size()) - 1.0;
  r.p_value = 1.0 - chi_square_cdf(r.statistic, r.df);
  return r;
}

ChiSquareResult chi_square_gof(const std::vector<double>& samples,
                               const std::vector<double>& bin_edges,
                               const std::vector<double>& expected_probs) {
  if (bin_edges.size() < 3) throw InputError("chi_square_gof: need at least two bins");
  if (bin_edges.size() != expected_probs.size() + 1)
    throw InputError("chi_square_gof: edges/probabilities length mismatch");
  std::vector<std::int64_t> counts(expected_probs.size(), 0);
  for (double x : samples) {
    const auto it = std::upper_bound(bin_edges.begin(), bin_edges.end(), x);
    if (it == bin_edges.begin() || it == bin_edges.end()) continue;  // outside the binned range
    ++counts[static_cast<std::size_t>(it - bin_edges.begin()) - 1];
  }
  return chi_square_from_counts(counts, expected_probs);
}

std::pair<int, double> rank_p_value(double observed, const std::vector<double>& replicates,
                                    Rng& rng) {
  int greater = 0, ties = 0;
  for (double s : replicates) {
    if (s > observed)
      ++greater;
    else if (s == observed)
      ++ties;
  }
  const int rank = 1 + greater + static_cast<int>(rng.below(static_cast<std::uint64_t>(ties) + 1));
  const double p = static_cast<double>(rank) / static_cast<double>(replicates.size() + 1);
  return {rank, p};
}

}  // namespace manifold
