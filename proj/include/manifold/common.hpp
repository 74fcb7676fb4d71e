#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace manifold {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

// Error taxonomy. Input/usage problems derive from std::invalid_argument,
// numerical/structural problems from std::runtime_error so the CLI can map
// them to distinct exit codes.
struct InputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct CapacityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InvalidStateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DegeneracyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct StructureError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InfeasibilityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace detail

// Deterministic random stream. All library randomness flows through this
// wrapper so that draws are well-defined (mt19937_64 output mapped to
// doubles explicitly, not via implementation-defined distributions).
// Single-owner: never share one instance across threads.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // Uniform on [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  // Uniform integer in [0, n). Rejection keeps it unbiased.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw InputError("Rng::below: n must be positive");
    const std::uint64_t rem = std::uint64_t(-n) % n;  // 2^64 mod n
    std::uint64_t x;
    do {
      x = gen_();
    } while (x < rem);
    return x % n;
  }

  std::uint64_t raw() { return gen_(); }

  // Independent stream for replicate index `stream` of a run seeded with
  // `seed`; replicates may run in any order (or in parallel) and still
  // reproduce.
  static Rng derive(std::uint64_t seed, std::uint64_t stream) {
    return Rng(detail::splitmix64(seed ^ detail::splitmix64(stream + 0x632be59bd9b4e019ULL)));
  }

 private:
  std::mt19937_64 gen_;
};

// In-place Fisher-Yates using Rng::below, so shuffles are reproducible
// across standard libraries.
template <class T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[rng.below(i)]);
  }
}

// Uniform k-subset of {0,...,n-1} via partial Fisher-Yates; returned indices
// are in selection order.
std::vector<int> sample_indices(int n, int k, Rng& rng);

// Deterministic replay contract for every Markov chain in the project.
struct ChainConfig {
  std::uint64_t seed = 0;
  double eps = 0.05;          // proposal half-width
  std::int64_t steps = 1000;  // total chain steps
  std::int64_t burnin = 0;
  std::int64_t thin = 1;

  void validate() const {
    if (!(eps >= 0.0)) throw InputError("ChainConfig: eps must be >= 0");
    if (steps < 0) throw InputError("ChainConfig: steps must be >= 0");
    if (burnin < 0) throw InputError("ChainConfig: burnin must be >= 0");
    if (thin < 1) throw InputError("ChainConfig: thin must be >= 1");
  }
};

// 17 significant digits: round-trips any double.
std::string format_g17(double x);

}  // namespace manifold
