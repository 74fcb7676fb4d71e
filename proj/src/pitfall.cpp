#include "manifold/pitfall.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <set>

namespace manifold {

void NeighborhoodSystem::validate() const {
  const int n = size();
  if (n < 1) throw InputError("NeighborhoodSystem: empty system");
  if (static_cast<int>(neighbors.size()) != n)
    throw InputError("NeighborhoodSystem: neighborhood count mismatch");
  if ((pi.array() <= 0.0).any()) throw InputError("NeighborhoodSystem: pi must be positive");
  if (std::fabs(pi.sum() - 1.0) > 1e-12)
    throw InputError("NeighborhoodSystem: pi must sum to 1");
  for (int x = 0; x < n; ++x) {
    if (neighbors[static_cast<std::size_t>(x)].empty())
      throw InputError("NeighborhoodSystem: empty neighborhood");
    for (int y : neighbors[static_cast<std::size_t>(x)]) {
      if (y < 0 || y >= n) throw InputError("NeighborhoodSystem: neighbor out of range");
      const auto& back = neighbors[static_cast<std::size_t>(y)];
      if (std::find(back.begin(), back.end(), x) == back.end())
        throw InputError("NeighborhoodSystem: neighborhoods must be symmetric");
    }
  }
}

double NeighborhoodSystem::pi_mass(int x) const {
  double mass = 0.0;
  for (int y : neighbors[static_cast<std::size_t>(x)]) mass += pi(y);
  return mass;
}

void KernelMatrix::validate() const {
  if (rows.rows() != rows.cols() || rows.rows() < 1)
    throw InputError("KernelMatrix: must be square and nonempty");
  if ((rows.array() < 0.0).any()) throw InputError("KernelMatrix: negative entry");
  for (Eigen::Index i = 0; i < rows.rows(); ++i)
    if (std::fabs(rows.row(i).sum() - 1.0) > 1e-12)
      throw InputError("KernelMatrix: row does not sum to 1");
}

KernelMatrix neighborhood_kernel(const NeighborhoodSystem& sys) {
  sys.validate();
  const int n = sys.size();
  KernelMatrix k;
  k.rows = Eigen::MatrixXd::Zero(n, n);
  for (int x = 0; x < n; ++x) {
    const double mass = sys.pi_mass(x);
    for (int y : sys.neighbors[static_cast<std::size_t>(x)]) k.rows(x, y) = sys.pi(y) / mass;
  }
  return k;
}

KernelMatrix metropolized_neighborhood_kernel(const NeighborhoodSystem& sys) {
  sys.validate();
  const int n = sys.size();
  KernelMatrix m;
  m.rows = Eigen::MatrixXd::Zero(n, n);
  for (int x = 0; x < n; ++x) {
    const double mass_x = sys.pi_mass(x);
    double off_diagonal = 0.0;
    for (int y : sys.neighbors[static_cast<std::size_t>(x)]) {
      if (y == x) continue;
      const double value = sys.pi(y) * std::min(1.0 / mass_x, 1.0 / sys.pi_mass(y));
      m.rows(x, y) = value;
      off_diagonal += value;
    }
    if (off_diagonal > 1.0 + 1e-12)
      throw InvalidStateError("metropolized_neighborhood_kernel: negative residual mass");
    m.rows(x, x) = std::max(0.0, 1.0 - off_diagonal);
  }
  return m;
}

namespace {

// Strong connectivity and period of the support graph. The period is the
// gcd over edges (u,v) of level(u) + 1 - level(v) from a BFS tree.
void check_irreducible_aperiodic(const Eigen::MatrixXd& k) {
  const int n = static_cast<int>(k.rows());
  auto reach_all = [&](bool transpose) {
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    std::queue<int> queue;
    queue.push(0);
    seen[0] = true;
    int count = 1;
    while (!queue.empty()) {
      const int u = queue.front();
      queue.pop();
      for (int v = 0; v < n; ++v) {
        const double w = transpose ? k(v, u) : k(u, v);
        if (w > 0.0 && !seen[static_cast<std::size_t>(v)]) {
          seen[static_cast<std::size_t>(v)] = true;
          ++count;
          queue.push(v);
        }
      }
    }
    return count == n;
  };
  if (!reach_all(false) || !reach_all(true))
    throw StructureError("stationary_distribution: kernel is reducible");

  std::vector<int> level(static_cast<std::size_t>(n), -1);
  std::queue<int> queue;
  queue.push(0);
  level[0] = 0;
  while (!queue.empty()) {
    const int u = queue.front();
    queue.pop();
    for (int v = 0; v < n; ++v)
      if (k(u, v) > 0.0 && level[static_cast<std::size_t>(v)] < 0) {
        level[static_cast<std::size_t>(v)] = level[static_cast<std::size_t>(u)] + 1;
        queue.push(v);
      }
  }
  int g = 0;
  for (int u = 0; u < n; ++u)
    for (int v = 0; v < n; ++v)
      if (k(u, v) > 0.0)
        g = std::gcd(g, std::abs(level[static_cast<std::size_t>(u)] + 1 - level[static_cast<std::size_t>(v)]));
  if (g != 1) throw StructureError("stationary_distribution: kernel is periodic");
}

}  // namespace

Eigen::VectorXd stationary_distribution(const KernelMatrix& kernel) {
  kernel.validate();
  const Eigen::MatrixXd& k = kernel.rows;
  const int n = static_cast<int>(k.rows());
  if (n == 1) return Eigen::VectorXd::Ones(1);
  check_irreducible_aperiodic(k);

  Eigen::VectorXd sigma = Eigen::VectorXd::Constant(n, 1.0 / n);
  for (int it = 0; it < 1000000; ++it) {
    Eigen::VectorXd next = k.transpose() * sigma;
    next /= next.sum();
    const double delta = (next - sigma).lpNorm<1>();
    sigma = next;
    if (delta < 1e-14) break;
  }
  const double residual = (k.transpose() * sigma - sigma).lpNorm<1>();
  if (residual >= 1e-12)
    throw StructureError("stationary_distribution: power iteration did not converge");
  return sigma;
}

PitfallReport verify_pitfall(const NeighborhoodSystem& sys) {
  sys.validate();
  const int n = sys.size();

  PitfallReport report;
  report.sigma_formula.resize(n);
  double min_mass = 0.0, max_mass = 0.0;
  for (int x = 0; x < n; ++x) {
    const double mass = sys.pi_mass(x);
    report.sigma_formula(x) = mass * sys.pi(x);
    if (x == 0) {
      min_mass = max_mass = mass;
    } else {
      min_mass = std::min(min_mass, mass);
      max_mass = std::max(max_mass, mass);
    }
  }
  report.sigma_formula /= report.sigma_formula.sum();
  report.pi_neighborhood_constant = (max_mass - min_mass) <= 1e-12;

  report.sigma_empirical = stationary_distribution(neighborhood_kernel(sys));
  report.formula_error = (report.sigma_empirical - report.sigma_formula).lpNorm<1>();
  report.bias = (report.sigma_empirical - sys.pi).lpNorm<1>();

  const Eigen::VectorXd corrected = stationary_distribution(metropolized_neighborhood_kernel(sys));
  report.metropolized_error = (corrected - sys.pi).lpNorm<1>();
  return report;
}

NeighborhoodSystem path3_demo() {
  NeighborhoodSystem sys;
  sys.pi = Eigen::VectorXd::Constant(3, 1.0 / 3.0);
  sys.neighbors = {{0, 1}, {0, 1, 2}, {1, 2}};
  return sys;
}

NeighborhoodSystem random_system(int n, bool with_self_loops, Rng& rng) {
  if (n < 3) throw InputError("random_system: need at least 3 vertices");
  std::set<std::pair<int, int>> edges;
  auto add_edge = [&](int a, int b) {
    if (a == b) return;
    edges.insert({std::min(a, b), std::max(a, b)});
  };
  // random spanning tree, then extra edges, then one triangle for aperiodicity
  for (int v = 1; v < n; ++v) add_edge(v, static_cast<int>(rng.below(static_cast<std::uint64_t>(v))));
  const int extra = n / 2 + 1;
  for (int e = 0; e < extra; ++e) {
    const int a = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    const int b = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    add_edge(a, b);
  }
  const int base = static_cast<int>(rng.below(static_cast<std::uint64_t>(n - 2)));
  add_edge(base, base + 1);
  add_edge(base + 1, base + 2);
  add_edge(base, base + 2);

  NeighborhoodSystem sys;
  sys.neighbors.assign(static_cast<std::size_t>(n), {});
  if (with_self_loops)
    for (int v = 0; v < n; ++v) sys.neighbors[static_cast<std::size_t>(v)].push_back(v);
  for (const auto& [a, b] : edges) {
    sys.neighbors[static_cast<std::size_t>(a)].push_back(b);
    sys.neighbors[static_cast<std::size_t>(b)].push_back(a);
  }
  for (auto& nb : sys.neighbors) std::sort(nb.begin(), nb.end());

  sys.pi.resize(n);
  for (int v = 0; v < n; ++v) sys.pi(v) = 0.2 + rng.uniform();
  sys.pi /= sys.pi.sum();
  return sys;
}

}  // namespace manifold
