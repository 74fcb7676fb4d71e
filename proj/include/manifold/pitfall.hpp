#pragma once

#include <Eigen/Dense>
#include <vector>

#include "manifold/common.hpp"

namespace manifold {

// Finite demonstration of the local-neighborhood sampling mistake: a target
// pi, and for each vertex a neighborhood N_x with the symmetry
// y in N_x <=> x in N_y. x in N_x itself is optional.
struct NeighborhoodSystem {
  Eigen::VectorXd pi;                        // positive, sums to 1
  std::vector<std::vector<int>> neighbors;  // N_x per vertex

  int size() const { return static_cast<int>(pi.size()); }
  void validate() const;
  double pi_mass(int x) const;  // pi(N_x)
};

struct KernelMatrix {
  Eigen::MatrixXd rows;  // row-stochastic

  void validate() const;
};

// K(x,y) = pi(y)/pi(N_x) for y in N_x, zero elsewhere.
KernelMatrix neighborhood_kernel(const NeighborhoodSystem& sys);

// Metropolis correction M(x,y) = pi(y) min(1/pi(N_x), 1/pi(N_y)) off the
// diagonal; the diagonal absorbs the residual mass.
KernelMatrix metropolized_neighborhood_kernel(const NeighborhoodSystem& sys);

// Left fixed probability vector by power iteration; requires an irreducible
// aperiodic kernel (checked, StructureError otherwise).
Eigen::VectorXd stationary_distribution(const KernelMatrix& kernel);

struct PitfallReport {
  Eigen::VectorXd sigma_formula;    // pi(N_x) pi(x) / z
  Eigen::VectorXd sigma_empirical;  // power iteration on K
  double formula_error = 0.0;       // || empirical - formula ||_1
  double bias = 0.0;                // || empirical - pi ||_1
  bool pi_neighborhood_constant = false;
  double metropolized_error = 0.0;  // || stationary(M) - pi ||_1
};

PitfallReport verify_pitfall(const NeighborhoodSystem& sys);

// The 3-path demo: uniform pi, closed 1-ball neighborhoods.
NeighborhoodSystem path3_demo();

// Random connected system with a triangle (so both K and M are aperiodic);
// with_self_loops controls whether x in N_x.
NeighborhoodSystem random_system(int n, bool with_self_loops, Rng& rng);

}  // namespace manifold
