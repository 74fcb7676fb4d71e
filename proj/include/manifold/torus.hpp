#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "manifold/common.hpp"
#include "manifold/core_geometry.hpp"

namespace manifold {

struct TorusParams {
  double major_radius = 1.0;  // R
  double minor_radius = 0.5;  // r

  void validate() const {
    if (!(major_radius > minor_radius && minor_radius > 0.0))
      throw InputError("TorusParams: need R > r > 0");
  }
  double ratio() const { return minor_radius / major_radius; }
};

enum class TorusMethod { Area, Naive };

inline const char* to_string(TorusMethod m) { return m == TorusMethod::Area ? "area" : "naive"; }

struct TorusSample {
  double theta = 0.0;  // [0, 2pi)
  double psi = 0.0;    // [0, 2pi)
  std::array<double, 3> point{};
  TorusMethod method = TorusMethod::Area;
};

// Rejection envelope for the theta marginal. Loose: constant box of height
// 1/pi, accepting exactly half of all proposals at any radius ratio. Tight:
// box at the density maximum (1 + r/R)/(2pi).
enum class TorusEnvelope { Tight, Loose };

struct RejectionStats {
  std::uint64_t proposals = 0;
  std::uint64_t acceptances = 0;
};

std::array<double, 3> torus_embed(double theta, double psi, const TorusParams& params);

// Analytic 3x2 derivative of the embedding; J equals r(R + r cos theta).
DerivativeMatrix torus_derivative(double theta, double psi, const TorusParams& params);

// Marginal density g1(theta) = (1 + (r/R) cos theta) / (2 pi).
double theta_density(double theta, const TorusParams& params);

// Antiderivative of g1 on [0, 2pi]: (theta + (r/R) sin theta) / (2 pi).
double theta_cdf(double theta, const TorusParams& params);

std::vector<TorusSample> sample_torus_area(std::int64_t n, const TorusParams& params,
                                           TorusEnvelope envelope, Rng& rng,
                                           RejectionStats* stats = nullptr);

std::vector<TorusSample> sample_torus_naive(std::int64_t n, const TorusParams& params, Rng& rng);

// Jacobian of the slice map Phi(theta, psi) = (R + r cos theta) cos psi;
// on the x = 0 fiber it reduces to R + r cos theta.
JacobianValue slice_jacobian(double theta, double psi, const TorusParams& params);

// Conditional distribution on the slice x = 0 (two branches psi = pi/2,
// 3pi/2). The unnormalized conditional p/JPhi is constant in theta and the
// branches carry equal mass.
struct SliceCheckReport {
  double max_relative_deviation = 0.0;
  std::array<double, 2> branch_mass{};
};

SliceCheckReport conditional_slice_check(const TorusParams& params, int grid);

}  // namespace manifold
