#include "manifold/torus.hpp"

#include <cmath>

namespace manifold {

namespace {

double wrap_angle(double a) {
  a = std::fmod(a, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  return a;
}

}  // namespace

std::array<double, 3> torus_embed(double theta, double psi, const TorusParams& params) {
  params.validate();
  theta = wrap_angle(theta);
  psi = wrap_angle(psi);
  const double ring = params.major_radius + params.minor_radius * std::cos(theta);
  return {ring * std::cos(psi), ring * std::sin(psi), params.minor_radius * std::sin(theta)};
}

DerivativeMatrix torus_derivative(double theta, double psi, const TorusParams& params) {
  params.validate();
  const double r = params.minor_radius;
  const double ring = params.major_radius + r * std::cos(theta);
  DerivativeMatrix d;
  d.entries.resize(3, 2);
  d.entries << -r * std::sin(theta) * std::cos(psi), -ring * std::sin(psi),
      -r * std::sin(theta) * std::sin(psi), ring * std::cos(psi),  //
      r * std::cos(theta), 0.0;
  d.params = ParamAxis::Columns;
  return d;
}

double theta_density(double theta, const TorusParams& params) {
  params.validate();
  return (1.0 + params.ratio() * std::cos(theta)) / kTwoPi;
}

double theta_cdf(double theta, const TorusParams& params) {
  params.validate();
  if (theta < 0.0 || theta > kTwoPi) throw InputError("theta_cdf: theta must be in [0, 2pi]");
  return (theta + params.ratio() * std::sin(theta)) / kTwoPi;
}

std::vector<TorusSample> sample_torus_area(std::int64_t n, const TorusParams& params,
                                           TorusEnvelope envelope, Rng& rng,
                                           RejectionStats* stats) {
  params.validate();
  if (n < 1) throw InputError("sample_torus_area: n must be >= 1");
  const double height = envelope == TorusEnvelope::Loose
                            ? 2.0 / kTwoPi  // 1/pi
                            : (1.0 + params.ratio()) / kTwoPi;
  std::vector<TorusSample> out;
  out.reserve(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    // psi first, then the theta rejection loop: one stream, exact replay.
    const double psi = rng.uniform(0.0, kTwoPi);
    double theta;
    for (;;) {
      theta = rng.uniform(0.0, kTwoPi);
      const double u = rng.uniform(0.0, height);
      if (stats) ++stats->proposals;
      if (u < theta_density(theta, params)) {
        if (stats) ++stats->acceptances;
        break;
      }
    }
    out.push_back({theta, psi, torus_embed(theta, psi, params), TorusMethod::Area});
  }
  return out;
}

std::vector<TorusSample> sample_torus_naive(std::int64_t n, const TorusParams& params, Rng& rng) {
  params.validate();
  if (n < 1) throw InputError("sample_torus_naive: n must be >= 1");
  std::vector<TorusSample> out;
  out.reserve(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    const double theta = rng.uniform(0.0, kTwoPi);
    const double psi = rng.uniform(0.0, kTwoPi);
    out.push_back({theta, psi, torus_embed(theta, psi, params), TorusMethod::Naive});
  }
  return out;
}

JacobianValue slice_jacobian(double theta, double psi, const TorusParams& params) {
  params.validate();
  const double r = params.minor_radius;
  const double ring = params.major_radius + r * std::cos(theta);
  DerivativeMatrix dphi;
  dphi.entries.resize(2, 1);
  dphi.entries << -r * std::sin(theta) * std::cos(psi), -ring * std::sin(psi);
  dphi.params = ParamAxis::Rows;
  return gram_jacobian(dphi);
}

SliceCheckReport conditional_slice_check(const TorusParams& params, int grid) {
  params.validate();
  if (grid < 2) throw InputError("conditional_slice_check: grid must be >= 2");

  // Phi(theta, psi) = (R + r cos theta) cos psi; the x = 0 fiber is the pair
  // of lines psi = pi/2 and psi = 3pi/2.
  const std::array<double, 2> branches = {kTwoPi / 4.0, 3.0 * kTwoPi / 4.0};

  double min_val = 0.0, max_val = 0.0;
  std::array<double, 2> mass{};
  bool first = true;
  for (int b = 0; b < 2; ++b) {
    const double psi = branches[b];
    for (int k = 0; k < grid; ++k) {
      const double theta = (k + 0.5) * kTwoPi / grid;
      const JacobianValue j = slice_jacobian(theta, psi, params);
      // joint density on the parameter square, normalized
      const double p = theta_density(theta, params) / kTwoPi;
      const double val = coarea_conditional_unnormalized(p, j);
      mass[b] += val * (kTwoPi / grid);
      if (first) {
        min_val = max_val = val;
        first = false;
      } else {
        min_val = std::min(min_val, val);
        max_val = std::max(max_val, val);
      }
    }
  }

  SliceCheckReport report;
  const double mid = 0.5 * (min_val + max_val);
  report.max_relative_deviation = mid > 0.0 ? (max_val - min_val) / mid : 0.0;
  const double total = mass[0] + mass[1];
  report.branch_mass = {mass[0] / total, mass[1] / total};
  return report;
}

}  // namespace manifold
