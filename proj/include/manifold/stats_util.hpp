#pragma once

#include <functional>
#include <vector>

#include "manifold/common.hpp"

namespace manifold {

// Regularized incomplete gamma functions P(a,x) and Q(a,x) = 1 - P(a,x).
double gamma_p(double a, double x);
double gamma_q(double a, double x);

double chi_square_cdf(double x, double df);
// Inverse CDF by bisection on chi_square_cdf.
double chi_square_quantile(double p, double df);

// Kolmogorov limiting tail Q(lambda) = 2 sum (-1)^{k-1} exp(-2 k^2 lambda^2).
double kolmogorov_tail(double lambda);

double digamma(double x);

// Shape/scale maximum-likelihood fit; depends on the data only through
// mean and mean-log (equivalently sum and product).
struct GammaFit {
  double shape = 0.0;
  double scale = 0.0;
};
GammaFit fit_gamma_mle(double mean, double mean_log);

// Regularized lower incomplete gamma of the fitted distribution.
double gamma_cdf(double x, const GammaFit& fit);

// Anderson-Darling distance of a sample to a fully specified CDF.
double anderson_darling(std::vector<double> sample, const std::function<double(double)>& cdf);

// Adaptive Simpson on [a,b] to absolute tolerance tol.
double integrate(const std::function<double(double)>& f, double a, double b, double tol);

// Orthonormal shifted Legendre polynomial of degree 5 on [0,1].
double legendre5_orthonormal(double x);

}  // namespace manifold
