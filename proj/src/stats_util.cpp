#include "manifold/stats_util.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace manifold {

namespace {

// Series expansion of P(a,x), valid for x < a+1.
double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int i = 0; i < 500; ++i) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Continued fraction for Q(a,x), valid for x >= a+1 (modified Lentz).
double gamma_q_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-16) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double gamma_p(double a, double x) {
  if (!(a > 0.0) || x < 0.0) throw InputError("gamma_p: need a > 0, x >= 0");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return gamma_p_series(a, x);
  return 1.0 - gamma_q_cf(a, x);
}

double gamma_q(double a, double x) {
  if (!(a > 0.0) || x < 0.0) throw InputError("gamma_q: need a > 0, x >= 0");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_cf(a, x);
}

double chi_square_cdf(double x, double df) {
  if (x <= 0.0) return 0.0;
  return gamma_p(df / 2.0, x / 2.0);
}

double chi_square_quantile(double p, double df) {
  if (!(p >= 0.0 && p < 1.0)) throw InputError("chi_square_quantile: p in [0,1)");
  if (p == 0.0) return 0.0;
  double lo = 0.0, hi = df;
  while (chi_square_cdf(hi, df) < p) hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (chi_square_cdf(mid, df) < p)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

double kolmogorov_tail(double lambda) {
  if (lambda <= 0.0) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = 2.0 * std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1) ? term : -term;
    if (term < 1e-16) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

double digamma(double x) {
  if (!(x > 0.0)) throw InputError("digamma: x must be positive");
  double result = 0.0;
  while (x < 10.0) {
    result -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // asymptotic series
  result += std::log(x) - 0.5 * inv -
            inv2 * (1.0 / 12.0 -
                    inv2 * (1.0 / 120.0 -
                            inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0 - inv2 / 132.0))));
  return result;
}

GammaFit fit_gamma_mle(double mean, double mean_log) {
  if (!(mean > 0.0)) throw InputError("fit_gamma_mle: mean must be positive");
  const double s = std::log(mean) - mean_log;  // >= 0 by AM-GM, = 0 iff constant data
  if (!(s > 0.0)) throw DegeneracyError("fit_gamma_mle: constant sample");
  // log(a) - digamma(a) is strictly decreasing from +inf to 0; bisect.
  double lo = 1e-9, hi = 1.0;
  auto h = [&](double a) { return std::log(a) - digamma(a) - s; };
  while (h(hi) > 0.0 && hi < 1e12) hi *= 2.0;
  while (h(lo) < 0.0 && lo > 1e-300) lo *= 0.5;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (h(mid) > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  GammaFit fit;
  fit.shape = 0.5 * (lo + hi);
  fit.scale = mean / fit.shape;
  return fit;
}

double gamma_cdf(double x, const GammaFit& fit) {
  if (x <= 0.0) return 0.0;
  return gamma_p(fit.shape, x / fit.scale);
}

double anderson_darling(std::vector<double> sample, const std::function<double(double)>& cdf) {
  if (sample.empty()) throw InputError("anderson_darling: empty sample");
  std::sort(sample.begin(), sample.end());
  const std::size_t n = sample.size();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = std::clamp(cdf(sample[i]), 1e-12, 1.0 - 1e-12);
    const double v = std::clamp(cdf(sample[n - 1 - i]), 1e-12, 1.0 - 1e-12);
    acc += (2.0 * (i + 1) - 1.0) * (std::log(u) + std::log1p(-v));
  }
  return -static_cast<double>(n) - acc / static_cast<double>(n);
}

namespace {

double simpson(double a, double b, double fa, double fm, double fb) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double fa,
                        double fm, double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = simpson(a, m, fa, flm, fm);
  const double right = simpson(m, b, fm, frm, fb);
  if (depth <= 0) return left + right;
  if (std::fabs(left + right - whole) <= 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return adaptive_simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  return adaptive_simpson(f, a, b, fa, fm, fb, simpson(a, b, fa, fm, fb), tol, 50);
}

double legendre5_orthonormal(double x) {
  const double u = 2.0 * x - 1.0;
  const double u2 = u * u;
  const double p5 = u * (15.0 + u2 * (-70.0 + 63.0 * u2)) / 8.0;
  return 3.3166247903553998 * p5;  // sqrt(11)
}

}  // namespace manifold
