#pragma once

// Reference implementations used only by tests. Each is computed by a route
// independent of the library code it checks.

#include <cmath>
#include <functional>

#include <Eigen/Dense>

namespace oracle {

inline double normal_pdf(double t) { return std::exp(-0.5 * t * t) / std::sqrt(2.0 * M_PI); }

namespace detail {
inline double simpson(const std::function<double(double)>& f, double a, double b, double fa,
                      double fm, double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol) {
    return left + right + (left + right - whole) / 15.0;
  }
  return simpson(f, a, m, fa, flm, fm, left, tol / 2, depth - 1) +
         simpson(f, m, b, fm, frm, fb, right, tol / 2, depth - 1);
}
}  // namespace detail

/// Adaptive Simpson quadrature of f over [a, b].
inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-13) {
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return detail::simpson(f, a, b, fa, fm, fb, whole, tol, 50);
}

/// Standard normal CDF by integrating the density from 0.
inline double phi_cdf(double z) {
  const double half = integrate(normal_pdf, 0.0, std::abs(z));
  return z >= 0 ? 0.5 + half : 0.5 - half;
}

/// Binomial standard error of an estimated probability.
inline double binomial_se(double p, double n) { return std::sqrt(p * (1.0 - p) / n); }

/// Adversarial error of y * (w.x + b) under an l_inf attack of radius eps when
/// x ~ N(y * mu, sigma^2 I): the margin is Gaussian with mean w.mu*y + b*y -
/// eps*|w|_1 and standard deviation sigma*|w|_2, averaged over both labels.
inline double linear_adv_error(const Eigen::VectorXd& w, double b, const Eigen::VectorXd& mu,
                               double sigma, double eps) {
  const double s = sigma * w.norm();
  double total = 0.0;
  for (int y : {-1, 1}) {
    const double mean = w.dot(mu) + y * b - eps * w.lpNorm<1>();
    total += 0.5 * phi_cdf(-mean / s);
  }
  return total;
}

/// Relative error between two gradient vectors, guarded near zero.
inline double relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).norm() / std::max({a.norm(), b.norm(), 1e-8});
}

inline double logistic_loss(double margin) {
  return margin > 0 ? std::log1p(std::exp(-margin)) : -margin + std::log1p(std::exp(margin));
}

}  // namespace oracle
