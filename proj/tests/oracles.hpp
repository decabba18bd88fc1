#pragma once

// Independent reference computations used by the tests. None of these share
// code with the library paths they check.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace oracle {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Minimizer of a unimodal function on [a, b].
inline double golden_section(const std::function<double(double)>& f, double a, double b,
                             double tol = 1e-12) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - g * (b - a);
  double d = a + g * (b - a);
  double fc = f(c);
  double fd = f(d);
  for (int it = 0; it < 400 && (b - a) > tol * (1.0 + std::abs(a) + std::abs(b)); ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

/// argmin_s gamma*phi(s - w0) + (s - x)^2 / 2 for a convex, even phi.
inline double scalar_prox(const std::function<double(double)>& phi, double gamma, double w0,
                          double x) {
  const double lo = std::min(x, w0) - 1.0;
  const double hi = std::max(x, w0) + 1.0;
  return golden_section([&](double s) { return gamma * phi(s - w0) + 0.5 * (s - x) * (s - x); },
                        lo, hi);
}

inline Vec separable_prox(const std::function<double(double)>& phi, double gamma, const Vec& w0,
                          const Vec& x) {
  Vec p(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) p(i) = scalar_prox(phi, gamma, w0(i), x(i));
  return p;
}

/// Root of h(lambda) = target for a nondecreasing h, by bisection.
inline double bisect_increasing(const std::function<double(double)>& h, double target) {
  double lo = -1.0;
  double hi = 1.0;
  while (h(lo) > target) lo *= 2.0;
  while (h(hi) < target) hi *= 2.0;
  for (int it = 0; it < 300; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    (h(mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Simplex projection through the KKT multiplier: p_i = max(x_i - lambda, 0)
/// with sum p = 1.
inline Vec simplex_projection(const Vec& x) {
  const auto mass = [&](double lambda) { return (x.array() - lambda).max(0.0).sum(); };
  // mass is nonincreasing in lambda, so bisect on -lambda
  const double lambda = -bisect_increasing([&](double m) { return mass(-m); }, 1.0);
  return (x.array() - lambda).max(0.0).matrix();
}

/// (I + gamma (2 S + delta I)) p = x + gamma r by dense LU.
inline Vec quadratic_prox(double gamma, const Mat& s, const Vec& r, double delta, const Vec& x) {
  const Eigen::Index n = x.size();
  const Mat sys = Mat::Identity(n, n) + gamma * (2.0 * s + delta * Mat::Identity(n, n));
  return sys.fullPivLu().solve(x + gamma * r);
}

inline Vec random_vec(std::mt19937_64& rng, Eigen::Index n, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = normal(rng);
  return v;
}

inline Mat random_mat(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Mat m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = normal(rng);
  }
  return m;
}

/// G G^T with G of size d x rank.
inline Mat random_psd(std::mt19937_64& rng, Eigen::Index d, Eigen::Index rank) {
  const Mat g = random_mat(rng, d, rank);
  return g * g.transpose();
}

/// S + K with S PSD and K skew: monotone but not symmetric.
inline Mat random_monotone(std::mt19937_64& rng, Eigen::Index d, double shift = 0.0) {
  const Mat k = random_mat(rng, d, d, 0.5);
  return random_psd(rng, d, d) / static_cast<double>(d) + 0.5 * (k - k.transpose()) +
         shift * Mat::Identity(d, d);
}

/// A random point of the simplex (normalized exponentials).
inline Vec random_simplex_point(std::mt19937_64& rng, Eigen::Index n) {
  std::exponential_distribution<double> e(1.0);
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = e(rng);
  return v / v.sum();
}

}  // namespace oracle
