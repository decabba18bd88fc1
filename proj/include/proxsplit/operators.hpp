#pragma once

// Monotone operators exposed through their resolvents (and forward maps when
// single-valued), plus the proximal catalog used by the portfolio problem.

#include "proxsplit/spaces.hpp"

#include <functional>
#include <optional>
#include <string>

namespace proxsplit {

/// Resolvent J_{step*A}(x) = (I + step*A)^{-1} x, for any step > 0.
using ResolventFn = std::function<Vec(double step, const Vec& x)>;
using ForwardFn = std::function<Vec(const Vec& x)>;

/// A maximal monotone operator A on R^n.
///
/// Set-valued operators are only reachable through `resolve`; a graph point
/// is (J(z), (z - J(z)) / step). `forward` is populated for single-valued
/// operators with full domain. Regularity metadata is advisory: `mu` is the
/// strong monotonicity modulus, `beta` means A is 1/beta-cocoercive.
struct OperatorBlock {
  std::string name;
  ResolventFn resolvent;
  ForwardFn forward;
  std::optional<double> mu;
  std::optional<double> beta;
  std::optional<double> lipschitz;

  /// J_{step*A}(x); throws NonPositiveStep unless step > 0.
  Vec resolve(double step, const Vec& x) const;
  /// A(x); throws MissingOperator for set-valued blocks.
  Vec apply(const Vec& x) const;
  bool has_forward() const noexcept { return static_cast<bool>(forward); }
};

// --- closed-form proximal maps --------------------------------------------

/// prox of gamma * sum_i |x_i - w0_i| (shifted soft-thresholding).
Vec prox_l1_shifted(double gamma, const Vec& w0, const Vec& x);

/// prox of gamma * sum_i |x_i - w0_i|^{3/2}.
Vec prox_pow32(double gamma, const Vec& w0, const Vec& x);

/// prox of gamma * sum_i (|x_i - w0_i| + |x_i - w0_i|^{3/2}).
///
/// For an even convex penalty phi with phi'(0) = 0 the prox of
/// phi + gamma|.| is prox_phi after soft-thresholding.
Vec prox_transaction_cost(double gamma, const Vec& w0, const Vec& x);

/// Euclidean projection onto the standard simplex {p >= 0, sum p = 1}.
Vec project_simplex(const Vec& x);

/// f(w) = w^T S w - r^T w + (delta/2)|w|^2 with S symmetric PSD.
///
/// The eigendecomposition of S is computed once, so every prox step size
/// reuses it.
class QuadraticFunction {
 public:
  QuadraticFunction(Mat sigma, Vec r, double delta);

  Index dim() const noexcept { return r_.size(); }
  const Mat& sigma() const noexcept { return sigma_; }
  const Vec& r() const noexcept { return r_; }
  double delta() const noexcept { return delta_; }

  double value(const Vec& w) const;
  Vec gradient(const Vec& w) const;
  /// Solves (I + gamma(2S + delta I)) p = x + gamma r.
  Vec prox(double gamma, const Vec& x) const;

  double lambda_max() const noexcept { return eigvals_.size() ? eigvals_.maxCoeff() : 0.0; }
  double lambda_min() const noexcept { return eigvals_.size() ? eigvals_.minCoeff() : 0.0; }
  /// Lipschitz constant of the gradient, 2 lambda_max(S) + delta.
  double lipschitz() const noexcept { return 2.0 * lambda_max() + delta_; }
  /// Strong convexity modulus, 2 lambda_min(S) + delta.
  double strong_convexity() const noexcept { return 2.0 * lambda_min() + delta_; }

 private:
  Mat sigma_;
  Vec r_;
  double delta_;
  Mat eigvecs_;
  Vec eigvals_;
};

Vec prox_quadratic(double gamma, const Mat& sigma, const Vec& r, double delta, const Vec& x);
Vec grad_quadratic(const Mat& sigma, const Vec& r, double delta, const Vec& x);

/// J_{sigma B^{-1}}(x) = x - sigma J_{B/sigma}(x / sigma).
Vec resolvent_of_inverse(double sigma, const OperatorBlock& b, const Vec& x);

// --- catalog ---------------------------------------------------------------

OperatorBlock zero_operator();
/// A = c I with c >= 0.
OperatorBlock scaled_identity(double c);
/// A(x) = K x for a monotone matrix K (x^T K x >= 0).
OperatorBlock linear_operator(const Mat& k);
/// Normal cone of the singleton {a}; the resolvent is constant.
OperatorBlock point_constraint(const Vec& a);
OperatorBlock l1_shifted(const Vec& w0, double weight = 1.0);
OperatorBlock pow32_shifted(const Vec& w0, double weight = 1.0);
OperatorBlock transaction_cost(const Vec& w0);
OperatorBlock simplex_indicator();
/// Subdifferential (= gradient) of f scaled by `scale`.
OperatorBlock quadratic_operator(const QuadraticFunction& f, double scale = 1.0);
/// c * A for c > 0.
OperatorBlock scaled(const OperatorBlock& a, double c);
/// A^{-1}, with resolvents through the Moreau identity.
OperatorBlock inverse(const OperatorBlock& a);

}  // namespace proxsplit
