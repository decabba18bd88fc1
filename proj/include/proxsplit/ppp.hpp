#pragma once

// Degenerate preconditioned proximal point (PPP) iteration
//
//   u^{k+1} = u^k + lambda_k (T u^k - u^k),   T = (M + A)^{-1} M,
//
// and its reduced form on w = C^T u when M = C C^T.
//
// (M + A) must be block lower-triangular with diagonal blocks of the form
// c_i I + s_i A_i (or c_i I + (s_i B_i)^{-1}); T is then evaluated by
// forward substitution using only resolvents of the A_i.

#include "proxsplit/operators.hpp"
#include "proxsplit/spaces.hpp"
#include "proxsplit/trace.hpp"

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace proxsplit {

/// Solver for one diagonal block: returns y with  shift*y + Op(y) ∋ r.
struct DiagonalSolve {
  std::string name;
  std::function<Vec(const Vec& r)> solve;
};

/// shift*I + step*A.
DiagonalSolve shifted_resolvent(double shift, double step, OperatorBlock a);
/// shift*I + (step*B)^{-1}.
DiagonalSolve shifted_inverse_resolvent(double shift, double step, OperatorBlock b);
/// shift*I with no operator part.
DiagonalSolve shifted_identity(double shift);

/// Strictly lower entry (row, col) of M + A, a (possibly nonlinear) map
/// applied to the already computed block `col`.
struct Coupling {
  std::size_t row = 0;
  std::size_t col = 0;
  std::function<Vec(const Vec&)> apply;
};

Coupling scalar_coupling(std::size_t row, std::size_t col, double c);
Coupling matrix_coupling(std::size_t row, std::size_t col, Mat k);
/// x -> c x + s F(x) for a single-valued operator F.
Coupling forward_coupling(std::size_t row, std::size_t col, double c, double s,
                          OperatorBlock f);

/// The pair (M, A) through M itself and the lower-triangular structure of M + A.
class BlockAssembly {
 public:
  BlockAssembly(Preconditioner m, std::vector<DiagonalSolve> diagonal,
                std::vector<Coupling> lower);

  const Preconditioner& preconditioner() const noexcept { return m_; }
  const BlockLayout& layout() const noexcept { return m_.layout(); }
  std::size_t num_blocks() const noexcept { return diagonal_.size(); }

  /// (M + A)^{-1} rhs by block forward substitution.
  BlockVector solve(const BlockVector& rhs) const;

 private:
  Preconditioner m_;
  std::vector<DiagonalSolve> diagonal_;
  std::vector<std::vector<Coupling>> lower_by_row_;
};

/// T u = (M + A)^{-1} M u.
BlockVector evaluate_T(const BlockAssembly& assembly, const BlockVector& u);

/// T~ w = C^T (M + A)^{-1} C w.
Vec evaluate_Ttilde(const BlockAssembly& assembly, const Factorization& factor, const Vec& w);

/// Relaxation parameters lambda_k (or theta_k for the rescaled schemes).
class RelaxationSchedule {
 public:
  enum class Kind { Constant, Sequence };

  static RelaxationSchedule constant(double value);
  /// Values are used in order; the last value repeats afterwards.
  static RelaxationSchedule sequence(std::vector<double> values,
                                     bool divergence_declared = false);

  Kind kind() const noexcept { return kind_; }
  double at(std::size_t k) const;
  const std::vector<double>& values() const noexcept { return values_; }
  bool divergence_declared() const noexcept { return divergence_declared_; }

  /// Every value mapped through value -> scale * value.
  RelaxationSchedule scaled(double scale) const;

  /// Throws ThetaOutOfRange unless all values lie in [0, upper].
  void require_within(double upper) const;

 private:
  Kind kind_ = Kind::Constant;
  std::vector<double> values_{1.0};
  bool divergence_declared_ = false;
};

struct StoppingRule {
  double tol = 1e-8;
  /// Stop when |Tu - u| <= tol * (1 + |u|); absolute tolerance otherwise.
  bool relative = true;
  std::size_t max_iters = 100000;

  bool satisfied(double residual, double iterate_norm) const noexcept {
    return residual <= (relative ? tol * (1.0 + iterate_norm) : tol);
  }
};

struct IterateOptions {
  StoppingRule stop;
  bool keep_iterates = false;
  /// Reference point for the dist_ref column (same space as the iterates).
  std::optional<Vec> reference;
};

/// What one Krasnosel'skii-Mann step needs to know about x^k.
struct KmStep {
  Vec displacement;  // T x - x
  double m_norm = 0.0;
  double dist_ref = std::numeric_limits<double>::quiet_NaN();
};

/// x^{k+1} = x^k + lambda_k d(x^k), recording each step until the stopping
/// rule holds or max_iters steps were taken.
IterationTrace km_iterate(const Vec& x0, const RelaxationSchedule& schedule,
                          const IterateOptions& options,
                          const std::function<KmStep(const Vec&)>& step);

/// PPP: u^{k+1} = u^k + lambda_k (T u^k - u^k); lambda_k must lie in [0, 2].
IterationTrace ppp_iterate(const BlockAssembly& assembly, const BlockVector& u0,
                           const RelaxationSchedule& schedule, const IterateOptions& options);

/// Reduced PPP: w^{k+1} = w^k + lambda_k (T~ w^k - w^k).
IterationTrace rppp_iterate(const BlockAssembly& assembly, const Factorization& factor,
                            const Vec& w0, const RelaxationSchedule& schedule,
                            const IterateOptions& options);

// --- runtime invariant monitors -------------------------------------------

struct CheckReport {
  std::string property;
  std::size_t samples = 0;
  std::size_t violations = 0;
  /// Largest observed (lhs - rhs) of the checked inequality lhs <= rhs.
  double worst_excess = -std::numeric_limits<double>::infinity();

  bool passed() const noexcept { return violations == 0; }
  void record(double excess, double slack);
  std::string summary() const;
};

/// |u^{k+1} - u_ref|_M <= |u^k - u_ref|_M + slack for all k, plus the
/// M-residual being nonincreasing (valid for constant relaxation).
struct FejerReport {
  CheckReport fejer;
  CheckReport residual_decrease;
  bool passed() const noexcept { return fejer.passed() && residual_decrease.passed(); }
};

FejerReport monitor_fejer(const IterationTrace& trace, const Preconditioner& m,
                          const BlockVector& u_ref, double slack = 1e-10);

/// |Tu-Tu'|_M^2 + |(I-T)u-(I-T)u'|_M^2 <= |u-u'|_M^2 + slack on random pairs.
CheckReport check_firm_nonexpansive(const BlockAssembly& assembly, std::mt19937_64& rng,
                                    std::size_t samples, double scale = 1.0,
                                    double slack = 1e-9);

/// <M(u - Tu) - M(u' - Tu'), Tu - Tu'> >= -slack on random pairs.
CheckReport check_graph_monotone(const BlockAssembly& assembly, std::mt19937_64& rng,
                                 std::size_t samples, double scale = 1.0,
                                 double slack = 1e-9);

/// Max elementwise gap between (I + C^T A^{-1} C)^{-1} and
/// I - C^T (C C^T + A)^{-1} C, as dense matrices and on random probes.
/// A must be an invertible monotone matrix.
double check_woodbury(const Mat& a, const Mat& c, std::mt19937_64& rng, std::size_t probes = 8);

/// Standard normal block vector scaled by `scale`.
BlockVector random_block_vector(const BlockLayout& layout, std::mt19937_64& rng,
                                double scale = 1.0);

}  // namespace proxsplit
