#pragma once

// Finite-dimensional product spaces H^m, positive semi-definite
// preconditioners and their factorization M = C C^T.

#include <Eigen/Dense>

#include <cstddef>
#include <initializer_list>
#include <vector>

namespace proxsplit {

using Index = Eigen::Index;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Sizes of the blocks of a product space, e.g. {n, n, n} for (x0, v, x1).
class BlockLayout {
 public:
  BlockLayout() = default;
  explicit BlockLayout(std::vector<Index> sizes);
  BlockLayout(std::initializer_list<Index> sizes)
      : BlockLayout(std::vector<Index>(sizes)) {}

  /// `count` blocks of size `n` each.
  static BlockLayout uniform(std::size_t count, Index n);

  std::size_t num_blocks() const noexcept { return sizes_.size(); }
  Index size(std::size_t i) const { return sizes_.at(i); }
  Index offset(std::size_t i) const { return offsets_.at(i); }
  Index total_dim() const noexcept { return total_; }
  const std::vector<Index>& sizes() const noexcept { return sizes_; }

  friend bool operator==(const BlockLayout& a, const BlockLayout& b) {
    return a.sizes_ == b.sizes_;
  }

 private:
  std::vector<Index> sizes_;
  std::vector<Index> offsets_;
  Index total_ = 0;
};

/// An element u = (u_0, ..., u_{m-1}) of a product space, stored contiguously.
class BlockVector {
 public:
  BlockVector() = default;
  explicit BlockVector(BlockLayout layout);
  BlockVector(BlockLayout layout, Vec data);

  static BlockVector from_blocks(const std::vector<Vec>& blocks);

  const BlockLayout& layout() const noexcept { return layout_; }
  Index total_dim() const noexcept { return data_.size(); }
  std::size_t num_blocks() const noexcept { return layout_.num_blocks(); }

  auto block(std::size_t i) { return data_.segment(layout_.offset(i), layout_.size(i)); }
  auto block(std::size_t i) const {
    return data_.segment(layout_.offset(i), layout_.size(i));
  }

  const Vec& data() const noexcept { return data_; }
  Vec& data() noexcept { return data_; }

  double norm() const { return data_.norm(); }

  BlockVector& operator+=(const BlockVector& other);
  BlockVector& operator-=(const BlockVector& other);
  BlockVector& operator*=(double s);

  friend BlockVector operator+(BlockVector a, const BlockVector& b) { return a += b; }
  friend BlockVector operator-(BlockVector a, const BlockVector& b) { return a -= b; }
  friend BlockVector operator*(double s, BlockVector a) { return a *= s; }
  friend BlockVector operator*(BlockVector a, double s) { return a *= s; }

 private:
  BlockLayout layout_;
  Vec data_;
};

/// Throws DimensionMismatch unless both vectors share the same block structure.
void require_same_layout(const BlockVector& a, const BlockVector& b);

/// Symmetric positive semi-definite linear operator on a product space.
class Preconditioner {
 public:
  /// Validates symmetry (1e-12 relative) and semi-definiteness
  /// (smallest eigenvalue >= -psd_tol * largest).
  Preconditioner(Mat matrix, BlockLayout layout, double psd_tol = 1e-10);

  const Mat& matrix() const noexcept { return matrix_; }
  const BlockLayout& layout() const noexcept { return layout_; }
  Index dim() const noexcept { return matrix_.rows(); }

  BlockVector apply(const BlockVector& u) const;

 private:
  Mat matrix_;
  BlockLayout layout_;
};

/// M = C C^T with C injective (d x rank). C is only defined up to an
/// orthogonal right factor, so callers should rely on C C^T and C^T u only.
class Factorization {
 public:
  /// Installs a known C; checks full column rank.
  static Factorization from_c(Mat c, BlockLayout layout, double tol = 1e-10);

  const Mat& c_matrix() const noexcept { return c_; }
  Index rank() const noexcept { return c_.cols(); }
  Index dim() const noexcept { return c_.rows(); }
  const BlockLayout& layout() const noexcept { return layout_; }

  /// C^T u; its Euclidean norm equals the M-seminorm of u.
  Vec apply_cstar(const BlockVector& u) const;
  /// C w.
  BlockVector apply_c(const Vec& w) const;

  /// Least-squares solve of C w = u (exact when u lies in Im C).
  Vec solve_c(const BlockVector& u) const;
  /// Minimum-norm u with C^T u = w.
  BlockVector lift(const Vec& w) const;

 private:
  Factorization(Mat c, BlockLayout layout);

  Mat c_;
  BlockLayout layout_;
  Eigen::ColPivHouseholderQR<Mat> pinv_;
};

/// Rank-revealing factorization through the symmetric eigendecomposition;
/// eigenvalues below tol * lambda_max are dropped and C = V diag(sqrt(lambda)).
Factorization factor_psd(const Preconditioner& m, double tol = 1e-10);

/// Same checks as the Preconditioner constructor, on a bare matrix.
void validate_psd(const Mat& m, double psd_tol = 1e-10);

double m_inner(const Preconditioner& m, const BlockVector& u, const BlockVector& v);
double m_seminorm(const Preconditioner& m, const BlockVector& u);

}  // namespace proxsplit
