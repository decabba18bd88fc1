#include "proxsplit/spaces.hpp"

#include "proxsplit/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace proxsplit {

BlockLayout::BlockLayout(std::vector<Index> sizes) : sizes_(std::move(sizes)) {
  offsets_.reserve(sizes_.size());
  for (Index s : sizes_) {
    if (s < 0) throw Error(Errc::DimensionMismatch, "negative block size");
    offsets_.push_back(total_);
    total_ += s;
  }
}

BlockLayout BlockLayout::uniform(std::size_t count, Index n) {
  return BlockLayout(std::vector<Index>(count, n));
}

BlockVector::BlockVector(BlockLayout layout)
    : layout_(std::move(layout)), data_(Vec::Zero(layout_.total_dim())) {}

BlockVector::BlockVector(BlockLayout layout, Vec data)
    : layout_(std::move(layout)), data_(std::move(data)) {
  if (data_.size() != layout_.total_dim()) {
    throw Error(Errc::DimensionMismatch,
                "data length " + std::to_string(data_.size()) + " != layout total " +
                    std::to_string(layout_.total_dim()));
  }
}

BlockVector BlockVector::from_blocks(const std::vector<Vec>& blocks) {
  std::vector<Index> sizes;
  sizes.reserve(blocks.size());
  for (const auto& b : blocks) sizes.push_back(b.size());
  BlockVector out{BlockLayout(std::move(sizes))};
  for (std::size_t i = 0; i < blocks.size(); ++i) out.block(i) = blocks[i];
  return out;
}

void require_same_layout(const BlockVector& a, const BlockVector& b) {
  if (!(a.layout() == b.layout())) {
    throw Error(Errc::DimensionMismatch, "block layouts differ");
  }
}

BlockVector& BlockVector::operator+=(const BlockVector& other) {
  require_same_layout(*this, other);
  data_ += other.data_;
  return *this;
}

BlockVector& BlockVector::operator-=(const BlockVector& other) {
  require_same_layout(*this, other);
  data_ -= other.data_;
  return *this;
}

BlockVector& BlockVector::operator*=(double s) {
  data_ *= s;
  return *this;
}

void validate_psd(const Mat& m, double psd_tol) {
  if (m.rows() != m.cols()) throw Error(Errc::DimensionMismatch, "matrix is not square");
  if (m.size() == 0) return;
  const double scale = std::max(m.cwiseAbs().maxCoeff(), 1e-300);
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * scale) {
    throw Error(Errc::NotSymmetric, "max |M - M^T| = " + std::to_string(asym));
  }
  Eigen::SelfAdjointEigenSolver<Mat> eig(m, Eigen::EigenvaluesOnly);
  const double lmin = eig.eigenvalues().minCoeff();
  const double lmax = eig.eigenvalues().maxCoeff();
  if (lmin < -psd_tol * std::max(lmax, 0.0)) {
    throw Error(Errc::NotPSD, "smallest eigenvalue " + std::to_string(lmin));
  }
}

Preconditioner::Preconditioner(Mat matrix, BlockLayout layout, double psd_tol)
    : matrix_(std::move(matrix)), layout_(std::move(layout)) {
  if (matrix_.rows() != layout_.total_dim()) {
    throw Error(Errc::DimensionMismatch, "preconditioner size does not match layout");
  }
  validate_psd(matrix_, psd_tol);
}

BlockVector Preconditioner::apply(const BlockVector& u) const {
  if (!(u.layout() == layout_)) throw Error(Errc::DimensionMismatch, "layout mismatch");
  return BlockVector(layout_, matrix_ * u.data());
}

Factorization::Factorization(Mat c, BlockLayout layout)
    : c_(std::move(c)), layout_(std::move(layout)) {
  if (c_.cols() > 0) pinv_.compute(c_);
}

Factorization Factorization::from_c(Mat c, BlockLayout layout, double tol) {
  if (c.rows() != layout.total_dim()) {
    throw Error(Errc::DimensionMismatch, "C rows do not match layout");
  }
  if (c.cols() > c.rows()) throw Error(Errc::RankDeficient, "C has more columns than rows");
  if (c.cols() > 0) {
    Eigen::JacobiSVD<Mat> svd(c);
    const auto& s = svd.singularValues();
    if (s.minCoeff() <= tol * s.maxCoeff() || s.minCoeff() == 0.0) {
      throw Error(Errc::RankDeficient, "C is not injective");
    }
  }
  return Factorization(std::move(c), std::move(layout));
}

Vec Factorization::apply_cstar(const BlockVector& u) const {
  if (!(u.layout() == layout_)) throw Error(Errc::DimensionMismatch, "layout mismatch");
  return c_.transpose() * u.data();
}

BlockVector Factorization::apply_c(const Vec& w) const {
  if (w.size() != c_.cols()) {
    throw Error(Errc::DimensionMismatch, "reduced vector has length " +
                                             std::to_string(w.size()) + ", expected " +
                                             std::to_string(c_.cols()));
  }
  return BlockVector(layout_, c_ * w);
}

Vec Factorization::solve_c(const BlockVector& u) const {
  if (!(u.layout() == layout_)) throw Error(Errc::DimensionMismatch, "layout mismatch");
  if (c_.cols() == 0) return Vec(0);
  return pinv_.solve(u.data());
}

BlockVector Factorization::lift(const Vec& w) const {
  if (w.size() != c_.cols()) throw Error(Errc::DimensionMismatch, "reduced vector length");
  if (c_.cols() == 0) return BlockVector(layout_);
  const Mat gram = c_.transpose() * c_;
  return BlockVector(layout_, c_ * gram.ldlt().solve(w));
}

Factorization factor_psd(const Preconditioner& m, double tol) {
  validate_psd(m.matrix(), tol);
  const Index d = m.dim();
  if (d == 0) return Factorization::from_c(Mat(0, 0), m.layout(), tol);
  Eigen::SelfAdjointEigenSolver<Mat> eig(m.matrix());
  const Vec& lambda = eig.eigenvalues();  // ascending
  const double lmax = lambda.maxCoeff();
  Index rank = 0;
  if (lmax > 0.0) {
    for (Index i = 0; i < d; ++i) {
      if (lambda(i) > tol * lmax) ++rank;
    }
  }
  Mat c(d, rank);
  // keep the largest eigenpairs, largest first
  for (Index j = 0; j < rank; ++j) {
    const Index src = d - 1 - j;
    c.col(j) = eig.eigenvectors().col(src) * std::sqrt(lambda(src));
  }
  return Factorization::from_c(std::move(c), m.layout(), 0.0);
}

double m_inner(const Preconditioner& m, const BlockVector& u, const BlockVector& v) {
  if (!(u.layout() == m.layout()) || !(v.layout() == m.layout())) {
    throw Error(Errc::DimensionMismatch, "vector layout does not match preconditioner");
  }
  return u.data().dot(m.matrix() * v.data());
}

double m_seminorm(const Preconditioner& m, const BlockVector& u) {
  return std::sqrt(std::max(m_inner(m, u, u), 0.0));
}

}  // namespace proxsplit
