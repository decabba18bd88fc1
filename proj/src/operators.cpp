#include "proxsplit/operators.hpp"

#include "proxsplit/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <numeric>
#include <vector>

namespace proxsplit {

namespace {

void require_positive_step(double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw Error(Errc::NonPositiveStep, "step must be positive, got " + std::to_string(gamma));
  }
}

void require_same_dim(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) {
    throw Error(Errc::DimensionMismatch,
                std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
}

double soft(double t, double thr) {
  const double m = std::abs(t) - thr;
  return m > 0.0 ? std::copysign(m, t) : 0.0;
}

// root q >= 0 of q^2 + a q - |t| = 0, written without cancellation
double pow32_root(double a, double abs_t) {
  if (abs_t == 0.0) return 0.0;
  return 2.0 * abs_t / (a + std::sqrt(a * a + 4.0 * abs_t));
}

double pow32_scalar(double gamma, double t) {
  const double q = pow32_root(1.5 * gamma, std::abs(t));
  return std::copysign(q * q, t);
}

}  // namespace

Vec OperatorBlock::resolve(double step, const Vec& x) const {
  require_positive_step(step);
  return resolvent(step, x);
}

Vec OperatorBlock::apply(const Vec& x) const {
  if (!forward) throw Error(Errc::MissingOperator, name + " has no forward evaluation");
  return forward(x);
}

Vec prox_l1_shifted(double gamma, const Vec& w0, const Vec& x) {
  require_positive_step(gamma);
  require_same_dim(w0, x);
  Vec p(x.size());
  for (Index i = 0; i < x.size(); ++i) p(i) = w0(i) + soft(x(i) - w0(i), gamma);
  return p;
}

Vec prox_pow32(double gamma, const Vec& w0, const Vec& x) {
  require_positive_step(gamma);
  require_same_dim(w0, x);
  Vec p(x.size());
  for (Index i = 0; i < x.size(); ++i) p(i) = w0(i) + pow32_scalar(gamma, x(i) - w0(i));
  return p;
}

Vec prox_transaction_cost(double gamma, const Vec& w0, const Vec& x) {
  require_positive_step(gamma);
  require_same_dim(w0, x);
  Vec p(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    p(i) = w0(i) + pow32_scalar(gamma, soft(x(i) - w0(i), gamma));
  }
  return p;
}

Vec project_simplex(const Vec& x) {
  const Index n = x.size();
  if (n == 0) throw Error(Errc::EmptyVector, "cannot project an empty vector onto the simplex");
  std::vector<double> u(x.data(), x.data() + n);
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumsum = 0.0;
  double lambda = 0.0;
  for (Index j = 0; j < n; ++j) {
    cumsum += u[static_cast<std::size_t>(j)];
    const double candidate = (cumsum - 1.0) / static_cast<double>(j + 1);
    if (u[static_cast<std::size_t>(j)] - candidate > 0.0) lambda = candidate;
  }
  return (x.array() - lambda).max(0.0).matrix();
}

QuadraticFunction::QuadraticFunction(Mat sigma, Vec r, double delta)
    : sigma_(std::move(sigma)), r_(std::move(r)), delta_(delta) {
  if (sigma_.rows() != sigma_.cols() || sigma_.rows() != r_.size()) {
    throw Error(Errc::DimensionMismatch, "quadratic term and linear term sizes differ");
  }
  if (delta_ < 0.0) throw Error(Errc::InvalidRegularity, "delta must be >= 0");
  validate_psd(sigma_);
  Eigen::SelfAdjointEigenSolver<Mat> eig(0.5 * (sigma_ + sigma_.transpose()));
  eigvecs_ = eig.eigenvectors();
  eigvals_ = eig.eigenvalues().cwiseMax(0.0);
}

double QuadraticFunction::value(const Vec& w) const {
  require_same_dim(w, r_);
  return w.dot(sigma_ * w) - r_.dot(w) + 0.5 * delta_ * w.squaredNorm();
}

Vec QuadraticFunction::gradient(const Vec& w) const {
  require_same_dim(w, r_);
  return 2.0 * (sigma_ * w) - r_ + delta_ * w;
}

Vec QuadraticFunction::prox(double gamma, const Vec& x) const {
  require_positive_step(gamma);
  require_same_dim(x, r_);
  const Vec rhs = x + gamma * r_;
  const Vec scale =
      (1.0 + gamma * (2.0 * eigvals_.array() + delta_)).inverse().matrix();
  return eigvecs_ * scale.cwiseProduct(eigvecs_.transpose() * rhs);
}

Vec prox_quadratic(double gamma, const Mat& sigma, const Vec& r, double delta, const Vec& x) {
  return QuadraticFunction(sigma, r, delta).prox(gamma, x);
}

Vec grad_quadratic(const Mat& sigma, const Vec& r, double delta, const Vec& x) {
  if (sigma.rows() != x.size() || sigma.cols() != x.size() || r.size() != x.size()) {
    throw Error(Errc::DimensionMismatch, "grad_quadratic operand sizes differ");
  }
  return 2.0 * (sigma * x) - r + delta * x;
}

Vec resolvent_of_inverse(double sigma, const OperatorBlock& b, const Vec& x) {
  require_positive_step(sigma);
  return x - sigma * b.resolve(1.0 / sigma, x / sigma);
}

OperatorBlock zero_operator() {
  OperatorBlock op;
  op.name = "zero";
  op.resolvent = [](double, const Vec& x) { return x; };
  op.forward = [](const Vec& x) { return Vec::Zero(x.size()).eval(); };
  op.mu = 0.0;
  op.beta = 0.0;
  op.lipschitz = 0.0;
  return op;
}

OperatorBlock scaled_identity(double c) {
  if (c < 0.0) throw Error(Errc::InvalidRegularity, "scaled_identity needs c >= 0");
  OperatorBlock op;
  op.name = "identity*" + std::to_string(c);
  op.resolvent = [c](double step, const Vec& x) { return (x / (1.0 + step * c)).eval(); };
  op.forward = [c](const Vec& x) { return (c * x).eval(); };
  op.mu = c;
  op.beta = c;
  op.lipschitz = c;
  return op;
}

OperatorBlock linear_operator(const Mat& k) {
  if (k.rows() != k.cols()) throw Error(Errc::DimensionMismatch, "linear operator must be square");
  const Mat sym = 0.5 * (k + k.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> eig(sym, Eigen::EigenvaluesOnly);
  const double smin = k.size() ? eig.eigenvalues().minCoeff() : 0.0;
  if (smin < -1e-12 * std::max(1.0, k.norm())) {
    throw Error(Errc::InvalidRegularity, "matrix is not monotone");
  }
  OperatorBlock op;
  op.name = "linear";
  auto kp = std::make_shared<const Mat>(k);
  op.resolvent = [kp](double step, const Vec& x) {
    const Mat sys = Mat::Identity(kp->rows(), kp->cols()) + step * *kp;
    return sys.partialPivLu().solve(x).eval();
  };
  op.forward = [kp](const Vec& x) { return (*kp * x).eval(); };
  op.mu = std::max(smin, 0.0);
  const double lip = k.size() ? Eigen::JacobiSVD<Mat>(k).singularValues()(0) : 0.0;
  op.lipschitz = lip;
  if ((k - k.transpose()).cwiseAbs().maxCoeff() <= 1e-14 * std::max(1.0, k.norm())) {
    // symmetric PSD: 1/lambda_max-cocoercive
    op.beta = k.size() ? Eigen::SelfAdjointEigenSolver<Mat>(sym, Eigen::EigenvaluesOnly)
                             .eigenvalues()
                             .maxCoeff()
                       : 0.0;
  }
  return op;
}

OperatorBlock point_constraint(const Vec& a) {
  OperatorBlock op;
  op.name = "point_constraint";
  op.resolvent = [a](double, const Vec& x) {
    require_same_dim(a, x);
    return a;
  };
  return op;
}

OperatorBlock l1_shifted(const Vec& w0, double weight) {
  OperatorBlock op;
  op.name = "l1_shifted";
  op.resolvent = [w0, weight](double step, const Vec& x) {
    return prox_l1_shifted(step * weight, w0, x);
  };
  op.mu = 0.0;
  return op;
}

OperatorBlock pow32_shifted(const Vec& w0, double weight) {
  OperatorBlock op;
  op.name = "pow32_shifted";
  op.resolvent = [w0, weight](double step, const Vec& x) {
    return prox_pow32(step * weight, w0, x);
  };
  op.mu = 0.0;
  return op;
}

OperatorBlock transaction_cost(const Vec& w0) {
  OperatorBlock op;
  op.name = "transaction_cost";
  op.resolvent = [w0](double step, const Vec& x) { return prox_transaction_cost(step, w0, x); };
  op.mu = 0.0;
  return op;
}

OperatorBlock simplex_indicator() {
  OperatorBlock op;
  op.name = "simplex_indicator";
  op.resolvent = [](double, const Vec& x) { return project_simplex(x); };
  op.mu = 0.0;
  return op;
}

OperatorBlock quadratic_operator(const QuadraticFunction& f, double scale) {
  if (!(scale > 0.0)) throw Error(Errc::InvalidRegularity, "scale must be positive");
  auto fp = std::make_shared<const QuadraticFunction>(f);
  OperatorBlock op;
  op.name = "quadratic_gradient";
  op.resolvent = [fp, scale](double step, const Vec& x) { return fp->prox(step * scale, x); };
  op.forward = [fp, scale](const Vec& x) { return (scale * fp->gradient(x)).eval(); };
  op.mu = scale * fp->strong_convexity();
  op.beta = scale * fp->lipschitz();
  op.lipschitz = scale * fp->lipschitz();
  return op;
}

OperatorBlock scaled(const OperatorBlock& a, double c) {
  if (!(c > 0.0)) throw Error(Errc::InvalidRegularity, "scale must be positive");
  OperatorBlock op;
  op.name = a.name + "*" + std::to_string(c);
  op.resolvent = [a, c](double step, const Vec& x) { return a.resolve(step * c, x); };
  if (a.forward) op.forward = [a, c](const Vec& x) { return (c * a.forward(x)).eval(); };
  if (a.mu) op.mu = c * *a.mu;
  if (a.beta) op.beta = c * *a.beta;
  if (a.lipschitz) op.lipschitz = c * *a.lipschitz;
  return op;
}

OperatorBlock inverse(const OperatorBlock& a) {
  OperatorBlock op;
  op.name = "inverse(" + a.name + ")";
  op.resolvent = [a](double step, const Vec& x) { return resolvent_of_inverse(step, a, x); };
  // 1/beta-cocoercive <=> inverse is 1/beta-strongly monotone
  if (a.beta && *a.beta > 0.0) op.mu = 1.0 / *a.beta;
  return op;
}

}  // namespace proxsplit
