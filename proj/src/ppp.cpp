#include "proxsplit/ppp.hpp"

#include "proxsplit/errors.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

namespace proxsplit {

namespace {

void require_positive(double v, const char* what) {
  if (!(v > 0.0)) throw Error(Errc::NonPositiveStep, std::string(what) + " must be positive");
}

double distance_or_nan(const std::optional<Vec>& ref, const Vec& x) {
  if (!ref) return std::numeric_limits<double>::quiet_NaN();
  if (ref->size() != x.size()) throw Error(Errc::DimensionMismatch, "reference point size");
  return (x - *ref).norm();
}

}  // namespace

IterationTrace km_iterate(const Vec& x0, const RelaxationSchedule& schedule,
                          const IterateOptions& options,
                          const std::function<KmStep(const Vec&)>& step) {
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  IterationTrace trace;
  Vec x = x0;
  for (std::size_t k = 0;; ++k) {
    KmStep s = step(x);
    const double res = s.displacement.norm();
    TraceRecord rec;
    rec.k = k;
    rec.residual = res;
    rec.m_residual = s.m_norm;
    rec.dist_ref = s.dist_ref;
    rec.time_s = std::chrono::duration<double>(clock::now() - start).count();
    trace.records.push_back(rec);
    if (options.keep_iterates) trace.iterates.push_back(x);
    if (options.stop.satisfied(res, x.norm())) {
      trace.converged = true;
      break;
    }
    if (k >= options.stop.max_iters) break;
    const double lambda = schedule.at(k);
    if (!(lambda >= 0.0 && lambda <= 2.0)) {
      throw Error(Errc::ThetaOutOfRange, "relaxation " + std::to_string(lambda) +
                                             " outside [0, 2] at iteration " +
                                             std::to_string(k));
    }
    x += lambda * s.displacement;
  }
  trace.final_iterate = std::move(x);
  return trace;
}

DiagonalSolve shifted_resolvent(double shift, double step, OperatorBlock a) {
  require_positive(shift, "diagonal shift");
  require_positive(step, "diagonal step");
  DiagonalSolve d;
  d.name = std::to_string(shift) + "I+" + std::to_string(step) + "*" + a.name;
  d.solve = [shift, step, a = std::move(a)](const Vec& r) {
    return a.resolve(step / shift, r / shift);
  };
  return d;
}

DiagonalSolve shifted_inverse_resolvent(double shift, double step, OperatorBlock b) {
  require_positive(shift, "diagonal shift");
  require_positive(step, "diagonal step");
  DiagonalSolve d;
  d.name = std::to_string(shift) + "I+(" + std::to_string(step) + "*" + b.name + ")^-1";
  // shift*y + (step B)^{-1} y ∋ r  <=>  y = (r - J_{shift*step*B}(r)) / shift
  d.solve = [shift, step, b = std::move(b)](const Vec& r) {
    return ((r - b.resolve(shift * step, r)) / shift).eval();
  };
  return d;
}

DiagonalSolve shifted_identity(double shift) {
  require_positive(shift, "diagonal shift");
  DiagonalSolve d;
  d.name = std::to_string(shift) + "I";
  d.solve = [shift](const Vec& r) { return (r / shift).eval(); };
  return d;
}

Coupling scalar_coupling(std::size_t row, std::size_t col, double c) {
  return {row, col, [c](const Vec& x) { return (c * x).eval(); }};
}

Coupling matrix_coupling(std::size_t row, std::size_t col, Mat k) {
  return {row, col, [k = std::move(k)](const Vec& x) { return (k * x).eval(); }};
}

Coupling forward_coupling(std::size_t row, std::size_t col, double c, double s,
                          OperatorBlock f) {
  if (!f.has_forward()) {
    throw Error(Errc::MissingOperator, f.name + " cannot be used as a forward term");
  }
  return {row, col, [c, s, f = std::move(f)](const Vec& x) {
            return (c * x + s * f.forward(x)).eval();
          }};
}

BlockAssembly::BlockAssembly(Preconditioner m, std::vector<DiagonalSolve> diagonal,
                             std::vector<Coupling> lower)
    : m_(std::move(m)), diagonal_(std::move(diagonal)) {
  if (diagonal_.size() != m_.layout().num_blocks()) {
    throw Error(Errc::InconsistentDimensions, "one diagonal solver per block is required");
  }
  lower_by_row_.resize(diagonal_.size());
  for (auto& c : lower) {
    if (c.col >= c.row || c.row >= diagonal_.size()) {
      throw Error(Errc::InconsistentDimensions,
                  "coupling (" + std::to_string(c.row) + "," + std::to_string(c.col) +
                      ") is not strictly lower triangular");
    }
    lower_by_row_[c.row].push_back(std::move(c));
  }
}

BlockVector BlockAssembly::solve(const BlockVector& rhs) const {
  if (!(rhs.layout() == layout())) throw Error(Errc::DimensionMismatch, "rhs layout");
  BlockVector y(layout());
  for (std::size_t i = 0; i < diagonal_.size(); ++i) {
    Vec r = rhs.block(i);
    for (const auto& c : lower_by_row_[i]) r -= c.apply(y.block(c.col));
    y.block(i) = diagonal_[i].solve(r);
  }
  return y;
}

BlockVector evaluate_T(const BlockAssembly& assembly, const BlockVector& u) {
  return assembly.solve(assembly.preconditioner().apply(u));
}

Vec evaluate_Ttilde(const BlockAssembly& assembly, const Factorization& factor, const Vec& w) {
  if (!(factor.layout() == assembly.layout())) {
    throw Error(Errc::InconsistentDimensions, "factorization does not match assembly");
  }
  return factor.apply_cstar(assembly.solve(factor.apply_c(w)));
}

RelaxationSchedule RelaxationSchedule::constant(double value) {
  RelaxationSchedule s;
  s.kind_ = Kind::Constant;
  s.values_ = {value};
  return s;
}

RelaxationSchedule RelaxationSchedule::sequence(std::vector<double> values,
                                                bool divergence_declared) {
  if (values.empty()) throw Error(Errc::ConfigError, "empty relaxation sequence");
  RelaxationSchedule s;
  s.kind_ = Kind::Sequence;
  s.values_ = std::move(values);
  s.divergence_declared_ = divergence_declared;
  return s;
}

double RelaxationSchedule::at(std::size_t k) const {
  return values_[std::min(k, values_.size() - 1)];
}

RelaxationSchedule RelaxationSchedule::scaled(double scale) const {
  RelaxationSchedule s = *this;
  for (auto& v : s.values_) v *= scale;
  return s;
}

void RelaxationSchedule::require_within(double upper) const {
  for (double v : values_) {
    if (!(v >= 0.0 && v <= upper)) {
      throw Error(Errc::ThetaOutOfRange,
                  std::to_string(v) + " outside [0, " + std::to_string(upper) + "]");
    }
  }
}

IterationTrace ppp_iterate(const BlockAssembly& assembly, const BlockVector& u0,
                           const RelaxationSchedule& schedule, const IterateOptions& options) {
  if (!(u0.layout() == assembly.layout())) throw Error(Errc::DimensionMismatch, "u0 layout");
  const auto& layout = assembly.layout();
  const auto& m = assembly.preconditioner();
  return km_iterate(u0.data(), schedule, options, [&](const Vec& x) {
    BlockVector u(layout, x);
    BlockVector d = evaluate_T(assembly, u) - u;
    KmStep s;
    s.m_norm = m_seminorm(m, d);
    s.displacement = std::move(d.data());
    s.dist_ref = distance_or_nan(options.reference, x);
    return s;
  });
}

IterationTrace rppp_iterate(const BlockAssembly& assembly, const Factorization& factor,
                            const Vec& w0, const RelaxationSchedule& schedule,
                            const IterateOptions& options) {
  if (w0.size() != factor.rank()) throw Error(Errc::DimensionMismatch, "w0 length");
  if (factor.rank() == 0) {
    IterationTrace empty;
    empty.converged = true;
    empty.final_iterate = Vec(0);
    return empty;
  }
  return km_iterate(w0, schedule, options, [&](const Vec& w) {
    KmStep s;
    s.displacement = evaluate_Ttilde(assembly, factor, w) - w;
    s.m_norm = s.displacement.norm();
    s.dist_ref = distance_or_nan(options.reference, w);
    return s;
  });
}

void CheckReport::record(double excess, double slack) {
  ++samples;
  worst_excess = std::max(worst_excess, excess);
  if (excess > slack) ++violations;
}

std::string CheckReport::summary() const {
  std::ostringstream out;
  out << property << ": " << (passed() ? "ok" : "VIOLATED") << " (" << violations << "/"
      << samples << " violations, worst excess " << worst_excess << ")";
  return out.str();
}

FejerReport monitor_fejer(const IterationTrace& trace, const Preconditioner& m,
                          const BlockVector& u_ref, double slack) {
  FejerReport report;
  report.fejer.property = "M-Fejer monotonicity";
  report.residual_decrease.property = "M-residual nonincreasing";
  if (trace.iterates.empty()) {
    throw Error(Errc::ConfigError, "monitor_fejer needs a trace with kept iterates");
  }
  double prev = -1.0;
  for (const auto& x : trace.iterates) {
    const double dist = m_seminorm(m, BlockVector(u_ref.layout(), x) - u_ref);
    if (prev >= 0.0) report.fejer.record(dist - prev, slack);
    prev = dist;
  }
  for (std::size_t k = 1; k < trace.records.size(); ++k) {
    report.residual_decrease.record(
        trace.records[k].m_residual - trace.records[k - 1].m_residual, slack);
  }
  return report;
}

BlockVector random_block_vector(const BlockLayout& layout, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> normal(0.0, 1.0);
  BlockVector v(layout);
  for (Index i = 0; i < v.total_dim(); ++i) v.data()(i) = scale * normal(rng);
  return v;
}

CheckReport check_firm_nonexpansive(const BlockAssembly& assembly, std::mt19937_64& rng,
                                    std::size_t samples, double scale, double slack) {
  CheckReport report;
  report.property = "M-firm nonexpansiveness";
  const auto& m = assembly.preconditioner();
  for (std::size_t s = 0; s < samples; ++s) {
    const BlockVector u1 = random_block_vector(assembly.layout(), rng, scale);
    const BlockVector u2 = random_block_vector(assembly.layout(), rng, scale);
    const BlockVector t1 = evaluate_T(assembly, u1);
    const BlockVector t2 = evaluate_T(assembly, u2);
    const BlockVector dt = t1 - t2;
    const BlockVector dr = (u1 - t1) - (u2 - t2);
    const BlockVector du = u1 - u2;
    const double lhs = m_inner(m, dt, dt) + m_inner(m, dr, dr);
    report.record(lhs - m_inner(m, du, du), slack);
  }
  return report;
}

CheckReport check_graph_monotone(const BlockAssembly& assembly, std::mt19937_64& rng,
                                 std::size_t samples, double scale, double slack) {
  CheckReport report;
  report.property = "graph monotonicity of A on (Tu, M(u - Tu))";
  const auto& m = assembly.preconditioner();
  for (std::size_t s = 0; s < samples; ++s) {
    const BlockVector u1 = random_block_vector(assembly.layout(), rng, scale);
    const BlockVector u2 = random_block_vector(assembly.layout(), rng, scale);
    const BlockVector t1 = evaluate_T(assembly, u1);
    const BlockVector t2 = evaluate_T(assembly, u2);
    const BlockVector v = m.apply((u1 - t1) - (u2 - t2));
    const double inner = v.data().dot((t1 - t2).data());
    report.record(-inner, slack);
  }
  return report;
}

double check_woodbury(const Mat& a, const Mat& c, std::mt19937_64& rng, std::size_t probes) {
  if (a.rows() != a.cols() || c.rows() != a.rows()) {
    throw Error(Errc::DimensionMismatch, "check_woodbury operand sizes");
  }
  const Index m = c.cols();
  const Mat id = Mat::Identity(m, m);
  const auto a_lu = a.fullPivLu();
  if (!a_lu.isInvertible()) throw Error(Errc::SolveFailure, "A must be invertible");
  const Mat lhs = (id + c.transpose() * a_lu.solve(c)).inverse();
  const auto shifted_lu = (c * c.transpose() + a).fullPivLu();
  if (!shifted_lu.isInvertible()) throw Error(Errc::SolveFailure, "C C^T + A is singular");
  const Mat rhs = id - c.transpose() * shifted_lu.solve(c);
  double residual = (lhs - rhs).cwiseAbs().maxCoeff();
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t p = 0; p < probes; ++p) {
    Vec v(m);
    for (Index i = 0; i < m; ++i) v(i) = normal(rng);
    // left side by solving (I + C^T A^{-1} C) x = v
    const Vec x = (id + c.transpose() * a_lu.solve(c)).partialPivLu().solve(v);
    const Vec y = v - c.transpose() * shifted_lu.solve(c * v);
    residual = std::max(residual, (x - y).cwiseAbs().maxCoeff());
  }
  return residual;
}

}  // namespace proxsplit
