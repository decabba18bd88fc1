#include "proxsplit/portfolio.hpp"

#include "proxsplit/errors.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <thread>

namespace proxsplit {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    cells.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

[[noreturn]] void parse_fail(const std::string& source, std::size_t row, std::size_t col,
                             const std::string& what) {
  throw Error(Errc::ParseError, source + ": row " + std::to_string(row) + ", column " +
                                    std::to_string(col) + ": " + what);
}

double parse_cell(std::string_view cell, const std::string& source, std::size_t row,
                  std::size_t col) {
  if (cell.empty()) parse_fail(source, row, col, "missing value");
  if (cell.front() == '+') cell.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (res.ec != std::errc() || res.ptr != cell.data() + cell.size()) {
    parse_fail(source, row, col, "not a number: '" + std::string(cell) + "'");
  }
  if (!std::isfinite(v)) parse_fail(source, row, col, "non-finite value");
  return v;
}

double prox_cost_scalar(double gamma, double w0, double y) {
  // prox of gamma (|t - w0| + |t - w0|^{3/2}) at y
  const double t = y - w0;
  const double s = std::abs(t) - gamma;
  if (s <= 0.0) return w0;
  const double a = 1.5 * gamma;
  const double q = 2.0 * s / (a + std::sqrt(a * a + 4.0 * s));
  return w0 + std::copysign(q * q, t);
}

OperatorBlock named(OperatorBlock op, std::string name) {
  op.name = std::move(name);
  return op;
}

}  // namespace

// --- data -----------------------------------------------------------------------

ReturnsData parse_returns(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> names;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) break;
  }
  if (trim(line).empty()) throw Error(Errc::ParseError, source + ": empty file");
  for (auto c : split_csv(line)) names.emplace_back(c);
  const std::size_t n = names.size();

  std::vector<double> values;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != n) {
      parse_fail(source, line_no, std::min(cells.size(), n) + 1,
                 "expected " + std::to_string(n) + " cells, found " +
                     std::to_string(cells.size()));
    }
    for (std::size_t j = 0; j < n; ++j) values.push_back(parse_cell(cells[j], source, line_no, j + 1));
    ++rows;
  }
  ReturnsData data;
  data.asset_names = std::move(names);
  data.returns.resize(static_cast<Index>(rows), static_cast<Index>(n));
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      data.returns(static_cast<Index>(i), static_cast<Index>(j)) = values[i * n + j];
    }
  }
  return data;
}

ReturnsData load_returns(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open " + path);
  return parse_returns(in, path);
}

void write_returns(const ReturnsData& data, std::ostream& out) {
  for (Index j = 0; j < data.assets(); ++j) {
    if (j) out << ',';
    if (static_cast<std::size_t>(j) < data.asset_names.size()) {
      out << data.asset_names[static_cast<std::size_t>(j)];
    } else {
      out << "asset_" << (j + 1);
    }
  }
  out << '\n';
  for (Index i = 0; i < data.days(); ++i) {
    for (Index j = 0; j < data.assets(); ++j) {
      if (j) out << ',';
      out << format_double(data.returns(i, j));
    }
    out << '\n';
  }
}

void save_returns(const ReturnsData& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::IoError, "cannot write " + path);
  write_returns(data, out);
  if (!out) throw Error(Errc::IoError, "write failed for " + path);
}

ReturnsData slice_days(const ReturnsData& data, Index first, Index count) {
  if (first < 0 || count < 0 || first + count > data.days()) {
    throw Error(Errc::InsufficientData, "window exceeds the available days");
  }
  ReturnsData out;
  out.asset_names = data.asset_names;
  out.returns = data.returns.middleRows(first, count);
  return out;
}

ReturnEstimate estimate(const ReturnsData& data) {
  const Index t = data.days();
  if (t < 2) throw Error(Errc::InsufficientData, "at least two days of returns are required");
  if (data.assets() < 1) throw Error(Errc::InsufficientData, "no assets");
  ReturnEstimate e;
  e.r = data.returns.colwise().mean().transpose();
  const Mat centered = data.returns.rowwise() - e.r.transpose();
  Mat s = centered.transpose() * centered / static_cast<double>(t - 1);
  s = (0.5 * (s + s.transpose())).eval();
  Eigen::SelfAdjointEigenSolver<Mat> eig(s);
  if (eig.eigenvalues().minCoeff() < 0.0) {
    s = eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).asDiagonal() *
        eig.eigenvectors().transpose();
    s = (0.5 * (s + s.transpose())).eval();
  }
  e.sigma = std::move(s);
  return e;
}

ReturnsData synthetic_data(std::uint64_t seed, Index n, Index days) {
  if (n < 1 || days < 2) throw Error(Errc::InsufficientData, "need n >= 1 and T >= 2");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.5, 2.0);
  constexpr Index k = 3;
  const double factor_vol[k] = {1.5, 1.0, 0.7};
  Mat loadings(n, k);
  Vec idio(n);
  Vec drift(n);
  for (Index i = 0; i < n; ++i) {
    loadings(i, 0) = 1.0 + 0.3 * normal(rng);
    loadings(i, 1) = 0.5 * normal(rng);
    loadings(i, 2) = 0.5 * normal(rng);
    idio(i) = uniform(rng);
    drift(i) = 0.05 + 0.05 * normal(rng);
  }
  ReturnsData data;
  data.returns.resize(days, n);
  for (Index t = 0; t < days; ++t) {
    double f[k];
    for (Index j = 0; j < k; ++j) f[j] = factor_vol[j] * normal(rng);
    for (Index i = 0; i < n; ++i) {
      double v = drift(i) + idio(i) * normal(rng);
      for (Index j = 0; j < k; ++j) v += loadings(i, j) * f[j];
      data.returns(t, i) = v;
    }
  }
  for (Index i = 0; i < n; ++i) data.asset_names.push_back("asset_" + std::to_string(i + 1));
  return data;
}

// --- problem --------------------------------------------------------------------

LConvention parse_l_convention(std::string_view name) {
  if (name == "gradient") return LConvention::Gradient;
  if (name == "lambda_max") return LConvention::LambdaMax;
  throw Error(Errc::ConfigError, "L convention must be 'gradient' or 'lambda_max'");
}

double PortfolioProblem::L(LConvention conv) const noexcept {
  return conv == LConvention::Gradient ? 2.0 * lambda_max() : lambda_max();
}

double PortfolioProblem::objective(const Vec& w) const {
  if ((w.array() < -1e-9).any() || std::abs(w.sum() - 1.0) > 1e-9) {
    return std::numeric_limits<double>::infinity();
  }
  const Vec d = (w - w0).cwiseAbs();
  return f.value(w) + d.sum() + d.array().pow(1.5).sum();
}

PortfolioProblem build_problem(Vec r, Mat sigma, double delta, std::optional<Vec> w0) {
  if (!(delta > 0.0)) throw Error(Errc::InvalidRegularity, "delta must be positive");
  const Index n = r.size();
  if (n < 1) throw Error(Errc::EmptyVector, "empty return vector");
  Vec start = w0 ? std::move(*w0) : Vec::Constant(n, 1.0 / static_cast<double>(n)).eval();
  if (start.size() != n) throw Error(Errc::DimensionMismatch, "w0 length");
  QuadraticFunction f(sigma, r, delta);
  QuadraticFunction f1(sigma, r, 0.0);
  QuadraticFunction f2(Mat::Zero(n, n), Vec::Zero(n), delta);
  return PortfolioProblem{std::move(sigma),
                          std::move(r),
                          delta,
                          start,
                          std::move(f),
                          std::move(f1),
                          std::move(f2),
                          named(l1_shifted(start), "g0"),
                          named(pow32_shifted(start), "g1"),
                          named(simplex_indicator(), "g2")};
}

// --- variants -------------------------------------------------------------------

std::string_view to_string(VariantKind kind) {
  switch (kind) {
    case VariantKind::SeqFDRv1: return "SeqFDRv1";
    case VariantKind::SeqFDRv2: return "SeqFDRv2";
    case VariantKind::SeqFDRv3: return "SeqFDRv3";
    case VariantKind::ParFDR: return "ParFDR";
    case VariantKind::GenBF: return "GenBF";
    case VariantKind::ParDR: return "ParDR";
  }
  return "unknown";
}

const std::vector<VariantKind>& all_variants() {
  static const std::vector<VariantKind> all{VariantKind::SeqFDRv1, VariantKind::SeqFDRv2,
                                            VariantKind::SeqFDRv3, VariantKind::ParFDR,
                                            VariantKind::GenBF,    VariantKind::ParDR};
  return all;
}

VariantKind parse_variant(std::string_view name) {
  std::string lower;
  for (char c : name) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  for (auto k : all_variants()) {
    std::string candidate;
    for (char c : to_string(k)) {
      candidate.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    if (lower == candidate) return k;
  }
  throw Error(Errc::ConfigError, "unknown variant '" + std::string(name) + "'");
}

VariantSetup configure_variant(VariantKind kind, const PortfolioProblem& p, LConvention conv) {
  const double L = p.L(conv);
  const double delta = p.delta;
  VariantSetup s{kind, SchemeConfig{}, SchemeProblem{}, 2};
  s.problem.dim = p.dim();
  s.config.theta = RelaxationSchedule::constant(1.0);
  const auto grad = [&](double scale) -> std::optional<OperatorBlock> {
    return named(quadratic_operator(p.f, scale), scale == 1.0 ? "grad_f" : "grad_f*" + std::to_string(scale));
  };
  switch (kind) {
    case VariantKind::SeqFDRv1:
      s.config.kind = SchemeKind::SequentialFDR;
      s.config.gamma = std::min(1.0 / L, 1.0 / delta);
      s.problem.ops = {p.g0, p.g1, p.g2};
      s.problem.forwards = {named(quadratic_operator(p.f1), "grad_f1"),
                            named(quadratic_operator(p.f2), "grad_f2")};
      break;
    case VariantKind::SeqFDRv2:
      s.config.kind = SchemeKind::SequentialFDR;
      s.config.gamma = 1.0 / (L + delta);
      s.problem.ops = {p.g0, p.g1, p.g2};
      s.problem.forwards = {grad(1.0), std::nullopt};
      break;
    case VariantKind::SeqFDRv3:
      s.config.kind = SchemeKind::SequentialFDR;
      s.config.gamma = 2.0 / (L + delta);
      s.problem.ops = {p.g0, p.g1, p.g2};
      s.problem.forwards = {grad(0.5), grad(0.5)};
      break;
    case VariantKind::ParFDR:
      s.config.kind = SchemeKind::ParallelFDR;
      s.config.gamma = 1.0 / (L + delta);
      s.problem.ops = {p.g0, p.g1, p.g2};
      s.problem.forwards = {grad(1.0), std::nullopt};
      break;
    case VariantKind::GenBF:
      s.config.kind = SchemeKind::ParallelFDR;
      s.config.gamma = 3.0 / (L + delta);
      s.problem.ops = {zero_operator(), p.g0, p.g1, p.g2};
      s.problem.forwards = {grad(1.0 / 3.0), grad(1.0 / 3.0), grad(1.0 / 3.0)};
      s.primal_index = 3;
      break;
    case VariantKind::ParDR:
      s.config.kind = SchemeKind::ParallelFDR;
      s.config.gamma = 1.0 / (L + delta);
      s.problem.ops = {p.g0, p.g1, p.g2, named(quadratic_operator(p.f), "f")};
      s.problem.forwards = {};
      break;
  }
  s.config.n_terms = s.problem.ops.size() - 1;
  const auto violations = validate_params([&] {
    SchemeConfig c = s.config;
    double beta = 0.0;
    for (const auto& fw : s.problem.forwards) {
      if (fw && fw->beta) beta = std::max(beta, *fw->beta);
    }
    c.beta = beta;
    return c;
  }());
  for (const auto& v : violations) {
    if (v.severity == Severity::Error) throw Error(v.code, std::string(to_string(kind)) + ": " + v.message);
  }
  return s;
}

// --- reference solution ---------------------------------------------------------

Vec prox_costs_on_simplex(double gamma, const Vec& w0, const Vec& x) {
  if (!(gamma > 0.0)) throw Error(Errc::NonPositiveStep, "gamma must be positive");
  if (x.size() == 0) throw Error(Errc::EmptyVector, "empty input");
  if (w0.size() != x.size()) throw Error(Errc::DimensionMismatch, "w0 length");
  const Index n = x.size();
  const auto point = [&](double lambda) {
    Vec t(n);
    for (Index i = 0; i < n; ++i) t(i) = std::max(0.0, prox_cost_scalar(gamma, w0(i), x(i) + lambda));
    return t;
  };
  double lo = -1.0;
  double hi = 1.0;
  while (point(lo).sum() > 1.0) lo *= 2.0;
  while (point(hi).sum() < 1.0) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    (point(mid).sum() < 1.0 ? lo : hi) = mid;
  }
  const Vec tl = point(lo);
  const Vec th = point(hi);
  const double sl = tl.sum();
  const double sh = th.sum();
  if (sh == sl) return th;
  // interpolate between the bracketing points, both within a few ulps of the simplex
  const double a = (1.0 - sl) / (sh - sl);
  return (1.0 - a) * tl + a * th;
}

ReferenceSolution reference_solution(const PortfolioProblem& problem, double tol) {
  ReferenceSolution ref;
  const double target = std::min(1e-11, tol / 100.0);

  VariantSetup setup = configure_variant(VariantKind::ParFDR, problem, LConvention::Gradient);
  setup.config.gamma = 1.0 / problem.lipschitz_f();
  const SchemeAssembly s = build_scheme(setup.config, setup.problem);
  DirectOptions opt;
  opt.base.stop = StoppingRule{target, false, 2000000};
  Vec state = Vec::Zero(s.state_dim());
  for (Index i = 0; i < state.size(); i += problem.dim()) state.segment(i, problem.dim()) = problem.w0;
  const IterationTrace fdr = direct_iterate(s, state, setup.config.theta, opt);
  ref.fdr_residual = fdr.final_residual();
  ref.fdr_iterations = fdr.iterations();
  ref.w = s.evaluate(fdr.final_iterate).x.at(setup.primal_index);

  // proximal gradient on f + (g0 + g1 + g2)
  const double gamma = 1.0 / problem.lipschitz_f();
  Vec w = problem.w0;
  std::size_t k = 0;
  for (; k < 2000000; ++k) {
    const Vec next = prox_costs_on_simplex(gamma, problem.w0, w - gamma * problem.f.gradient(w));
    const double step = (next - w).norm();
    w = next;
    if (step <= target) break;
  }
  ref.fb_iterations = k;
  ref.disagreement = (w - ref.w).norm();
  if (ref.disagreement > 10.0 * tol) {
    throw Error(Errc::OracleDisagreement,
                "parallel FDR and proximal gradient differ by " + format_double(ref.disagreement));
  }
  return ref;
}

// --- benchmark ------------------------------------------------------------------

std::optional<std::size_t> last_increase(const std::vector<double>& d, double slack) {
  std::optional<std::size_t> last;
  for (std::size_t k = 0; k + 1 < d.size(); ++k) {
    if (d[k + 1] > d[k] + slack) last = k;
  }
  return last;
}

unsigned thread_cap_from_env() {
  const char* v = std::getenv("PROXSPLIT_THREADS");
  if (!v) return 1;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (end == v || n < 1) return 1;
  return static_cast<unsigned>(std::min<long>(n, 256));
}

nlohmann::json BenchmarkResult::summary() const {
  nlohmann::json variants = nlohmann::json::object();
  for (const auto& r : runs) {
    nlohmann::json warn = nlohmann::json::array();
    for (const auto& w : r.warnings) warn.push_back(w.to_json());
    variants[std::string(to_string(r.kind))] = {
        {"iterations_to_1e-6", r.iterations_to_1e6 ? nlohmann::json(*r.iterations_to_1e6)
                                                   : nlohmann::json(nullptr)},
        {"iterations", r.trace.iterations()},
        {"final_residual", r.trace.final_residual()},
        {"final_distance", r.final_distance},
        {"converged", r.trace.converged},
        {"config", r.config.to_json()},
        {"warnings", warn}};
  }
  std::vector<double> w(reference.w.data(), reference.w.data() + reference.w.size());
  return {{"reference",
           {{"w", w},
            {"fdr_residual", reference.fdr_residual},
            {"fdr_iterations", reference.fdr_iterations},
            {"fb_iterations", reference.fb_iterations},
            {"disagreement", reference.disagreement}}},
          {"variants", variants}};
}

BenchmarkResult run_benchmark(const std::vector<VariantKind>& variants,
                              const PortfolioProblem& problem, const BenchmarkOptions& options) {
  BenchmarkResult result;
  result.reference = reference_solution(problem, options.reference_tol);
  result.runs.resize(variants.size());

  const auto run_one = [&](std::size_t idx) {
    const VariantSetup setup = configure_variant(variants[idx], problem, options.convention);
    const SchemeAssembly s = build_scheme(setup.config, setup.problem);
    DirectOptions opt;
    opt.base.stop = StoppingRule{options.tol, false, options.max_iter};
    opt.primal_reference = result.reference.w;
    opt.primal_index = setup.primal_index;
    Vec state = Vec::Zero(s.state_dim());
    for (Index i = 0; i < state.size(); i += problem.dim()) {
      state.segment(i, problem.dim()) = problem.w0;
    }
    VariantRun run{variants[idx], setup.config, direct_iterate(s, state, setup.config.theta, opt),
                   Vec(), std::nullopt, 0.0, s.warnings};
    run.w = s.evaluate(run.trace.final_iterate).x.at(setup.primal_index);
    run.final_distance = (run.w - result.reference.w).norm();
    for (const auto& rec : run.trace.records) {
      if (rec.residual <= 1e-6) {
        run.iterations_to_1e6 = rec.k;
        break;
      }
    }
    result.runs[idx] = std::move(run);
  };

  const unsigned cap = options.threads ? options.threads : thread_cap_from_env();
  const unsigned workers = std::max(1u, std::min<unsigned>(cap, static_cast<unsigned>(variants.size())));
  if (workers <= 1) {
    for (std::size_t i = 0; i < variants.size(); ++i) run_one(i);
    return result;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(variants.size());
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < workers; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < variants.size(); i = next++) {
        try {
          run_one(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return result;
}

}  // namespace proxsplit
