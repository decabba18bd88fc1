#pragma once

// Markowitz portfolio benchmark with transaction costs:
//
//   min_{w in simplex}  w^T S w - r^T w + (delta/2)|w|^2
//                       + sum_i |w_i - w0_i| + sum_i |w_i - w0_i|^{3/2}
//
// split as f + g0 + g1 + g2 and solved by the sequential / parallel FDR
// variants.

#include "proxsplit/operators.hpp"
#include "proxsplit/schemes.hpp"
#include "proxsplit/trace.hpp"

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace proxsplit {

/// T x n matrix of asset returns, one row per day.
struct ReturnsData {
  Mat returns;
  std::vector<std::string> asset_names;

  Index days() const noexcept { return returns.rows(); }
  Index assets() const noexcept { return returns.cols(); }
};

/// CSV with a header row of asset names. Throws ParseError("row r, column c")
/// on ragged rows or non-numeric cells, IoError when the file cannot be read.
ReturnsData load_returns(const std::string& path);
ReturnsData parse_returns(std::istream& in, const std::string& source = "<stream>");
/// Shortest round-trip formatting, so load(save(x)) == x bit for bit.
void save_returns(const ReturnsData& data, const std::string& path);
void write_returns(const ReturnsData& data, std::ostream& out);

/// Rows [first, first + count).
ReturnsData slice_days(const ReturnsData& data, Index first, Index count);

struct ReturnEstimate {
  Vec r;      // column means
  Mat sigma;  // sample covariance, 1/(T-1), symmetrized, eigenvalues clipped at 0
};

ReturnEstimate estimate(const ReturnsData& data);

/// Three-factor model with per-asset idiosyncratic noise, returns in percent.
/// Deterministic for a fixed seed.
ReturnsData synthetic_data(std::uint64_t seed, Index n, Index days);

/// Which number plays "L" in the step-size rules of the variants.
enum class LConvention {
  Gradient,  // Lipschitz constant of grad f1 = 2 S w - r, i.e. 2 lambda_max(S)
  LambdaMax,  // lambda_max(S), the Lipschitz constant of w -> S w
};

LConvention parse_l_convention(std::string_view name);

struct PortfolioProblem {
  Mat sigma;
  Vec r;
  double delta = 0.1;
  Vec w0;

  QuadraticFunction f;   // full smooth part
  QuadraticFunction f1;  // w^T S w - r^T w
  QuadraticFunction f2;  // (delta/2)|w|^2
  OperatorBlock g0;      // sum |w_i - w0_i|
  OperatorBlock g1;      // sum |w_i - w0_i|^{3/2}
  OperatorBlock g2;      // simplex indicator

  Index dim() const noexcept { return r.size(); }
  double lambda_max() const noexcept { return f1.lambda_max(); }
  /// The step-size "L" under the chosen convention.
  double L(LConvention conv) const noexcept;
  /// Lipschitz constant of grad f (always 2 lambda_max + delta).
  double lipschitz_f() const noexcept { return f.lipschitz(); }

  /// Full objective; +inf outside the simplex (tolerance 1e-9).
  double objective(const Vec& w) const;
};

/// Throws InvalidRegularity unless delta > 0; w0 defaults to the uniform vector.
PortfolioProblem build_problem(Vec r, Mat sigma, double delta, std::optional<Vec> w0 = {});

enum class VariantKind { SeqFDRv1, SeqFDRv2, SeqFDRv3, ParFDR, GenBF, ParDR };

std::string_view to_string(VariantKind kind);
VariantKind parse_variant(std::string_view name);
const std::vector<VariantKind>& all_variants();

/// A fully specified run of one variant.
struct VariantSetup {
  VariantKind kind;
  SchemeConfig config;
  SchemeProblem problem;
  /// Index of the x-block produced by the simplex projection.
  std::size_t primal_index = 0;
};

VariantSetup configure_variant(VariantKind kind, const PortfolioProblem& problem,
                               LConvention conv = LConvention::Gradient);

/// prox of gamma * (g0 + g1) + simplex indicator, by bisection on the
/// multiplier of sum w = 1.
Vec prox_costs_on_simplex(double gamma, const Vec& w0, const Vec& x);

struct ReferenceSolution {
  Vec w;
  double fdr_residual = 0.0;
  std::size_t fdr_iterations = 0;
  std::size_t fb_iterations = 0;
  double disagreement = 0.0;
};

/// Parallel FDR with a conservative step down to residual min(1e-11, tol/100),
/// cross-checked by proximal gradient on f + (g0 + g1 + g2). Throws
/// OracleDisagreement when the two differ by more than 10 tol.
ReferenceSolution reference_solution(const PortfolioProblem& problem, double tol = 1e-9);

struct BenchmarkOptions {
  std::size_t max_iter = 100000;
  double tol = 1e-10;
  LConvention convention = LConvention::Gradient;
  double reference_tol = 1e-9;
  /// Upper bound on concurrently running variants (0: PROXSPLIT_THREADS or 1).
  unsigned threads = 0;
};

struct VariantRun {
  VariantKind kind;
  SchemeConfig config;
  IterationTrace trace;
  Vec w;
  /// First k with residual <= 1e-6 (empty if never reached).
  std::optional<std::size_t> iterations_to_1e6;
  double final_distance = 0.0;
  std::vector<ParamViolation> warnings;
};

struct BenchmarkResult {
  ReferenceSolution reference;
  std::vector<VariantRun> runs;

  nlohmann::json summary() const;
};

BenchmarkResult run_benchmark(const std::vector<VariantKind>& variants,
                              const PortfolioProblem& problem, const BenchmarkOptions& options);

/// Index of the last k with d_{k+1} > d_k + slack; empty when the sequence
/// is monotone throughout.
std::optional<std::size_t> last_increase(const std::vector<double>& d, double slack = 1e-10);

/// Thread cap from PROXSPLIT_THREADS (>= 1; 1 when unset or invalid).
unsigned thread_cap_from_env();

}  // namespace proxsplit
