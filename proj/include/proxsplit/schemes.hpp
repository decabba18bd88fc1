#pragma once

// Concrete splittings written as degenerate PPP:
// DRS, Chambolle-Pock, relaxed DRS / Peaceman-Rachford, FDR (Davis-Yin) and
// its parallel and sequential generalizations to N + 1 operators.
//
// Every scheme carries two code paths: the block assembly (M, A) that drives
// ppp_iterate / rppp_iterate, and a direct reduced update in the variables
// the algorithms are usually written in (w for DRS, w~ = w / (1 + alpha) for
// the FDR family, the full pair (x, y) for CP).

#include "proxsplit/errors.hpp"
#include "proxsplit/operators.hpp"
#include "proxsplit/ppp.hpp"
#include "proxsplit/spaces.hpp"
#include "proxsplit/trace.hpp"

#include <json.hpp>

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace proxsplit {

enum class SchemeKind { DRS, CP, RelaxedDRS, FDR, ParallelFDR, SequentialFDR };

std::string_view to_string(SchemeKind kind);
/// Accepts "drs", "cp", "relaxed_drs", "fdr", "parallel_fdr", "sequential_fdr"
/// (case-insensitive, '-' and '_' interchangeable).
SchemeKind parse_scheme_kind(std::string_view name);

struct SchemeConfig {
  SchemeKind kind = SchemeKind::DRS;
  double sigma = 1.0;  // DRS step; CP dual step
  double tau = 1.0;    // CP primal step
  double gamma = 1.0;  // rescaled step of the relaxed DRS / FDR family
  /// Overrides the shift alpha derived from the regularity constants.
  std::optional<double> alpha;
  /// lambda_k for DRS and CP, theta_k for the rescaled schemes.
  RelaxationSchedule theta = RelaxationSchedule::constant(1.0);
  std::size_t n_terms = 1;
  std::optional<double> mu0;
  std::optional<double> mu1;
  std::optional<double> beta;
  /// ||L|| for CP when it is known in advance.
  std::optional<double> l_norm;

  static SchemeConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

enum class Severity { Warning, Error };

struct ParamViolation {
  Severity severity = Severity::Error;
  Errc code = Errc::ConfigError;
  std::string parameter;
  std::string message;
  /// The bound that was checked, e.g. "theta_k in [0, 2 - gamma*beta/2]".
  std::string bound;

  nlohmann::json to_json() const;
};

/// 2 + 2 gamma mu0 mu1 / (mu0 + mu1), equal to 2 when mu0 mu1 = 0.
double relaxed_drs_theta_max(double gamma, double mu0, double mu1);
/// -gamma mu0 mu1 / (gamma mu0 mu1 + mu0 + mu1).
double relaxed_drs_alpha(double gamma, double mu0, double mu1);
/// 2 - gamma beta / 2.
double fdr_theta_max(double gamma, double beta);
/// gamma beta / (4 - gamma beta).
double fdr_alpha(double gamma, double beta);

/// Every violated bound for the configuration (warnings included).
std::vector<ParamViolation> validate_params(const SchemeConfig& cfg);
bool has_errors(const std::vector<ParamViolation>& violations);

/// The operators a scheme is applied to.
///
/// DRS: ops = {A, B}. CP: ops = {A, B} with A acting on x and B on L x.
/// Relaxed DRS and FDR: ops = {A0, A1}, forwards = {C}.
/// Parallel and sequential FDR: ops = {A0, A1, ..., AN}, forwards = {C1..CN}.
/// A missing forward entry (or an empty list) means C_i = 0.
struct SchemeProblem {
  Index dim = 0;
  std::vector<OperatorBlock> ops;
  std::vector<std::optional<OperatorBlock>> forwards;
  std::optional<Mat> l;  // CP only
};

/// One evaluation of the direct reduced map at `state`:
/// next state = state + theta * increment.
struct DirectEval {
  /// x_0, ..., x_N (DRS: J_{sA} w, J_{sB}(2x_0 - w); CP: x+, y+).
  std::vector<Vec> x;
  Vec increment;
};

class SchemeAssembly {
 public:
  using DirectFn = std::function<DirectEval(const Vec&)>;

  SchemeAssembly(SchemeConfig cfg, BlockAssembly blocks, Factorization factor, DirectFn direct)
      : kind(cfg.kind),
        config(std::move(cfg)),
        blocks(std::move(blocks)),
        factor(std::move(factor)),
        direct(std::move(direct)) {}

  SchemeKind kind;
  SchemeConfig config;
  BlockAssembly blocks;
  Factorization factor;
  /// Shift of the rescaled schemes: w = (1 + alpha) * state. Zero for DRS/CP.
  double alpha = 0.0;
  /// sigma of the block representation (gamma (1 + alpha) for the FDR family).
  double sigma = 1.0;
  Index dim = 0;
  std::vector<ParamViolation> warnings;

  DirectEval evaluate(const Vec& state) const;
  Vec direct_step(const Vec& state, double theta) const;

  /// Direct state -> reduced PPP variable w = C^T u.
  Vec state_to_reduced(const Vec& state) const;
  Vec reduced_to_state(const Vec& w) const;
  /// u with C^T u = reduced(state) (exact for CP, whose state is u itself).
  BlockVector state_to_full(const Vec& state) const;
  /// Schedule in PPP units: lambda_k = (1 + alpha) theta_k.
  RelaxationSchedule lambda_schedule() const;
  Index state_dim() const;

  /// Primal point x_0 of T u for u = lift(w).
  Vec primal_from_reduced(const Vec& w) const;

  DirectFn direct;
};

// Builders take the dimension n of H explicitly; operator blocks do not carry it.

SchemeAssembly build_drs(const OperatorBlock& a, const OperatorBlock& b, Index n, double sigma,
                         RelaxationSchedule lambda = RelaxationSchedule::constant(1.0));

/// Power iteration on L^T L. Always a lower bound on the true norm.
double operator_norm_estimate(const Mat& l, std::size_t max_steps = 2000, double tol = 1e-15);

/// min f(x) + g(Lx) with A = df on R^n, B = dg on R^m, L of size m x n.
SchemeAssembly build_cp(const OperatorBlock& a, const OperatorBlock& b, const Mat& l,
                        double tau, double sigma,
                        RelaxationSchedule lambda = RelaxationSchedule::constant(1.0));

SchemeAssembly build_relaxed_drs(const OperatorBlock& a0, const OperatorBlock& a1, Index n,
                                 double gamma, RelaxationSchedule theta, double mu0, double mu1);

SchemeAssembly build_fdr(const OperatorBlock& a0, const OperatorBlock& a1,
                         const std::optional<OperatorBlock>& c, Index n, double gamma,
                         RelaxationSchedule theta, std::optional<double> beta = std::nullopt);

SchemeAssembly build_parallel_fdr(const OperatorBlock& a0, const std::vector<OperatorBlock>& a,
                                  const std::vector<std::optional<OperatorBlock>>& c, Index n,
                                  double gamma, RelaxationSchedule theta,
                                  std::optional<double> beta = std::nullopt);

SchemeAssembly build_sequential_fdr(const OperatorBlock& a0, const std::vector<OperatorBlock>& a,
                                    const std::vector<std::optional<OperatorBlock>>& c, Index n,
                                    double gamma, RelaxationSchedule theta,
                                    std::optional<double> beta = std::nullopt);

/// Dispatch on cfg.kind.
SchemeAssembly build_scheme(const SchemeConfig& cfg, const SchemeProblem& problem);

/// Direct-mode iteration; dist_ref measures |x_{primal_index} - primal_reference|.
struct DirectOptions {
  IterateOptions base;
  std::optional<Vec> primal_reference;
  std::size_t primal_index = 0;
};

IterationTrace direct_iterate(const SchemeAssembly& s, const Vec& state0,
                              const RelaxationSchedule& theta, const DirectOptions& options);

enum class RunMode { Direct, Block, Both };
RunMode parse_run_mode(std::string_view name);

struct RunResult {
  std::optional<IterationTrace> direct;
  std::optional<IterationTrace> block;
  /// max_k |w^k_direct - w^k_block| in reduced coordinates (mode Both).
  std::optional<double> max_deviation;
  Vec primal;
};

/// Runs the scheme from state0 (zero when empty). Block traces are in the
/// reduced variable w; direct traces in the scheme's own state.
RunResult run(const SchemeAssembly& s, RunMode mode, const Vec& state0,
              const DirectOptions& options);

}  // namespace proxsplit
