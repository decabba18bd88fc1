#include "proxsplit/schemes.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace proxsplit {

namespace {

constexpr double kBoundaryRel = 1e-12;

std::string num(double v) {
  std::ostringstream out;
  out.precision(12);
  out << v;
  return out.str();
}

std::string normalize_name(std::string_view name) {
  std::string s;
  for (char c : name) {
    if (c == '-') c = '_';
    s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return s;
}

bool near(double a, double b) { return std::abs(a - b) <= kBoundaryRel * std::max(1.0, std::abs(b)); }

void add(std::vector<ParamViolation>& out, Severity sev, Errc code, std::string param,
         std::string message, std::string bound) {
  out.push_back({sev, code, std::move(param), std::move(message), std::move(bound)});
}

void check_step(std::vector<ParamViolation>& out, const char* name, double v) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    add(out, Severity::Error, Errc::NonPositiveStep, name, std::string(name) + " = " + num(v),
        std::string(name) + " > 0");
  }
}

// theta_k in [0, upper]; sum theta_k (upper - theta_k) = +inf
void check_schedule(std::vector<ParamViolation>& out, const RelaxationSchedule& sched,
                    double upper, const std::string& bound) {
  bool boundary = false;
  for (double t : sched.values()) {
    if (!(t >= 0.0) || (t > upper && !near(t, upper))) {
      add(out, Severity::Error, Errc::ThetaOutOfRange, "theta",
          "theta = " + num(t) + " outside [0, " + num(upper) + "]", bound);
      return;
    }
    if (near(t, upper) || t == 0.0) boundary = true;
  }
  const std::string div = "sum_k theta_k (" + num(upper) + " - theta_k) = +inf";
  if (sched.kind() == RelaxationSchedule::Kind::Constant) {
    if (boundary) {
      add(out, Severity::Warning, Errc::ThetaOutOfRange, "theta",
          "constant theta = " + num(sched.at(0)) +
              " sits on the boundary; the divergence condition fails",
          div);
    }
  } else if (!sched.divergence_declared()) {
    add(out, Severity::Warning, Errc::ThetaOutOfRange, "theta",
        "divergence of the relaxation series was not declared for this sequence", div);
  }
}

void check_alpha(std::vector<ParamViolation>& out, const SchemeConfig& cfg) {
  if (cfg.alpha && !(*cfg.alpha > -1.0)) {
    add(out, Severity::Error, Errc::ConfigError, "alpha", "alpha = " + num(*cfg.alpha),
        "alpha > -1");
  }
}

void check_nonneg(std::vector<ParamViolation>& out, const char* name,
                  const std::optional<double>& v) {
  if (v && !(*v >= 0.0)) {
    add(out, Severity::Error, Errc::InvalidRegularity, name, std::string(name) + " = " + num(*v),
        std::string(name) + " >= 0");
  }
}

void throw_on_errors(const std::vector<ParamViolation>& v) {
  for (const auto& p : v) {
    if (p.severity == Severity::Error) throw Error(p.code, p.message + " (requires " + p.bound + ")");
  }
}

std::vector<ParamViolation> warnings_of(const std::vector<ParamViolation>& v) {
  std::vector<ParamViolation> w;
  for (const auto& p : v) {
    if (p.severity == Severity::Warning) w.push_back(p);
  }
  return w;
}

Mat identity(Index n) { return Mat::Identity(n, n); }

// beta used by the FDR family: explicit value, else the worst over the C_i
double resolve_beta(const std::vector<std::optional<OperatorBlock>>& c,
                    std::optional<double> beta) {
  if (beta) return *beta;
  double b = 0.0;
  for (const auto& ci : c) {
    if (!ci) continue;
    if (!ci->has_forward()) throw Error(Errc::MissingOperator, ci->name + " has no forward map");
    if (!ci->beta) {
      throw Error(Errc::InvalidRegularity,
                  ci->name + " has no cocoercivity constant; pass beta explicitly");
    }
    b = std::max(b, *ci->beta);
  }
  return b;
}

Vec forward_or_zero(const std::optional<OperatorBlock>& c, const Vec& x) {
  return c ? c->apply(x) : Vec::Zero(x.size()).eval();
}

Coupling x_coupling(std::size_t row, std::size_t col, double alpha, double sigma,
                    const std::optional<OperatorBlock>& c) {
  if (c) return forward_coupling(row, col, 2.0 - 2.0 * alpha, sigma, *c);
  return scalar_coupling(row, col, 2.0 - 2.0 * alpha);
}

void require_dims(const OperatorBlock& op) {
  if (!op.resolvent) throw Error(Errc::MissingOperator, op.name + " has no resolvent");
}

enum class FdrLayout { Parallel, Sequential };

SchemeAssembly build_fdr_family(SchemeConfig cfg, FdrLayout shape, const OperatorBlock& a0,
                                const std::vector<OperatorBlock>& a,
                                std::vector<std::optional<OperatorBlock>> c, Index n,
                                double alpha) {
  const std::size_t N = a.size();
  if (N == 0) throw Error(Errc::InconsistentDimensions, "at least one operator A_i is required");
  if (c.size() > N) throw Error(Errc::InconsistentDimensions, "more forward terms than A_i");
  c.resize(N);
  require_dims(a0);
  for (const auto& ai : a) require_dims(ai);

  const double gamma = cfg.gamma;
  const double shift = 1.0 + alpha;
  const double sigma = gamma * shift;
  const BlockLayout layout = BlockLayout::uniform(2 * N + 1, n);
  const auto xb = [](std::size_t i) { return 2 * i; };
  const auto vb = [](std::size_t i) { return 2 * i - 1; };

  // C^T u = (x_0 + v_i + x_i)_i (parallel) or (x_{i-1} + v_i + x_i)_i (sequential)
  Mat cmat = Mat::Zero(layout.total_dim(), static_cast<Index>(N) * n);
  for (std::size_t i = 1; i <= N; ++i) {
    const Index col = static_cast<Index>(i - 1) * n;
    const std::size_t left = shape == FdrLayout::Parallel ? 0 : i - 1;
    cmat.block(layout.offset(xb(left)), col, n, n) += identity(n);
    cmat.block(layout.offset(vb(i)), col, n, n) += identity(n);
    cmat.block(layout.offset(xb(i)), col, n, n) += identity(n);
  }
  Preconditioner m(cmat * cmat.transpose(), layout);
  Factorization f = Factorization::from_c(cmat, layout);

  std::vector<DiagonalSolve> diag(2 * N + 1);
  std::vector<Coupling> lower;
  const double d0 = shape == FdrLayout::Parallel ? static_cast<double>(N) * shift : shift;
  diag[0] = shifted_resolvent(d0, sigma, a0);
  for (std::size_t i = 1; i <= N; ++i) {
    const std::size_t left = shape == FdrLayout::Parallel ? 0 : i - 1;
    const bool interior = shape == FdrLayout::Sequential && i < N;
    diag[vb(i)] = shifted_identity(1.0);
    diag[xb(i)] = shifted_resolvent(interior ? 2.0 * shift : shift, sigma, a[i - 1]);
    lower.push_back(scalar_coupling(vb(i), xb(left), 2.0));
    lower.push_back(x_coupling(xb(i), xb(left), alpha, sigma, c[i - 1]));
    lower.push_back(scalar_coupling(xb(i), vb(i), 2.0));
  }
  BlockAssembly blocks(std::move(m), std::move(diag), std::move(lower));

  SchemeAssembly::DirectFn direct;
  if (shape == FdrLayout::Parallel) {
    direct = [a0, a, c, gamma, n, N](const Vec& w) {
      DirectEval e;
      Vec mean = Vec::Zero(n);
      for (std::size_t i = 0; i < N; ++i) mean += w.segment(static_cast<Index>(i) * n, n);
      mean /= static_cast<double>(N);
      e.x.push_back(a0.resolve(gamma / static_cast<double>(N), mean));
      const Vec x0 = e.x[0];
      e.increment.resize(w.size());
      for (std::size_t i = 0; i < N; ++i) {
        const auto wi = w.segment(static_cast<Index>(i) * n, n);
        Vec xi = a[i].resolve(gamma, 2.0 * x0 - wi - gamma * forward_or_zero(c[i], x0));
        e.increment.segment(static_cast<Index>(i) * n, n) = xi - x0;
        e.x.push_back(std::move(xi));
      }
      return e;
    };
  } else {
    direct = [a0, a, c, gamma, n, N](const Vec& w) {
      DirectEval e;
      const auto seg = [&](std::size_t i) { return w.segment(static_cast<Index>(i - 1) * n, n); };
      e.x.push_back(a0.resolve(gamma, seg(1)));
      e.increment.resize(w.size());
      for (std::size_t i = 1; i <= N; ++i) {
        const Vec prev = e.x[i - 1];
        const Vec cx = forward_or_zero(c[i - 1], prev);
        Vec xi;
        if (i < N) {
          xi = a[i - 1].resolve(0.5 * gamma,
                                prev + 0.5 * (seg(i + 1) - seg(i)) - 0.5 * gamma * cx);
        } else {
          xi = a[i - 1].resolve(gamma, 2.0 * prev - seg(i) - gamma * cx);
        }
        e.increment.segment(static_cast<Index>(i - 1) * n, n) = xi - prev;
        e.x.push_back(std::move(xi));
      }
      return e;
    };
  }

  SchemeAssembly s(std::move(cfg), std::move(blocks), std::move(f), std::move(direct));
  s.alpha = alpha;
  s.sigma = sigma;
  s.dim = n;
  return s;
}

}  // namespace

std::string_view to_string(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::DRS: return "drs";
    case SchemeKind::CP: return "cp";
    case SchemeKind::RelaxedDRS: return "relaxed_drs";
    case SchemeKind::FDR: return "fdr";
    case SchemeKind::ParallelFDR: return "parallel_fdr";
    case SchemeKind::SequentialFDR: return "sequential_fdr";
  }
  return "unknown";
}

SchemeKind parse_scheme_kind(std::string_view name) {
  const std::string s = normalize_name(name);
  for (auto k : {SchemeKind::DRS, SchemeKind::CP, SchemeKind::RelaxedDRS, SchemeKind::FDR,
                 SchemeKind::ParallelFDR, SchemeKind::SequentialFDR}) {
    if (s == to_string(k)) return k;
  }
  if (s == "pr" || s == "peaceman_rachford") return SchemeKind::RelaxedDRS;
  if (s == "chambolle_pock") return SchemeKind::CP;
  if (s == "davis_yin") return SchemeKind::FDR;
  throw Error(Errc::ConfigError, "unknown scheme '" + std::string(name) + "'");
}

SchemeConfig SchemeConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(Errc::ConfigError, "scheme config must be a JSON object");
  SchemeConfig cfg;
  try {
    if (j.contains("kind")) cfg.kind = parse_scheme_kind(j.at("kind").get<std::string>());
    if (j.contains("scheme")) cfg.kind = parse_scheme_kind(j.at("scheme").get<std::string>());
    if (j.contains("sigma")) cfg.sigma = j.at("sigma").get<double>();
    if (j.contains("tau")) cfg.tau = j.at("tau").get<double>();
    if (j.contains("gamma")) cfg.gamma = j.at("gamma").get<double>();
    if (j.contains("alpha")) cfg.alpha = j.at("alpha").get<double>();
    if (j.contains("n_terms")) cfg.n_terms = j.at("n_terms").get<std::size_t>();
    if (j.contains("mu0")) cfg.mu0 = j.at("mu0").get<double>();
    if (j.contains("mu1")) cfg.mu1 = j.at("mu1").get<double>();
    if (j.contains("beta")) cfg.beta = j.at("beta").get<double>();
    if (j.contains("l_norm")) cfg.l_norm = j.at("l_norm").get<double>();
    if (j.contains("theta")) {
      const auto& t = j.at("theta");
      if (t.is_number()) {
        cfg.theta = RelaxationSchedule::constant(t.get<double>());
      } else if (t.is_array()) {
        cfg.theta = RelaxationSchedule::sequence(t.get<std::vector<double>>(),
                                                 j.value("divergence_declared", false));
      } else {
        throw Error(Errc::ConfigError, "theta must be a number or an array");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ConfigError, e.what());
  }
  return cfg;
}

nlohmann::json SchemeConfig::to_json() const {
  nlohmann::json j{{"kind", std::string(to_string(kind))},
                   {"sigma", sigma},
                   {"tau", tau},
                   {"gamma", gamma},
                   {"n_terms", n_terms}};
  if (theta.kind() == RelaxationSchedule::Kind::Constant) {
    j["theta"] = theta.at(0);
  } else {
    j["theta"] = theta.values();
    j["divergence_declared"] = theta.divergence_declared();
  }
  if (alpha) j["alpha"] = *alpha;
  if (mu0) j["mu0"] = *mu0;
  if (mu1) j["mu1"] = *mu1;
  if (beta) j["beta"] = *beta;
  if (l_norm) j["l_norm"] = *l_norm;
  return j;
}

nlohmann::json ParamViolation::to_json() const {
  return {{"severity", severity == Severity::Error ? "error" : "warning"},
          {"code", std::string(to_string(code))},
          {"parameter", parameter},
          {"message", message},
          {"bound", bound}};
}

double relaxed_drs_theta_max(double gamma, double mu0, double mu1) {
  if (mu0 * mu1 == 0.0) return 2.0;
  return 2.0 + 2.0 * gamma * mu0 * mu1 / (mu0 + mu1);
}

double relaxed_drs_alpha(double gamma, double mu0, double mu1) {
  if (mu0 * mu1 == 0.0) return 0.0;
  return -gamma * mu0 * mu1 / (gamma * mu0 * mu1 + mu0 + mu1);
}

double fdr_theta_max(double gamma, double beta) { return 2.0 - gamma * beta / 2.0; }

double fdr_alpha(double gamma, double beta) { return gamma * beta / (4.0 - gamma * beta); }

std::vector<ParamViolation> validate_params(const SchemeConfig& cfg) {
  std::vector<ParamViolation> out;
  check_alpha(out, cfg);
  switch (cfg.kind) {
    case SchemeKind::DRS:
      check_step(out, "sigma", cfg.sigma);
      check_schedule(out, cfg.theta, 2.0, "lambda_k in [0, 2]");
      break;
    case SchemeKind::CP:
      check_step(out, "tau", cfg.tau);
      check_step(out, "sigma", cfg.sigma);
      if (cfg.l_norm && cfg.tau > 0.0 && cfg.sigma > 0.0) {
        const double prod = cfg.tau * cfg.sigma * *cfg.l_norm * *cfg.l_norm;
        if (prod > 1.0 + 1e-12) {
          add(out, Severity::Error, Errc::StepBoundViolated, "tau*sigma",
              "tau*sigma*|L|^2 = " + num(prod), "tau*sigma*|L|^2 <= 1");
        }
      }
      check_schedule(out, cfg.theta, 2.0, "lambda_k in [0, 2]");
      break;
    case SchemeKind::RelaxedDRS: {
      check_step(out, "gamma", cfg.gamma);
      check_nonneg(out, "mu0", cfg.mu0);
      check_nonneg(out, "mu1", cfg.mu1);
      const double mu0 = cfg.mu0.value_or(0.0);
      const double mu1 = cfg.mu1.value_or(0.0);
      const std::string bound = "theta_k in [0, 2 + 2*gamma*mu0*mu1/(mu0 + mu1)]";
      if (mu0 * mu1 == 0.0) {
        for (double t : cfg.theta.values()) {
          if (t >= 2.0) {
            add(out, Severity::Error, Errc::PeacemanRachfordRequiresStrongMonotonicity, "theta",
                "theta = " + num(t) + " needs both operators strongly monotone (mu0*mu1 > 0)",
                bound);
            return out;
          }
        }
      }
      if (mu0 >= 0.0 && mu1 >= 0.0 && cfg.gamma > 0.0) {
        check_schedule(out, cfg.theta, relaxed_drs_theta_max(cfg.gamma, mu0, mu1), bound);
      }
      break;
    }
    case SchemeKind::ParallelFDR:
    case SchemeKind::SequentialFDR:
      if (cfg.n_terms < 1) {
        add(out, Severity::Error, Errc::InconsistentDimensions, "n_terms", "n_terms = 0",
            "N >= 1");
      }
      [[fallthrough]];
    case SchemeKind::FDR: {
      check_step(out, "gamma", cfg.gamma);
      check_nonneg(out, "beta", cfg.beta);
      const double beta = cfg.beta.value_or(0.0);
      if (cfg.gamma > 0.0 && beta > 0.0 && !(cfg.gamma * beta < 4.0)) {
        add(out, Severity::Error, Errc::StepOutOfRange, "gamma",
            "gamma = " + num(cfg.gamma) + " with beta = " + num(beta), "gamma in (0, 4/beta)");
        break;
      }
      if (cfg.gamma > 0.0 && beta == 0.0) {
        add(out, Severity::Warning, Errc::StepOutOfRange, "beta",
            "gamma*beta = 0: no forward term restricts the step", "gamma in (0, 4/beta)");
      }
      if (cfg.gamma > 0.0 && beta >= 0.0) {
        check_schedule(out, cfg.theta, fdr_theta_max(cfg.gamma, beta),
                       "theta_k in [0, 2 - gamma*beta/2]");
      }
      break;
    }
  }
  return out;
}

bool has_errors(const std::vector<ParamViolation>& violations) {
  return std::any_of(violations.begin(), violations.end(),
                     [](const ParamViolation& p) { return p.severity == Severity::Error; });
}

// --- SchemeAssembly -----------------------------------------------------------

DirectEval SchemeAssembly::evaluate(const Vec& state) const {
  if (state.size() != state_dim()) throw Error(Errc::DimensionMismatch, "direct state length");
  return direct(state);
}

Vec SchemeAssembly::direct_step(const Vec& state, double theta) const {
  return state + theta * evaluate(state).increment;
}

Index SchemeAssembly::state_dim() const {
  return kind == SchemeKind::CP ? blocks.layout().total_dim() : factor.rank();
}

Vec SchemeAssembly::state_to_reduced(const Vec& state) const {
  if (state.size() != state_dim()) throw Error(Errc::DimensionMismatch, "direct state length");
  if (kind == SchemeKind::CP) return factor.apply_cstar(BlockVector(blocks.layout(), state));
  return (1.0 + alpha) * state;
}

Vec SchemeAssembly::reduced_to_state(const Vec& w) const {
  if (kind == SchemeKind::CP) return factor.lift(w).data();
  if (w.size() != factor.rank()) throw Error(Errc::DimensionMismatch, "reduced vector length");
  return w / (1.0 + alpha);
}

BlockVector SchemeAssembly::state_to_full(const Vec& state) const {
  if (kind == SchemeKind::CP) return BlockVector(blocks.layout(), state);
  return factor.lift(state_to_reduced(state));
}

RelaxationSchedule SchemeAssembly::lambda_schedule() const {
  return config.theta.scaled(1.0 + alpha);
}

Vec SchemeAssembly::primal_from_reduced(const Vec& w) const {
  return blocks.solve(factor.apply_c(w)).block(0);
}

// --- builders -------------------------------------------------------------------

SchemeAssembly build_drs(const OperatorBlock& a, const OperatorBlock& b, Index n, double sigma,
                         RelaxationSchedule lambda) {
  SchemeConfig cfg;
  cfg.kind = SchemeKind::DRS;
  cfg.sigma = sigma;
  cfg.theta = std::move(lambda);
  const auto v = validate_params(cfg);
  throw_on_errors(v);
  require_dims(a);
  require_dims(b);

  const BlockLayout layout{n, n};
  Mat cmat(2 * n, n);
  cmat << identity(n), -identity(n);
  Preconditioner m(cmat * cmat.transpose(), layout);
  Factorization f = Factorization::from_c(cmat, layout);
  std::vector<DiagonalSolve> diag{shifted_resolvent(1.0, sigma, a),
                                  shifted_inverse_resolvent(1.0, sigma, b)};
  BlockAssembly blocks(std::move(m), std::move(diag), {scalar_coupling(1, 0, -2.0)});

  auto direct = [a, b, sigma](const Vec& w) {
    DirectEval e;
    e.x.push_back(a.resolve(sigma, w));
    e.x.push_back(b.resolve(sigma, 2.0 * e.x[0] - w));
    e.increment = e.x[1] - e.x[0];
    return e;
  };
  SchemeAssembly s(std::move(cfg), std::move(blocks), std::move(f), std::move(direct));
  s.sigma = sigma;
  s.dim = n;
  s.warnings = warnings_of(v);
  return s;
}

double operator_norm_estimate(const Mat& l, std::size_t max_steps, double tol) {
  if (l.size() == 0) return 0.0;
  std::mt19937_64 rng(0x5eed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec x(l.cols());
  for (Index i = 0; i < x.size(); ++i) x(i) = normal(rng);
  x.normalize();
  double est = 0.0;
  for (std::size_t k = 0; k < max_steps; ++k) {
    Vec y = l.transpose() * (l * x);
    const double ny = y.norm();
    if (ny == 0.0) return 0.0;
    const double next = std::sqrt(x.dot(y));
    x = y / ny;
    if (k > 0 && std::abs(next - est) <= tol * next) {
      est = next;
      break;
    }
    est = next;
  }
  return std::sqrt(x.dot(l.transpose() * (l * x)));
}

SchemeAssembly build_cp(const OperatorBlock& a, const OperatorBlock& b, const Mat& l, double tau,
                        double sigma, RelaxationSchedule lambda) {
  SchemeConfig cfg;
  cfg.kind = SchemeKind::CP;
  cfg.tau = tau;
  cfg.sigma = sigma;
  cfg.theta = std::move(lambda);
  cfg.l_norm = operator_norm_estimate(l);
  const auto v = validate_params(cfg);
  throw_on_errors(v);
  require_dims(a);
  require_dims(b);

  const Index n = l.cols();
  const Index mdim = l.rows();
  const BlockLayout layout{n, mdim};
  Mat mm(n + mdim, n + mdim);
  mm << identity(n) / tau, -l.transpose(), -l, identity(mdim) / sigma;
  Preconditioner m(mm, layout);
  Factorization f = factor_psd(m);
  std::vector<DiagonalSolve> diag{shifted_resolvent(1.0 / tau, 1.0, a),
                                  shifted_inverse_resolvent(1.0 / sigma, 1.0, b)};
  BlockAssembly blocks(std::move(m), std::move(diag), {matrix_coupling(1, 0, -2.0 * l)});

  auto direct = [a, b, l, tau, sigma, n, mdim](const Vec& u) {
    const auto x = u.head(n);
    const auto y = u.tail(mdim);
    DirectEval e;
    e.x.push_back(a.resolve(tau, x - tau * (l.transpose() * y)));
    e.x.push_back(resolvent_of_inverse(sigma, b, y + sigma * (l * (2.0 * e.x[0] - x))));
    e.increment.resize(u.size());
    e.increment << e.x[0] - x, e.x[1] - y;
    return e;
  };
  SchemeAssembly s(std::move(cfg), std::move(blocks), std::move(f), std::move(direct));
  s.sigma = sigma;
  s.dim = n;
  s.warnings = warnings_of(v);
  return s;
}

SchemeAssembly build_relaxed_drs(const OperatorBlock& a0, const OperatorBlock& a1, Index n,
                                 double gamma, RelaxationSchedule theta, double mu0, double mu1) {
  SchemeConfig cfg;
  cfg.kind = SchemeKind::RelaxedDRS;
  cfg.gamma = gamma;
  cfg.theta = std::move(theta);
  cfg.mu0 = mu0;
  cfg.mu1 = mu1;
  const auto v = validate_params(cfg);
  throw_on_errors(v);
  auto s = build_fdr_family(cfg, FdrLayout::Parallel, a0, {a1}, {}, n,
                            relaxed_drs_alpha(gamma, mu0, mu1));
  s.warnings = warnings_of(v);
  return s;
}

namespace {

SchemeAssembly build_forward_scheme(SchemeKind kind, FdrLayout shape, const OperatorBlock& a0,
                                    const std::vector<OperatorBlock>& a,
                                    const std::vector<std::optional<OperatorBlock>>& c, Index n,
                                    double gamma, RelaxationSchedule theta,
                                    std::optional<double> beta) {
  SchemeConfig cfg;
  cfg.kind = kind;
  cfg.gamma = gamma;
  cfg.theta = std::move(theta);
  cfg.n_terms = a.size();
  cfg.beta = resolve_beta(c, beta);
  const auto v = validate_params(cfg);
  throw_on_errors(v);
  const double alpha = fdr_alpha(gamma, *cfg.beta);
  auto s = build_fdr_family(cfg, shape, a0, a, c, n, alpha);
  s.warnings = warnings_of(v);
  return s;
}

}  // namespace

SchemeAssembly build_fdr(const OperatorBlock& a0, const OperatorBlock& a1,
                         const std::optional<OperatorBlock>& c, Index n, double gamma,
                         RelaxationSchedule theta, std::optional<double> beta) {
  return build_forward_scheme(SchemeKind::FDR, FdrLayout::Parallel, a0, {a1}, {c}, n, gamma,
                              std::move(theta), beta);
}

SchemeAssembly build_parallel_fdr(const OperatorBlock& a0, const std::vector<OperatorBlock>& a,
                                  const std::vector<std::optional<OperatorBlock>>& c, Index n,
                                  double gamma, RelaxationSchedule theta,
                                  std::optional<double> beta) {
  return build_forward_scheme(SchemeKind::ParallelFDR, FdrLayout::Parallel, a0, a, c, n, gamma,
                              std::move(theta), beta);
}

SchemeAssembly build_sequential_fdr(const OperatorBlock& a0, const std::vector<OperatorBlock>& a,
                                    const std::vector<std::optional<OperatorBlock>>& c, Index n,
                                    double gamma, RelaxationSchedule theta,
                                    std::optional<double> beta) {
  return build_forward_scheme(SchemeKind::SequentialFDR, FdrLayout::Sequential, a0, a, c, n,
                              gamma, std::move(theta), beta);
}

SchemeAssembly build_scheme(const SchemeConfig& cfg, const SchemeProblem& p) {
  const auto need = [&](std::size_t k) {
    if (p.ops.size() < k) {
      throw Error(Errc::MissingOperator, std::string(to_string(cfg.kind)) + " needs " +
                                             std::to_string(k) + " operators");
    }
  };
  const auto forward = [&](std::size_t i) -> std::optional<OperatorBlock> {
    return i < p.forwards.size() ? p.forwards[i] : std::nullopt;
  };
  SchemeAssembly s = [&]() -> SchemeAssembly {
    switch (cfg.kind) {
      case SchemeKind::DRS:
        need(2);
        return build_drs(p.ops[0], p.ops[1], p.dim, cfg.sigma, cfg.theta);
      case SchemeKind::CP:
        need(2);
        if (!p.l) throw Error(Errc::MissingOperator, "cp needs the linear map L");
        return build_cp(p.ops[0], p.ops[1], *p.l, cfg.tau, cfg.sigma, cfg.theta);
      case SchemeKind::RelaxedDRS:
        need(2);
        return build_relaxed_drs(p.ops[0], p.ops[1], p.dim, cfg.gamma, cfg.theta,
                                 cfg.mu0.value_or(0.0), cfg.mu1.value_or(0.0));
      case SchemeKind::FDR:
        need(2);
        return build_fdr(p.ops[0], p.ops[1], forward(0), p.dim, cfg.gamma, cfg.theta, cfg.beta);
      case SchemeKind::ParallelFDR:
      case SchemeKind::SequentialFDR: {
        need(2);
        std::vector<OperatorBlock> rest(p.ops.begin() + 1, p.ops.end());
        if (cfg.n_terms != rest.size()) {
          throw Error(Errc::InconsistentDimensions,
                      "n_terms = " + std::to_string(cfg.n_terms) + " but " +
                          std::to_string(rest.size()) + " operators A_i were given");
        }
        std::vector<std::optional<OperatorBlock>> cs;
        for (std::size_t i = 0; i < rest.size(); ++i) cs.push_back(forward(i));
        return cfg.kind == SchemeKind::ParallelFDR
                   ? build_parallel_fdr(p.ops[0], rest, cs, p.dim, cfg.gamma, cfg.theta, cfg.beta)
                   : build_sequential_fdr(p.ops[0], rest, cs, p.dim, cfg.gamma, cfg.theta,
                                          cfg.beta);
      }
    }
    throw Error(Errc::ConfigError, "unknown scheme kind");
  }();
  if (cfg.alpha && s.kind != SchemeKind::DRS && s.kind != SchemeKind::CP) {
    // an explicit shift replaces the derived one; rebuild with it
    std::vector<OperatorBlock> rest(p.ops.begin() + 1, p.ops.end());
    std::vector<std::optional<OperatorBlock>> cs;
    for (std::size_t i = 0; i < rest.size(); ++i) cs.push_back(forward(i));
    SchemeConfig c2 = s.config;
    c2.alpha = cfg.alpha;
    auto warnings = s.warnings;
    s = build_fdr_family(c2,
                         cfg.kind == SchemeKind::SequentialFDR ? FdrLayout::Sequential
                                                               : FdrLayout::Parallel,
                         p.ops[0], rest, cs, p.dim, *cfg.alpha);
    s.warnings = warnings;
  }
  return s;
}

IterationTrace direct_iterate(const SchemeAssembly& s, const Vec& state0,
                              const RelaxationSchedule& theta, const DirectOptions& options) {
  if (state0.size() != s.state_dim()) throw Error(Errc::DimensionMismatch, "initial state length");
  return km_iterate(state0, theta, IterateOptions{options.base.stop, options.base.keep_iterates, {}},
                    [&](const Vec& state) {
                      DirectEval e = s.evaluate(state);
                      KmStep step;
                      if (s.kind == SchemeKind::CP) {
                        step.m_norm = m_seminorm(s.blocks.preconditioner(),
                                                 BlockVector(s.blocks.layout(), e.increment));
                      } else {
                        step.m_norm = e.increment.norm();
                      }
                      if (options.primal_reference) {
                        if (options.primal_index >= e.x.size()) {
                          throw Error(Errc::ConfigError, "primal index out of range");
                        }
                        step.dist_ref = (e.x[options.primal_index] - *options.primal_reference).norm();
                      }
                      step.displacement = std::move(e.increment);
                      return step;
                    });
}

RunMode parse_run_mode(std::string_view name) {
  const std::string s = normalize_name(name);
  if (s == "direct") return RunMode::Direct;
  if (s == "block") return RunMode::Block;
  if (s == "both") return RunMode::Both;
  throw Error(Errc::ConfigError, "mode must be direct, block or both (got '" + std::string(name) + "')");
}

RunResult run(const SchemeAssembly& s, RunMode mode, const Vec& state0,
              const DirectOptions& options) {
  const Vec x0 = state0.size() ? state0 : Vec::Zero(s.state_dim()).eval();
  RunResult r;
  if (mode != RunMode::Block) {
    r.direct = direct_iterate(s, x0, s.config.theta, options);
    r.primal = s.evaluate(r.direct->final_iterate).x.at(options.primal_index);
  }
  if (mode != RunMode::Direct) {
    IterateOptions bo = options.base;
    if (mode == RunMode::Both) {
      bo.keep_iterates = true;
      // lock the block run to the same number of steps as the direct one
      bo.stop.max_iters = r.direct->iterations();
      bo.stop.tol = -1.0;
    }
    r.block = rppp_iterate(s.blocks, s.factor, s.state_to_reduced(x0), s.lambda_schedule(), bo);
    if (mode == RunMode::Block) r.primal = s.primal_from_reduced(r.block->final_iterate);
  }
  if (mode == RunMode::Both) {
    IterateOptions dopt = options.base;
    dopt.keep_iterates = true;
    dopt.stop.max_iters = r.direct->iterations();
    dopt.stop.tol = -1.0;
    const IterationTrace d = direct_iterate(s, x0, s.config.theta, DirectOptions{dopt, {}, 0});
    double dev = 0.0;
    const std::size_t count = std::min(d.iterates.size(), r.block->iterates.size());
    for (std::size_t k = 0; k < count; ++k) {
      dev = std::max(dev, (s.state_to_reduced(d.iterates[k]) - r.block->iterates[k]).norm());
    }
    r.max_deviation = dev;
    if (!options.base.keep_iterates) r.block->iterates.clear();
  }
  return r;
}

}  // namespace proxsplit
