#include "proxsplit/checks.hpp"

#include "proxsplit/errors.hpp"

#include <algorithm>
#include <cmath>

namespace proxsplit {

namespace {

Vec normal_vec(std::mt19937_64& rng, Index n, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Vec v(n);
  for (Index i = 0; i < n; ++i) v(i) = normal(rng);
  return v;
}

Mat normal_mat(std::mt19937_64& rng, Index r, Index c, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Mat m(r, c);
  for (Index i = 0; i < r; ++i) {
    for (Index j = 0; j < c; ++j) m(i, j) = normal(rng);
  }
  return m;
}

Mat psd(std::mt19937_64& rng, Index n) {
  const Mat g = normal_mat(rng, n, n);
  return g * g.transpose() / static_cast<double>(n);
}

Mat monotone(std::mt19937_64& rng, Index n, double shift) {
  const Mat k = normal_mat(rng, n, n, 0.5);
  return psd(rng, n) + 0.5 * (k - k.transpose()) + shift * Mat::Identity(n, n);
}

QuadraticFunction quadratic(std::mt19937_64& rng, Index n, double delta) {
  return QuadraticFunction(0.5 * psd(rng, n), normal_vec(rng, n), delta);
}

// cycles through prox-type, linear and smooth-but-proxed operators
OperatorBlock backward_term(std::mt19937_64& rng, Index n, std::size_t i) {
  switch (i % 3) {
    case 0: return linear_operator(monotone(rng, n, 0.0));
    case 1: return pow32_shifted(normal_vec(rng, n), 0.7);
    default: return quadratic_operator(quadratic(rng, n, 0.0));
  }
}

}  // namespace

RandomInstance random_instance(SchemeKind kind, Index n, std::size_t n_terms,
                               std::mt19937_64& rng) {
  if (n < 1) throw Error(Errc::DimensionMismatch, "n must be positive");
  RandomInstance inst;
  SchemeConfig& cfg = inst.config;
  SchemeProblem& p = inst.problem;
  cfg.kind = kind;
  p.dim = n;
  switch (kind) {
    case SchemeKind::DRS:
      p.ops = {l1_shifted(normal_vec(rng, n), 0.5), linear_operator(monotone(rng, n, 0.0))};
      cfg.sigma = 0.7;
      cfg.theta = RelaxationSchedule::constant(1.5);
      break;
    case SchemeKind::CP: {
      const Mat l = normal_mat(rng, n + 2, n, 1.0 / std::sqrt(static_cast<double>(n)));
      p.l = l;
      p.ops = {l1_shifted(normal_vec(rng, n), 0.5), quadratic_operator(quadratic(rng, n + 2, 1.0))};
      // exact norm, so that M is PSD to rounding
      const double norm = Eigen::JacobiSVD<Mat>(l).singularValues()(0);
      cfg.tau = 0.5 / norm;
      cfg.sigma = 2.0 / norm;
      break;
    }
    case SchemeKind::RelaxedDRS: {
      p.ops = {quadratic_operator(quadratic(rng, n, 1.0)), linear_operator(monotone(rng, n, 1.0))};
      cfg.mu0 = p.ops[0].mu;
      cfg.mu1 = p.ops[1].mu;
      cfg.gamma = 1.0;
      cfg.theta = RelaxationSchedule::constant(1.5);
      break;
    }
    case SchemeKind::FDR: {
      p.ops = {l1_shifted(normal_vec(rng, n), 0.5), linear_operator(monotone(rng, n, 0.0))};
      const auto c = quadratic_operator(quadratic(rng, n, 0.1));
      p.forwards = {c};
      cfg.gamma = 1.0 / *c.beta;
      break;
    }
    case SchemeKind::ParallelFDR:
    case SchemeKind::SequentialFDR: {
      p.ops = {l1_shifted(normal_vec(rng, n), 0.5)};
      double beta = 0.0;
      for (std::size_t i = 0; i < n_terms; ++i) {
        p.ops.push_back(backward_term(rng, n, i));
        const auto c = quadratic_operator(quadratic(rng, n, 0.1));
        beta = std::max(beta, *c.beta);
        p.forwards.push_back(c);
      }
      cfg.n_terms = n_terms;
      cfg.gamma = 1.0 / beta;
      break;
    }
  }
  return inst;
}

const std::vector<SchemeKind>& suite_schemes() {
  static const std::vector<SchemeKind> kinds{SchemeKind::DRS,         SchemeKind::CP,
                                             SchemeKind::RelaxedDRS,  SchemeKind::FDR,
                                             SchemeKind::ParallelFDR, SchemeKind::SequentialFDR};
  return kinds;
}

nlohmann::json PropertyResult::to_json() const {
  nlohmann::json j{{"property", property},
                   {"passed", passed},
                   {"worst", worst},
                   {"tolerance", tolerance}};
  if (!scheme.empty()) j["scheme"] = scheme;
  return j;
}

Vec reduced_fixed_point(const SchemeAssembly& s, double tol, std::size_t max_iters) {
  IterateOptions opt;
  opt.stop = {tol, false, max_iters};
  const auto trace = rppp_iterate(s.blocks, s.factor, Vec::Zero(s.factor.rank()),
                                  RelaxationSchedule::constant(1.0), opt);
  return trace.final_iterate;
}

namespace {

PropertyResult result(std::string property, std::string scheme, double worst, double tol) {
  return {std::move(property), std::move(scheme), worst <= tol, worst, tol};
}

// max_k |w^k - C^T u^k| over `iterations` PPP steps, plus the direct/block gap
std::pair<double, double> reduction_gaps(const SchemeAssembly& s, std::mt19937_64& rng,
                                         std::size_t iterations) {
  const BlockVector u0 = random_block_vector(s.blocks.layout(), rng);
  IterateOptions opt;
  opt.stop = {-1.0, false, iterations};  // fixed step count, even at an exact fixed point
  opt.keep_iterates = true;
  const auto lambda = s.lambda_schedule();
  const auto full = ppp_iterate(s.blocks, u0, lambda, opt);
  const auto reduced = rppp_iterate(s.blocks, s.factor, s.factor.apply_cstar(u0), lambda, opt);
  double gap = 0.0;
  const std::size_t count = std::min(full.iterates.size(), reduced.iterates.size());
  for (std::size_t k = 0; k < count; ++k) {
    const Vec w = s.factor.apply_cstar(BlockVector(s.blocks.layout(), full.iterates[k]));
    gap = std::max(gap, (w - reduced.iterates[k]).norm());
  }
  if (full.iterates.size() != reduced.iterates.size()) gap = INFINITY;

  DirectOptions dopt;
  dopt.base = opt;
  const auto both = run(s, RunMode::Both, s.reduced_to_state(reduced.iterates.front()), dopt);
  return {gap, both.max_deviation.value_or(INFINITY)};
}

double fejer_worst(const SchemeAssembly& s, std::mt19937_64& rng, std::size_t iterations) {
  const Vec w_star = reduced_fixed_point(s);
  const BlockVector u_star = s.blocks.solve(s.factor.apply_c(w_star));
  IterateOptions opt;
  opt.stop = {-1.0, false, iterations};  // fixed step count, even at an exact fixed point
  opt.keep_iterates = true;
  const auto trace = ppp_iterate(s.blocks, random_block_vector(s.blocks.layout(), rng),
                                 s.lambda_schedule(), opt);
  const auto report = monitor_fejer(trace, s.blocks.preconditioner(), u_star, 0.0);
  return std::max({report.fejer.worst_excess, report.residual_decrease.worst_excess, 0.0});
}

double n1_gap(std::mt19937_64& rng, Index n, std::size_t iterations) {
  const auto a0 = l1_shifted(normal_vec(rng, n), 0.5);
  const auto a1 = linear_operator(monotone(rng, n, 0.0));
  const auto c = quadratic_operator(quadratic(rng, n, 0.1));
  const double gamma = 1.0 / *c.beta;
  const auto theta = RelaxationSchedule::constant(1.0);
  const auto fdr = build_fdr(a0, a1, c, n, gamma, theta);
  const auto par = build_parallel_fdr(a0, {a1}, {c}, n, gamma, theta);
  const auto seq = build_sequential_fdr(a0, {a1}, {c}, n, gamma, theta);
  Vec x = normal_vec(rng, n);
  Vec y = x;
  Vec z = x;
  double gap = 0.0;
  for (std::size_t k = 0; k < iterations; ++k) {
    x = fdr.direct_step(x, 1.0);
    y = par.direct_step(y, 1.0);
    z = seq.direct_step(z, 1.0);
    gap = std::max({gap, (x - y).norm(), (x - z).norm()});
  }
  return gap;
}

}  // namespace

std::vector<PropertyResult> run_property_suite(const SuiteOptions& o) {
  std::mt19937_64 rng(o.seed);
  std::vector<PropertyResult> out;
  for (const SchemeKind kind : suite_schemes()) {
    const auto inst = random_instance(kind, o.n, o.n_terms, rng);
    const auto s = build_scheme(inst.config, inst.problem);
    const std::string name(to_string(kind));

    const auto fne = check_firm_nonexpansive(s.blocks, rng, o.pairs, 1.0, 1e-9);
    out.push_back(result("M-firm nonexpansiveness of T", name, std::max(fne.worst_excess, 0.0),
                         1e-9));
    out.push_back(result("M-Fejer monotonicity", name, fejer_worst(s, rng, o.iterations), 1e-10));
    const auto [reduced, direct] = reduction_gaps(s, rng, o.iterations);
    out.push_back(result("reduced iterates equal C^T u^k", name, reduced, 1e-10));
    out.push_back(result("direct update matches block update", name, direct, 1e-9));
  }
  double woodbury = 0.0;
  std::uniform_int_distribution<Index> size(1, 8);
  for (std::size_t i = 0; i < o.woodbury_instances; ++i) {
    const Index d = size(rng);
    const Index r = std::uniform_int_distribution<Index>(1, d)(rng);
    woodbury = std::max(woodbury, check_woodbury(monotone(rng, d, 0.1), normal_mat(rng, d, r), rng));
  }
  out.push_back(result("Woodbury-Moreau identity", "", woodbury, 1e-9));
  out.push_back(result("sequential FDR (N=1) = FDR = parallel FDR (N=1)", "", n1_gap(rng, o.n, o.iterations),
                       1e-12));
  return out;
}

}  // namespace proxsplit
