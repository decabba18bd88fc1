// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include "oracles.hpp"
#include "rate_cases.hpp"
#include "proxsplit/checks.hpp"
#include "proxsplit/errors.hpp"
#include "proxsplit/portfolio.hpp"
#include "proxsplit/rates.hpp"
#include "proxsplit/schemes.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

using namespace proxsplit;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

// |u|_M^2 straight from the dense matrix
double msq(const Mat& m, const Vec& u) { return u.dot(m * u); }

RandomInstance instance(SchemeKind kind, std::mt19937_64& rng) {
  return random_instance(kind, 10, 3, rng);
}

const std::vector<SchemeKind> kReduced{SchemeKind::DRS, SchemeKind::RelaxedDRS, SchemeKind::FDR,
                                       SchemeKind::ParallelFDR, SchemeKind::SequentialFDR};

Outcome reduction_equivalence() {
  std::mt19937_64 rng(101);
  double worst = 0.0;
  for (const auto kind : kReduced) {
    for (int trial = 0; trial < 3; ++trial) {
      const auto inst = instance(kind, rng);
      const auto s = build_scheme(inst.config, inst.problem);
      const auto& layout = s.blocks.layout();
      const Mat c = s.factor.c_matrix();
      BlockVector u = random_block_vector(layout, rng);
      Vec w = c.transpose() * u.data();
      const auto lambda = s.lambda_schedule();
      for (std::size_t k = 0; k < 200; ++k) {
        const double l = lambda.at(k);
        u = u + l * (evaluate_T(s.blocks, u) - u);
        w = w + l * (evaluate_Ttilde(s.blocks, s.factor, w) - w);
        worst = std::max(worst, (w - c.transpose() * u.data()).norm());
      }
    }
  }
  return {worst <= 1e-10, "max_k |w^k - C^T u^k| = " + sci(worst) + " (tol 1e-10)"};
}

Outcome firm_nonexpansive() {
  std::mt19937_64 rng(202);
  double worst = -INFINITY;
  std::string where;
  for (const auto kind : suite_schemes()) {
    const auto inst = instance(kind, rng);
    const auto s = build_scheme(inst.config, inst.problem);
    const Mat& m = s.blocks.preconditioner().matrix();
    double local = -INFINITY;
    for (int i = 0; i < 1000; ++i) {
      const auto u = random_block_vector(s.blocks.layout(), rng, 2.0);
      const auto v = random_block_vector(s.blocks.layout(), rng, 2.0);
      const Vec tu = evaluate_T(s.blocks, u).data();
      const Vec tv = evaluate_T(s.blocks, v).data();
      const Vec du = u.data() - v.data();
      const Vec dt = tu - tv;
      local = std::max(local, msq(m, dt) + msq(m, du - dt) - msq(m, du));
    }
    if (local > worst) {
      worst = local;
      where = std::string(to_string(kind));
    }
  }
  return {worst <= 1e-9, "worst excess " + sci(worst) + " (" + where + ", slack 1e-9), 6 schemes x 1000 pairs"};
}

Outcome fejer() {
  std::mt19937_64 rng(303);
  double worst = -INFINITY;
  for (const auto kind : suite_schemes()) {
    const auto inst = instance(kind, rng);
    const auto s = build_scheme(inst.config, inst.problem);
    const Mat& m = s.blocks.preconditioner().matrix();
    const Vec w_star = reduced_fixed_point(s, 1e-14, 500000);
    const Vec u_star = s.blocks.solve(s.factor.apply_c(w_star)).data();
    if ((evaluate_T(s.blocks, BlockVector(s.blocks.layout(), u_star)).data() - u_star).norm() > 1e-9) {
      return {false, std::string(to_string(kind)) + ": reference is not a fixed point"};
    }
    BlockVector u = random_block_vector(s.blocks.layout(), rng, 3.0);
    const auto lambda = s.lambda_schedule();
    double prev = std::sqrt(msq(m, u.data() - u_star));
    for (std::size_t k = 0; k < 500; ++k) {
      u = u + lambda.at(k) * (evaluate_T(s.blocks, u) - u);
      const double d = std::sqrt(msq(m, u.data() - u_star));
      worst = std::max(worst, d - prev);
      prev = d;
    }
  }
  return {worst <= 1e-10, "max_k (|u^{k+1}-u*|_M - |u^k-u*|_M) = " + sci(worst) + " (slack 1e-10), 500 iterations x 6 schemes"};
}

Outcome woodbury() {
  std::mt19937_64 rng(404);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Index d = 1 + i % 8;
    const Index r = 1 + (i / 8) % d;
    const Mat a = oracle::random_monotone(rng, d, 0.05);
    const Mat c = oracle::random_mat(rng, d, r);
    const Mat id = Mat::Identity(r, r);
    const Mat lhs = (id + c.transpose() * a.fullPivLu().inverse() * c).fullPivLu().inverse();
    const Mat rhs = id - c.transpose() * (c * c.transpose() + a).fullPivLu().inverse() * c;
    worst = std::max(worst, (lhs - rhs).cwiseAbs().maxCoeff());
    worst = std::max(worst, check_woodbury(a, c, rng));
  }
  return {worst <= 1e-9, "max residual " + sci(worst) + " on 100 instances, d <= 8 (tol 1e-9)"};
}

Outcome structural() {
  std::mt19937_64 rng(505);
  const Index n = 8;
  double seq_gap = 0.0;
  double drs_gap = 0.0;
  double cp_gap = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    const auto a0 = l1_shifted(oracle::random_vec(rng, n), 0.5);
    const auto a1 = linear_operator(oracle::random_monotone(rng, n));
    const auto c = quadratic_operator(
        QuadraticFunction(oracle::random_psd(rng, n, 4), oracle::random_vec(rng, n), 0.1));
    const double gamma = 2.0 / *c.beta;
    const auto theta = RelaxationSchedule::constant(1.0);
    const auto fdr = build_fdr(a0, a1, c, n, gamma, theta);
    const auto par = build_parallel_fdr(a0, {a1}, {c}, n, gamma, theta);
    const auto seq = build_sequential_fdr(a0, {a1}, {c}, n, gamma, theta);
    Vec x = oracle::random_vec(rng, n);
    Vec y = x;
    Vec z = x;
    for (int k = 0; k < 200; ++k) {
      x = fdr.direct_step(x, 1.0);
      y = par.direct_step(y, 1.0);
      z = seq.direct_step(z, 1.0);
      seq_gap = std::max({seq_gap, (x - y).norm(), (x - z).norm()});
    }

    const auto fdr0 = build_fdr(a0, a1, std::nullopt, n, 0.8, theta);
    const auto drs = build_drs(a0, a1, n, 0.8);
    Vec p = oracle::random_vec(rng, n);
    Vec q = p;
    for (int k = 0; k < 200; ++k) {
      p = fdr0.direct_step(p, 1.0);
      q = drs.direct_step(q, 1.0);
      drs_gap = std::max(drs_gap, (p - q).norm());
    }

    const auto cp = build_cp(a0, a1, Mat::Identity(n, n), 1.0, 1.0);
    const auto drs1 = build_drs(a0, a1, n, 1.0);
    Vec u(2 * n);
    u << oracle::random_vec(rng, n), oracle::random_vec(rng, n);
    Vec w = u.head(n) - u.tail(n);
    for (int k = 0; k < 200; ++k) {
      const Vec x_drs = drs1.evaluate(w).x[0];
      u = cp.direct_step(u, 1.0);
      w = drs1.direct_step(w, 1.0);
      cp_gap = std::max(cp_gap, (u.head(n) - x_drs).norm());
    }
  }
  const bool pass = seq_gap <= 1e-12 && drs_gap <= 1e-12 && cp_gap <= 1e-12;
  return {pass, "SeqFDR(N=1)/FDR/ParFDR(N=1) " + sci(seq_gap) + ", FDR(C=0)/DRS " + sci(drs_gap) +
                    ", CP(L=I)/DRS x-iterates " + sci(cp_gap) + " (tol 1e-12)"};
}

Outcome degenerate_cp() {
  std::mt19937_64 rng(606);
  const Index n = 20;
  const Index m = 30;
  const Mat l = oracle::random_mat(rng, m, n, 1.0 / std::sqrt(static_cast<double>(n)));
  const Vec center = oracle::random_vec(rng, n);
  const Vec b = oracle::random_vec(rng, m);
  // f = 0.2 |x - center|_1, g(z) = |z - b|^2 / 2
  const auto a = l1_shifted(center, 0.2);
  const QuadraticFunction g(Mat::Zero(m, m), b, 1.0);
  const double norm = operator_norm_estimate(l);
  const double exact = Eigen::JacobiSVD<Mat>(l).singularValues()(0);
  const double tau = 1.0 / norm;
  const double sigma = 1.0 / norm;
  const double product = tau * sigma * exact * exact;
  const auto s = build_cp(a, quadratic_operator(g), l, tau, sigma);
  DirectOptions o;
  o.base.stop = {1e-6, false, 100000};
  const auto trace = direct_iterate(s, Vec::Zero(n + m), s.config.theta, o);
  // optimality of the primal point: -L^T grad g(Lx) in d f(x)
  const Vec x = trace.final_iterate.head(n);
  const Vec r = l.transpose() * g.gradient(l * x);
  double gap = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double d = x(i) - center(i);
    gap = std::max(gap, std::abs(d) > 1e-6 ? std::abs(r(i) + 0.2 * (d > 0 ? 1 : -1))
                                           : std::max(0.0, std::abs(r(i)) - 0.2));
  }
  const bool pass = trace.converged && trace.final_residual() <= 1e-6 &&
                    std::abs(product - 1.0) <= 1e-10;
  return {pass, "tau sigma |L|^2 = 1 " + sci(product - 1.0) + ", residual " +
                    sci(trace.final_residual()) + " after " + std::to_string(trace.iterations()) +
                    " iterations (limit 1e5), inclusion gap " + sci(gap)};
}

Outcome linear_rates() {
  std::mt19937_64 rng(707);
  bool pass = true;
  std::ostringstream out;
  for (const auto& inst : ratecase::instances(rng)) {
    if (inst.name == "3b") continue;
    const auto cert = drs_contraction_factor(inst.case_id, 1.0, 1.0, 1.0, inst.side);
    const double measured = ratecase::measured_rate(inst, rng);
    pass = pass && std::abs(cert.rate - 2.0 / 3.0) < 1e-15 && measured <= cert.rate + 0.01;
    out << inst.name << " " << sci(measured) << "  ";
  }
  return {pass, "measured ratios " + out.str() + "(certified 0.667 + 0.01)"};
}

Outcome peaceman_rachford() {
  std::mt19937_64 rng(808);
  const Index n = 10;
  const QuadraticFunction f(oracle::random_psd(rng, n, 3) / 10.0, oracle::random_vec(rng, n), 1.0);
  const Mat k = Mat::Identity(n, n) + ratecase::skew(rng, n, 0.5);
  const auto a0 = quadratic_operator(f);
  const auto a1 = linear_operator(k);
  const double theta_max = relaxed_drs_theta_max(1.0, 1.0, 1.0);
  const auto s = build_relaxed_drs(a0, a1, n, 1.0, RelaxationSchedule::constant(2.0), 1.0, 1.0);
  DirectOptions o;
  o.base.stop = {1e-12, false, 100000};
  const auto trace = direct_iterate(s, oracle::random_vec(rng, n), RelaxationSchedule::constant(2.0), o);
  const Vec x = s.evaluate(trace.final_iterate).x[0];
  const double inclusion = (f.gradient(x) + k * x).norm();

  int rejected = 0;
  for (auto [mu0, mu1] : {std::pair{0.0, 1.0}, std::pair{1.0, 0.0}, std::pair{0.0, 0.0}}) {
    SchemeConfig cfg;
    cfg.kind = SchemeKind::RelaxedDRS;
    cfg.theta = RelaxationSchedule::constant(2.0);
    cfg.mu0 = mu0;
    cfg.mu1 = mu1;
    for (const auto& v : validate_params(cfg)) {
      if (v.severity == Severity::Error &&
          v.code == Errc::PeacemanRachfordRequiresStrongMonotonicity) {
        ++rejected;
        break;
      }
    }
  }
  const bool pass = std::abs(theta_max - 3.0) < 1e-15 && trace.converged && inclusion <= 1e-8 &&
                    rejected == 3;
  return {pass, "theta_max " + sci(theta_max) + ", converged in " +
                    std::to_string(trace.iterations()) + " iterations, |A0 x + A1 x| = " +
                    sci(inclusion) + ", rejected " + std::to_string(rejected) + "/3 with mu0 mu1 = 0"};
}

Outcome parameter_gates() {
  struct Tuple {
    SchemeKind kind;
    double gamma, beta, theta, mu0, mu1;
  };
  std::vector<Tuple> table;
  std::mt19937_64 rng(909);
  std::uniform_real_distribution<double> u(0.05, 3.0);
  const SchemeKind fdrs[] = {SchemeKind::FDR, SchemeKind::SequentialFDR, SchemeKind::ParallelFDR};
  for (int i = 0; i < 30; ++i) {
    const SchemeKind kind = fdrs[i % 3];
    const double beta = u(rng);
    double gamma = u(rng) / beta;
    double theta = u(rng) * 0.7;
    switch (i / 3) {
      case 0: theta = 2.0 - gamma * beta / 2.0; break;            // boundary
      case 1: theta = (2.0 - gamma * beta / 2.0) * (1 + 1e-6); break;
      case 2: gamma = 4.0 / beta; break;                           // step boundary
      case 3: gamma = 3.999 / beta; theta = 0.01; break;
      case 4: gamma = 4.5 / beta; break;
      case 5: gamma = -gamma; break;
      case 6: theta = -0.1; break;
      case 7: theta = 0.0; break;                                  // boundary
      default: break;
    }
    table.push_back({kind, gamma, beta, theta, 0.0, 0.0});
  }
  for (int i = 0; i < 20; ++i) {
    const double gamma = u(rng);
    double mu0 = u(rng);
    double mu1 = u(rng);
    if (i % 5 == 0) mu0 = 0.0;
    const double tmax = mu0 * mu1 == 0.0 ? 2.0 : 2.0 + 2.0 * gamma * mu0 * mu1 / (mu0 + mu1);
    double theta = 0.0;
    switch (i % 4) {
      case 0: theta = tmax; break;
      case 1: theta = tmax * (1 + 1e-6); break;
      case 2: theta = 2.0; break;
      default: theta = 0.5 * tmax; break;
    }
    table.push_back({SchemeKind::RelaxedDRS, gamma, 0.0, theta, mu0, mu1});
  }

  int mismatches = 0;
  int accepted = 0;
  int warned = 0;
  for (const auto& t : table) {
    SchemeConfig cfg;
    cfg.kind = t.kind;
    cfg.gamma = t.gamma;
    cfg.theta = RelaxationSchedule::constant(t.theta);
    cfg.n_terms = t.kind == SchemeKind::FDR ? 1 : 3;
    bool expect_ok = false;
    bool expect_warning = false;
    if (t.kind == SchemeKind::RelaxedDRS) {
      cfg.mu0 = t.mu0;
      cfg.mu1 = t.mu1;
      const bool strong = t.mu0 * t.mu1 > 0.0;
      const double tmax = strong ? 2.0 + 2.0 * t.gamma * t.mu0 * t.mu1 / (t.mu0 + t.mu1) : 2.0;
      const bool boundary = std::abs(t.theta - tmax) <= 1e-12 * tmax;
      expect_ok = t.gamma > 0.0 && t.theta >= 0.0 && (t.theta < tmax || boundary) &&
                  (strong || t.theta < 2.0);
      expect_warning = expect_ok && boundary;
    } else {
      cfg.beta = t.beta;
      const double tmax = 2.0 - t.gamma * t.beta / 2.0;
      const bool boundary = std::abs(t.theta - tmax) <= 1e-12 * std::max(1.0, tmax) || t.theta == 0.0;
      expect_ok = t.gamma > 0.0 && t.gamma * t.beta < 4.0 && t.theta >= 0.0 &&
                  (t.theta <= tmax || boundary);
      expect_warning = expect_ok && boundary;
    }
    const auto v = validate_params(cfg);
    const bool ok = !has_errors(v);
    bool warning = false;
    for (const auto& p : v) warning = warning || p.severity == Severity::Warning;
    if (ok != expect_ok || (expect_warning && !warning)) {
      ++mismatches;
      std::fprintf(stderr, "  gate mismatch: %s gamma=%g beta=%g theta=%.17g mu=(%g,%g)\n",
                   std::string(to_string(t.kind)).c_str(), t.gamma, t.beta, t.theta, t.mu0, t.mu1);
    }
    accepted += ok;
    warned += expect_warning;
  }
  return {mismatches == 0 && table.size() == 50,
          std::to_string(table.size()) + " tuples, " + std::to_string(accepted) + " accepted, " +
              std::to_string(warned) + " boundary warnings, " + std::to_string(mismatches) +
              " mismatches"};
}

Outcome benchmark() {
  const auto est = estimate(synthetic_data(42, 20, 100));
  const auto problem = build_problem(est.r, est.sigma, 0.1);
  BenchmarkOptions o;
  o.max_iter = 100000;
  o.tol = 1e-10;
  const auto result = run_benchmark(all_variants(), problem, o);
  bool pass = result.runs.size() == 6;
  double worst_residual = 0.0;
  double worst_pair = 0.0;
  std::ostringstream monotone;
  for (const auto& r : result.runs) {
    worst_residual = std::max(worst_residual, r.trace.final_residual());
    for (const auto& q : result.runs) worst_pair = std::max(worst_pair, (r.w - q.w).norm());
    std::vector<double> d;
    for (const auto& rec : r.trace.records) d.push_back(rec.dist_ref);
    const auto last = last_increase(d, 1e-10);
    const std::size_t k = d.size();
    const bool eventually = !last || *last <= k / 2;
    pass = pass && eventually && r.trace.final_residual() <= 1e-6;
    monotone << to_string(r.kind) << ":" << (last ? std::to_string(*last) : "-") << "/" << k << " ";
  }
  pass = pass && worst_pair <= 1e-5;
  return {pass, "max residual " + sci(worst_residual) + ", max pairwise distance " + sci(worst_pair) +
                    ", last increase/iterations " + monotone.str()};
}

// prox oracles, one per catalog entry
Outcome prox_oracles() {
  std::mt19937_64 rng(1111);
  std::uniform_real_distribution<double> step(0.05, 3.0);
  const auto abs1 = [](double t) { return std::abs(t); };
  const auto pow32 = [](double t) { return std::pow(std::abs(t), 1.5); };
  const auto cost = [](double t) { return std::abs(t) + std::pow(std::abs(t), 1.5); };
  const Index n = 4;
  std::vector<std::pair<std::string, double>> worst{
      {"l1", 0}, {"pow32", 0}, {"cost", 0}, {"simplex", 0}, {"quadratic", 0}, {"linear", 0},
      {"inverse_l1", 0}, {"scaled_identity", 0}, {"costs_on_simplex", 0}};
  for (int i = 0; i < 1000; ++i) {
    const double g = step(rng);
    const Vec w0 = oracle::random_vec(rng, n);
    const Vec x = oracle::random_vec(rng, n, 2.0);
    const auto upd = [&](std::size_t k, const Vec& a, const Vec& b) {
      worst[k].second = std::max(worst[k].second, (a - b).cwiseAbs().maxCoeff());
    };
    upd(0, l1_shifted(w0).resolve(g, x), oracle::separable_prox(abs1, g, w0, x));
    upd(1, pow32_shifted(w0).resolve(g, x), oracle::separable_prox(pow32, g, w0, x));
    upd(2, transaction_cost(w0).resolve(g, x), oracle::separable_prox(cost, g, w0, x));
    upd(3, simplex_indicator().resolve(g, x), oracle::simplex_projection(x));
    const Mat s = oracle::random_psd(rng, n, 2);
    const Vec r = oracle::random_vec(rng, n);
    upd(4, quadratic_operator(QuadraticFunction(s, r, 0.2)).resolve(g, x),
        oracle::quadratic_prox(g, s, r, 0.2, x));
    const Mat k = oracle::random_monotone(rng, n);
    upd(5, linear_operator(k).resolve(g, x),
        (Mat::Identity(n, n) + g * k).fullPivLu().solve(x));
    // conjugate of |. - w0|_1 is <w0, y> on the box [-1, 1]^n
    Vec conj(n);
    for (Index j = 0; j < n; ++j) {
      conj(j) = oracle::golden_section(
          [&](double y) { return g * w0(j) * y + 0.5 * (y - x(j)) * (y - x(j)); }, -1.0, 1.0);
    }
    upd(6, inverse(l1_shifted(w0)).resolve(g, x), conj);
    upd(7, scaled_identity(0.7).resolve(g, x),
        Vec::NullaryExpr(n, [&](Index j) {
          return oracle::golden_section(
              [&](double y) { return 0.35 * g * y * y + 0.5 * (y - x(j)) * (y - x(j)); }, -10, 10);
        }));
    const Vec p0 = oracle::random_simplex_point(rng, n);
    const auto point = [&](double lambda) {
      Vec p(n);
      for (Index j = 0; j < n; ++j) {
        p(j) = std::max(0.0, oracle::scalar_prox(cost, g, p0(j), x(j) + lambda));
      }
      return p;
    };
    upd(8, prox_costs_on_simplex(g, p0, x),
        point(oracle::bisect_increasing([&](double l) { return point(l).sum(); }, 1.0)));
  }
  bool pass = true;
  std::ostringstream out;
  for (const auto& [name, w] : worst) {
    pass = pass && w <= 1e-6;
    out << name << " " << sci(w) << "  ";
  }
  return {pass, "max deviation " + out.str() + "(tol 1e-6, 1000 inputs each)"};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
  double time_limit;  // seconds, 0 when unbounded
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "reduction equivalence", reduction_equivalence, 5.0},
      {2, "M-firm nonexpansiveness", firm_nonexpansive, 0.0},
      {3, "Fejer monotonicity in the M-seminorm", fejer, 0.0},
      {4, "Woodbury-Moreau identity", woodbury, 0.0},
      {5, "structural reductions", structural, 0.0},
      {6, "degenerate Chambolle-Pock", degenerate_cp, 0.0},
      {7, "linear rates", linear_rates, 10.0},
      {8, "Peaceman-Rachford admissibility", peaceman_rachford, 0.0},
      {9, "parameter gates", parameter_gates, 0.0},
      {10, "benchmark consistency", benchmark, 60.0},
      {11, "prox oracle agreement", prox_oracles, 0.0},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.time_limit > 0.0 && secs >= c.time_limit) {
      out.pass = false;
      out.detail += " [over the " + std::to_string(static_cast<int>(c.time_limit)) + " s budget]";
    }
    failures += !out.pass;
    std::printf("%s %2d %s: %s (%.2f s)\n", out.pass ? "PASS" : "FAIL", c.id, c.name,
                out.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
