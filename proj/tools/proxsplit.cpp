// proxsplit: run splitting schemes, check their invariants, emit traces.

#include "proxsplit/checks.hpp"
#include "proxsplit/errors.hpp"
#include "proxsplit/portfolio.hpp"
#include "proxsplit/rates.hpp"
#include "proxsplit/schemes.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace proxsplit;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kViolation = 1, kConfig = 2, kIo = 3 };

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::IoError:
    case Errc::ParseError:
    case Errc::InsufficientData:
      return kIo;
    case Errc::OracleDisagreement:
    case Errc::SolveFailure:
      return kViolation;
    default:
      return kConfig;
  }
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(Errc::ConfigError, path + ": " + e.what());
  }
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(Errc::IoError, "write failed: " + path.string());
}

fs::path prepare_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(Errc::IoError, "cannot create " + dir + ": " + ec.message());
  return fs::path(dir);
}

// Settings shared by run and compare; the JSON config may carry any of them.
struct ProblemOptions {
  std::string problem = "synthetic";  // synthetic | csv | builtin
  std::string data;
  std::uint64_t seed = 42;
  Index n = 20;
  Index days = 100;
  double delta = 0.1;
  std::string l_convention = "gradient";
  std::size_t max_iter = 100000;
  double tol = 1e-10;
  std::string mode = "direct";
  std::string out = "out";
  bool monitor = false;
  bool timing = false;
  bool reference = false;
  std::size_t n_terms = 3;
};

const char* kRunKeys[] = {"problem", "data",  "seed", "n",       "days",      "delta",
                          "l_convention", "max_iter", "tol", "mode", "out", "monitor",
                          "timing", "reference"};

template <class T>
void take(const json& j, const char* key, T& dst) {
  if (!j.contains(key)) return;
  try {
    dst = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(Errc::ConfigError, std::string("config key '") + key + "': " + e.what());
  }
}

void apply_file(const json& j, ProblemOptions& o) {
  take(j, "problem", o.problem);
  take(j, "data", o.data);
  take(j, "seed", o.seed);
  take(j, "n", o.n);
  take(j, "days", o.days);
  take(j, "delta", o.delta);
  take(j, "l_convention", o.l_convention);
  take(j, "max_iter", o.max_iter);
  take(j, "tol", o.tol);
  take(j, "mode", o.mode);
  take(j, "out", o.out);
  take(j, "monitor", o.monitor);
  take(j, "timing", o.timing);
  take(j, "reference", o.reference);
  take(j, "n_terms", o.n_terms);
}

PortfolioProblem load_problem(const ProblemOptions& o) {
  if (o.problem != "synthetic" && o.problem != "csv") {
    throw Error(Errc::ConfigError, "problem must be synthetic, csv or builtin");
  }
  if (o.problem == "csv" && o.data.empty()) {
    throw Error(Errc::ConfigError, "--data is required for a csv problem");
  }
  const ReturnsData data = o.problem == "csv" ? load_returns(o.data)
                                              : synthetic_data(o.seed, o.n, o.days);
  const ReturnEstimate est = estimate(data);
  return build_problem(est.r, est.sigma, o.delta);
}

// Optimality of the portfolio problem is 0 in df + dg0 + dg1 + N_simplex;
// each scheme groups these terms as its operators allow.
struct Setup {
  SchemeConfig defaults;
  SchemeProblem problem;
  std::size_t primal_index = 0;
  std::optional<PortfolioProblem> portfolio;
};

OperatorBlock costs_and_simplex(Index n, const Vec& w0) {
  OperatorBlock b;
  b.name = "costs(z1)+simplex(z2)";
  b.resolvent = [n, w0](double step, const Vec& z) {
    Vec out(2 * n);
    out.head(n) = prox_transaction_cost(step, w0, z.head(n));
    out.tail(n) = project_simplex(z.tail(n));
    return out;
  };
  return b;
}

Setup portfolio_setup(SchemeKind kind, const PortfolioProblem& p, LConvention conv) {
  Setup s;
  s.portfolio = p;
  s.defaults.kind = kind;
  s.problem.dim = p.dim();
  const double lf = p.lipschitz_f();
  const OperatorBlock df = quadratic_operator(p.f);
  switch (kind) {
    case SchemeKind::DRS:
      s.problem.ops = {df, simplex_indicator()};
      s.defaults.sigma = 1.0 / lf;
      s.primal_index = 1;
      break;
    case SchemeKind::RelaxedDRS:
      s.problem.ops = {df, simplex_indicator()};
      s.defaults.gamma = 1.0 / lf;
      s.defaults.mu0 = df.mu.value_or(0.0);
      s.defaults.mu1 = 0.0;
      s.primal_index = 1;
      break;
    case SchemeKind::CP: {
      const Index n = p.dim();
      Mat l(2 * n, n);
      l << Mat::Identity(n, n), Mat::Identity(n, n);
      s.problem.ops = {df, costs_and_simplex(n, p.w0)};
      s.problem.l = l;
      s.defaults.tau = 1.0 / std::sqrt(2.0);
      s.defaults.sigma = 1.0 / std::sqrt(2.0);
      s.defaults.l_norm = std::sqrt(2.0);
      break;
    }
    case SchemeKind::FDR:
      s.problem.ops = {transaction_cost(p.w0), simplex_indicator()};
      s.problem.forwards = {df};
      s.defaults.gamma = 1.0 / lf;
      s.primal_index = 1;
      break;
    case SchemeKind::ParallelFDR:
    case SchemeKind::SequentialFDR: {
      const VariantSetup v = configure_variant(
          kind == SchemeKind::ParallelFDR ? VariantKind::ParFDR : VariantKind::SeqFDRv2, p, conv);
      s.defaults = v.config;
      s.problem = v.problem;
      s.primal_index = v.primal_index;
      break;
    }
  }
  return s;
}

SchemeConfig merge_config(const SchemeConfig& defaults, const json& user) {
  json j = defaults.to_json();
  for (auto it = user.begin(); it != user.end(); ++it) {
    bool run_key = false;
    for (const char* k : kRunKeys) run_key = run_key || it.key() == k;
    if (!run_key) j[it.key()] = it.value();
  }
  if (j.contains("scheme")) {
    j["kind"] = j["scheme"];
    j.erase("scheme");
  }
  return SchemeConfig::from_json(j);
}

json violations_json(const std::vector<ParamViolation>& v) {
  json out = json::array();
  for (const auto& x : v) out.push_back(x.to_json());
  return out;
}

void print_warnings(const std::vector<ParamViolation>& v) {
  for (const auto& x : v) {
    std::cerr << (x.severity == Severity::Error ? "error: " : "warning: ") << x.parameter << ": "
              << x.message << " (" << x.bound << ")\n";
  }
}

json vec_to_json(const Vec& v) {
  std::vector<double> out(v.data(), v.data() + v.size());
  return out;
}

// Distances to w* of a reduced trace must not grow.
CheckReport fejer_from_trace(const IterationTrace& t, double slack) {
  CheckReport r;
  r.property = "fejer_monotone";
  for (std::size_t k = 1; k < t.records.size(); ++k) {
    r.record(t.records[k].dist_ref - t.records[k - 1].dist_ref, slack);
  }
  return r;
}

int cmd_run(const std::string& scheme_name, const std::string& config_path, ProblemOptions o,
            const CLI::App& sub) {
  json user = json::object();
  if (!config_path.empty()) user = read_json_file(config_path);
  // file values first, then any flag given on the command line wins
  ProblemOptions file = o;
  apply_file(user, file);
  const auto flag = [&](const char* name) { return sub.count(name) > 0; };
  if (!flag("--problem")) o.problem = file.problem;
  if (!flag("--data")) o.data = file.data;
  if (!flag("--seed")) o.seed = file.seed;
  if (!flag("--n")) o.n = file.n;
  if (!flag("--days")) o.days = file.days;
  if (!flag("--delta")) o.delta = file.delta;
  if (!flag("--l-convention")) o.l_convention = file.l_convention;
  if (!flag("--max-iter")) o.max_iter = file.max_iter;
  if (!flag("--tol")) o.tol = file.tol;
  if (!flag("--mode")) o.mode = file.mode;
  if (!flag("--out")) o.out = file.out;
  if (!flag("--monitor")) o.monitor = file.monitor;
  if (!flag("--timing")) o.timing = file.timing;
  if (!flag("--reference")) o.reference = file.reference;
  if (!flag("--terms")) o.n_terms = file.n_terms;
  if (!o.data.empty() && !flag("--problem") && !user.contains("problem")) o.problem = "csv";
  if (flag("--data") && !fs::exists(o.data)) throw Error(Errc::IoError, "no such file: " + o.data);

  std::string kind_name = scheme_name;
  if (kind_name.empty()) {
    if (user.contains("kind")) kind_name = user["kind"].get<std::string>();
    else if (user.contains("scheme")) kind_name = user["scheme"].get<std::string>();
    else kind_name = "drs";
  }
  const SchemeKind kind = parse_scheme_kind(kind_name);
  const RunMode mode = parse_run_mode(o.mode);

  Setup setup;
  if (o.problem == "builtin") {
    std::mt19937_64 rng(o.seed);
    RandomInstance inst = random_instance(kind, o.n, o.n_terms, rng);
    setup.defaults = inst.config;
    setup.problem = std::move(inst.problem);
  } else {
    setup = portfolio_setup(kind, load_problem(o), parse_l_convention(o.l_convention));
  }
  if (!setup.defaults.beta) {
    double beta = 0.0;
    for (const auto& c : setup.problem.forwards) {
      if (c && c->beta) beta = std::max(beta, *c->beta);
    }
    if (beta > 0.0) setup.defaults.beta = beta;
  }
  json overrides = user;
  overrides["kind"] = std::string(to_string(kind));
  overrides.erase("scheme");
  const SchemeConfig cfg = merge_config(setup.defaults, overrides);

  const auto violations = validate_params(cfg);
  print_warnings(violations);
  if (has_errors(violations)) return kConfig;

  const SchemeAssembly s = build_scheme(cfg, setup.problem);
  const fs::path dir = prepare_dir(o.out);

  DirectOptions opts;
  opts.base.stop.tol = o.tol;
  opts.base.stop.max_iters = o.max_iter;
  opts.primal_index = setup.primal_index;

  std::optional<ReferenceSolution> ref;
  if (o.reference && setup.portfolio) {
    ref = reference_solution(*setup.portfolio);
    opts.primal_reference = ref->w;
  }
  std::optional<Vec> w_star;
  if (o.monitor) {
    w_star = reduced_fixed_point(s);
    if (mode != RunMode::Direct) opts.base.reference = w_star;
  }

  const RunResult r = run(s, mode, Vec(), opts);

  json summary{{"config", cfg.to_json()},
               {"mode", o.mode},
               {"warnings", violations_json(s.warnings)},
               {"primal", vec_to_json(r.primal)}};
  if (setup.portfolio) summary["objective"] = setup.portfolio->objective(r.primal);
  if (ref) summary["reference_distance"] = (r.primal - ref->w).norm();
  if (r.direct) {
    write_file(dir / "trace_direct.csv", r.direct->to_csv(o.timing));
    summary["direct"] = {{"iterations", r.direct->iterations()},
                         {"residual", r.direct->final_residual()},
                         {"converged", r.direct->converged}};
  }
  if (r.block) {
    write_file(dir / "trace_block.csv", r.block->to_csv(o.timing));
    summary["block"] = {{"iterations", r.block->iterations()},
                        {"residual", r.block->final_residual()},
                        {"converged", r.block->converged}};
  }
  if (r.max_deviation) summary["max_deviation"] = *r.max_deviation;

  int code = kOk;
  if (o.monitor) {
    std::mt19937_64 rng(o.seed);
    const CheckReport firm = check_firm_nonexpansive(s.blocks, rng, 200);
    IterationTrace fejer_trace;
    if (r.block) {
      fejer_trace = *r.block;
    } else {
      // direct-only runs get a reduced shadow run for the Fejer check
      IterateOptions bo = opts.base;
      bo.reference = w_star;
      fejer_trace = rppp_iterate(s.blocks, s.factor, s.state_to_reduced(Vec::Zero(s.state_dim())),
                                 s.lambda_schedule(), bo);
    }
    const double d0 = fejer_trace.records.empty() ? 0.0 : fejer_trace.records.front().dist_ref;
    const CheckReport fejer = fejer_from_trace(fejer_trace, 1e-10 * (1.0 + d0));
    summary["monitor"] = {{"firm_nonexpansive", firm.summary()}, {"fejer", fejer.summary()}};
    for (const CheckReport* c : {&firm, &fejer}) {
      if (!c->passed()) {
        std::cerr << "violation: " << c->summary() << '\n';
        code = kViolation;
      }
    }
  }
  write_file(dir / "run.json", summary.dump(2) + "\n");
  std::cout << to_string(kind) << ": "
            << (r.direct ? r.direct->iterations() : r.block->iterations()) << " iterations, residual "
            << format_double(r.direct ? r.direct->final_residual() : r.block->final_residual())
            << '\n';
  return code;
}

int cmd_compare(std::vector<std::string> variants, ProblemOptions o, unsigned threads) {
  std::vector<VariantKind> kinds;
  if (variants.empty()) kinds = all_variants();
  for (const auto& v : variants) kinds.push_back(parse_variant(v));
  if (!o.data.empty()) o.problem = "csv";
  const PortfolioProblem p = load_problem(o);

  BenchmarkOptions bo;
  bo.max_iter = o.max_iter;
  bo.tol = o.tol;
  bo.convention = parse_l_convention(o.l_convention);
  bo.threads = threads;
  const BenchmarkResult result = run_benchmark(kinds, p, bo);

  const fs::path dir = prepare_dir(o.out);
  for (const auto& run : result.runs) {
    write_file(dir / (std::string(to_string(run.kind)) + ".csv"), run.trace.to_csv(o.timing));
  }
  write_file(dir / "summary.json", result.summary().dump(2) + "\n");

  std::printf("%-10s %10s %14s %14s\n", "variant", "iters", "residual", "dist_ref");
  for (const auto& run : result.runs) {
    std::printf("%-10s %10zu %14.3e %14.3e\n", std::string(to_string(run.kind)).c_str(),
                run.trace.iterations(), run.trace.final_residual(), run.final_distance);
  }
  return kOk;
}

int cmd_rates(double sigma, double mu, double beta, const std::string& side_name) {
  if (side_name != "a" && side_name != "b") throw Error(Errc::ConfigError, "side must be a or b");
  const RateSide side = side_name == "a" ? RateSide::A : RateSide::B;
  json out = json::array();
  int code = kOk;
  for (int c = 1; c <= 3; ++c) {
    try {
      out.push_back(drs_contraction_factor(c, sigma, mu, beta, side).to_json());
    } catch (const Error& e) {
      out.push_back({{"case", c}, {"error", std::string(to_string(e.code()))},
                     {"message", e.what()}});
      code = kConfig;
    }
  }
  std::cout << out.dump(2) << '\n';
  return code;
}

int cmd_check(const SuiteOptions& so, const std::string& out_path) {
  const auto results = run_property_suite(so);
  json all = json::array();
  std::size_t failed = 0;
  for (const auto& r : results) {
    all.push_back(r.to_json());
    if (!r.passed) ++failed;
    std::printf("%s %-28s %-15s worst %.3e (tol %.0e)\n", r.passed ? "PASS" : "FAIL",
                r.property.c_str(), r.scheme.empty() ? "-" : r.scheme.c_str(), r.worst,
                r.tolerance);
  }
  if (!out_path.empty()) write_file(out_path, all.dump(2) + "\n");
  for (const auto& r : results) {
    if (!r.passed) {
      std::cerr << "violated: " << r.property << (r.scheme.empty() ? "" : " [" + r.scheme + "]")
                << '\n';
    }
  }
  std::printf("%zu/%zu properties hold\n", results.size() - failed, results.size());
  return failed ? kViolation : kOk;
}

int cmd_validate(const std::string& config_path, const std::string& scheme_name) {
  json j = config_path.empty() ? json::object() : read_json_file(config_path);
  if (!scheme_name.empty()) j["kind"] = scheme_name;
  const SchemeConfig cfg = merge_config(SchemeConfig{}, j);
  const auto v = validate_params(cfg);
  std::cout << json{{"config", cfg.to_json()}, {"violations", violations_json(v)}}.dump(2)
            << '\n';
  return has_errors(v) ? kConfig : kOk;
}

int cmd_gendata(std::uint64_t seed, Index n, Index days, const std::string& path) {
  const ReturnsData data = synthetic_data(seed, n, days);
  if (path.empty() || path == "-") {
    write_returns(data, std::cout);
  } else {
    const fs::path parent = fs::path(path).parent_path();
    if (!parent.empty()) prepare_dir(parent.string());
    save_returns(data, path);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Operator splitting schemes as degenerate preconditioned proximal point"};
  app.require_subcommand(1);

  ProblemOptions po;
  std::string scheme, config;
  auto add_problem = [&](CLI::App* c) {
    c->add_option("--data", po.data, "Returns CSV (one row per day)");
    c->add_option("--seed", po.seed, "Seed of the synthetic or builtin problem");
    c->add_option("--n", po.n, "Number of assets / problem dimension");
    c->add_option("--days", po.days, "Number of synthetic days");
    c->add_option("--delta", po.delta, "Ridge weight");
    c->add_option("--l-convention", po.l_convention, "gradient | lambda_max");
    c->add_option("--max-iter", po.max_iter, "Iteration cap");
    c->add_option("--tol", po.tol, "Relative fixed-point tolerance");
    c->add_option("--out", po.out, "Output directory");
    c->add_flag("--timing", po.timing, "Record wall time in the trace");
  };

  auto* run = app.add_subcommand("run", "Run one scheme and write its traces");
  add_problem(run);
  run->add_option("--scheme", scheme, "drs | cp | relaxed_drs | fdr | parallel_fdr | sequential_fdr");
  run->add_option("--config", config, "JSON config; flags override its values");
  run->add_option("--problem", po.problem, "synthetic | csv | builtin");
  run->add_option("--mode", po.mode, "direct | block | both");
  run->add_option("--terms", po.n_terms, "Operators A_i of a builtin multi-term problem");
  run->add_flag("--monitor", po.monitor, "Check firm nonexpansiveness and Fejer monotonicity");
  run->add_flag("--reference", po.reference, "Measure dist_ref against the reference solution");

  auto* compare = app.add_subcommand("compare", "Benchmark the portfolio variants");
  add_problem(compare);
  std::vector<std::string> variants;
  unsigned threads = 0;
  compare->add_option("--variants", variants, "Subset of SeqFDRv1 SeqFDRv2 SeqFDRv3 ParFDR GenBF ParDR");
  compare->add_option("--threads", threads, "Concurrent variants (default PROXSPLIT_THREADS)");

  double sigma = 1.0, mu = 1.0, beta = 1.0;
  std::string side = "a";
  auto* rates = app.add_subcommand("rates", "Certified DRS contraction factors");
  rates->add_option("--sigma", sigma);
  rates->add_option("--mu", mu);
  rates->add_option("--beta", beta);
  rates->add_option("--side", side, "a | b");

  SuiteOptions so;
  std::string check_out;
  auto* check = app.add_subcommand("check", "Run the invariant suite");
  check->add_option("--seed", so.seed);
  check->add_option("--n", so.n);
  check->add_option("--terms", so.n_terms);
  check->add_option("--pairs", so.pairs);
  check->add_option("--iterations", so.iterations);
  check->add_option("--woodbury", so.woodbury_instances);
  check->add_option("--out", check_out, "Write results as JSON");

  auto* validate = app.add_subcommand("validate", "Check scheme parameters");
  validate->add_option("--config", config);
  validate->add_option("--scheme", scheme);

  std::uint64_t gen_seed = 42;
  Index gen_n = 20, gen_days = 100;
  std::string gen_out;
  auto* gendata = app.add_subcommand("gendata", "Write synthetic returns CSV");
  gendata->add_option("--seed", gen_seed);
  gendata->add_option("--n", gen_n);
  gendata->add_option("--days", gen_days);
  gendata->add_option("--out", gen_out, "Path ('-' or empty: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    if (*run) return cmd_run(scheme, config, po, *run);
    if (*compare) return cmd_compare(variants, po, threads);
    if (*rates) return cmd_rates(sigma, mu, beta, side);
    if (*check) return cmd_check(so, check_out);
    if (*validate) return cmd_validate(config, scheme);
    if (*gendata) return cmd_gendata(gen_seed, gen_n, gen_days, gen_out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfig;
  }
  return kOk;
}
