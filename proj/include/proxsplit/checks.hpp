#pragma once

// Random scheme instances and the property suite behind `proxsplit check`.

#include "proxsplit/schemes.hpp"

#include <json.hpp>

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace proxsplit {

struct RandomInstance {
  SchemeConfig config;
  SchemeProblem problem;
};

/// A well-posed random instance on R^n. The multi-term schemes get
/// `n_terms` operators A_i with cocoercive forward terms; relaxed DRS gets a
/// strongly monotone pair and theta = 1.5.
RandomInstance random_instance(SchemeKind kind, Index n, std::size_t n_terms,
                               std::mt19937_64& rng);

/// Schemes covered by the suite.
const std::vector<SchemeKind>& suite_schemes();

struct SuiteOptions {
  std::uint64_t seed = 1;
  Index n = 10;
  std::size_t n_terms = 3;
  std::size_t pairs = 1000;
  std::size_t iterations = 200;
  std::size_t woodbury_instances = 100;
};

struct PropertyResult {
  std::string property;
  std::string scheme;  // empty for scheme-free properties
  bool passed = false;
  double worst = 0.0;  // largest observed violation measure
  double tolerance = 0.0;

  nlohmann::json to_json() const;
};

/// Firm nonexpansiveness, Fejer monotonicity, reduction equivalence
/// (PPP vs reduced vs direct), the Woodbury identity and the N = 1 reductions.
std::vector<PropertyResult> run_property_suite(const SuiteOptions& options);

/// Solves the reduced fixed-point equation to absolute residual `tol`.
Vec reduced_fixed_point(const SchemeAssembly& s, double tol = 1e-13,
                        std::size_t max_iters = 200000);

}  // namespace proxsplit
