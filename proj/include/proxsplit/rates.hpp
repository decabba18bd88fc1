#pragma once

// Linear-rate certificates for DRS and empirical contraction estimates.

#include "proxsplit/ppp.hpp"
#include "proxsplit/trace.hpp"

#include <json.hpp>

#include <random>
#include <vector>

namespace proxsplit {

/// Side a: the regularity is carried by A; side b: by B (roles swapped).
enum class RateSide { A, B };

struct RateCertificate {
  int case_id = 1;
  RateSide side = RateSide::A;
  double alpha = 0.0;
  double rate = 1.0;  // 1 / (1 + alpha)
  double sigma = 0.0;
  double mu = 0.0;
  double beta = 0.0;

  nlohmann::json to_json() const;
};

/// Case 1: A mu-strongly monotone, B 1/beta-cocoercive:
///   alpha = min(sigma mu / 2, 1 / (2 sigma beta)).
/// Case 2: A mu-strongly monotone and 1/beta-cocoercive (mu <= beta):
///   alpha = sigma mu / (sigma^2 mu beta + 1).
/// Case 3: A mu-strongly monotone and beta-Lipschitz:
///   alpha = sigma mu / (sigma^2 beta^2 + 1).
/// The side only records which operator carries the assumption.
RateCertificate drs_contraction_factor(int case_id, double sigma, double mu, double beta,
                                       RateSide side = RateSide::A);

/// sigma = 1 / sqrt(mu beta), the minimizer of the case-1 rate.
double optimal_sigma_case1(double mu, double beta);

/// Sampled check of <M(u - Tu) - M(u' - Tu'), Tu - Tu'> >= alpha |Tu - Tu'|_M^2
/// on graph points (Tu, u - Tu) of M^{-1} A.
CheckReport mstrong_check(const BlockAssembly& assembly, std::mt19937_64& rng,
                          std::size_t samples, double alpha, double scale = 1.0,
                          double slack = 1e-9);

/// Geometric-mean ratio d_{k+1} / d_k over the last quartile of the sequence
/// before it first drops below `floor`.
double empirical_rate(const std::vector<double>& distances, double floor = 1e-9);

/// Same, with d_k = |w^k - w_ref| from a trace that kept its iterates.
double empirical_rate(const IterationTrace& trace, const Vec& w_ref, double floor = 1e-9);

}  // namespace proxsplit
