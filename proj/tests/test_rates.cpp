#include "rate_cases.hpp"
#include "proxsplit/errors.hpp"
#include "proxsplit/rates.hpp"

#include <doctest.h>

using namespace proxsplit;

TEST_CASE("contraction factor examples") {
  const auto c1 = drs_contraction_factor(1, 1.0, 1.0, 1.0);
  CHECK(c1.alpha == doctest::Approx(0.5));
  CHECK(c1.rate == doctest::Approx(2.0 / 3.0));
  CHECK(drs_contraction_factor(3, 1.0, 1.0, 1.0).alpha == doctest::Approx(0.5));
  CHECK(drs_contraction_factor(2, 1.0, 1.0, 1.0).alpha == doctest::Approx(0.5));
  for (auto [mu, beta] : {std::pair{1.0, 4.0}, std::pair{4.0, 1.0}, std::pair{0.3, 7.0}}) {
    const double s = optimal_sigma_case1(mu, beta);
    CHECK(s == doctest::Approx(1.0 / std::sqrt(mu * beta)));
    const double q = std::sqrt(beta / mu);
    CHECK(drs_contraction_factor(1, s, mu, beta).rate == doctest::Approx(q / (q + 0.5)));
  }
  CHECK(optimal_sigma_case1(1.0, 1.0) == 1.0);
  CHECK(optimal_sigma_case1(4.0, 1.0) == 0.5);
}

TEST_CASE("contraction factor rejects bad input") {
  const auto code = [](auto f) {
    try {
      f();
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::ConfigError;
  };
  CHECK(code([] { drs_contraction_factor(1, 1.0, 0.0, 1.0); }) == Errc::InvalidRegularity);
  CHECK(code([] { drs_contraction_factor(1, 0.0, 1.0, 1.0); }) == Errc::NonPositiveStep);
  CHECK(code([] { drs_contraction_factor(2, 1.0, 2.0, 1.0); }) == Errc::InvalidRegularity);
  CHECK_THROWS_AS(drs_contraction_factor(4, 1.0, 1.0, 1.0), Error);
}

TEST_CASE("random regularity gives positive alpha and rate in (0, 1)") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.1, 10.0);
  for (int i = 0; i < 1000; ++i) {
    const double s = u(rng);
    double mu = u(rng);
    double beta = u(rng);
    if (mu > beta) std::swap(mu, beta);
    for (int c = 1; c <= 3; ++c) {
      const auto cert = drs_contraction_factor(c, s, mu, beta);
      const double expected = c == 1   ? std::min(s * mu / 2, 1 / (2 * s * beta))
                              : c == 2 ? s * mu / (s * s * mu * beta + 1)
                                       : s * mu / (s * s * beta * beta + 1);
      CHECK(cert.alpha == doctest::Approx(expected).epsilon(1e-14));
      CHECK(cert.alpha > 0.0);
      CHECK(cert.rate > 0.0);
      CHECK(cert.rate < 1.0);
    }
  }
}

TEST_CASE("empirical rate of a geometric sequence") {
  std::vector<double> d;
  for (int k = 0; k < 60; ++k) d.push_back(std::pow(0.5, k));
  CHECK(empirical_rate(d) == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(empirical_rate(std::vector<double>(50, 3.0)) == doctest::Approx(1.0));
}

TEST_CASE("measured DRS rates stay below the certificates") {
  std::mt19937_64 rng(2);
  for (const auto& inst : ratecase::instances(rng)) {
    const auto cert = drs_contraction_factor(inst.case_id, 1.0, 1.0, 1.0, inst.side);
    INFO(inst.name);
    CHECK(cert.rate == doctest::Approx(2.0 / 3.0));
    CHECK(ratecase::measured_rate(inst, rng) <= cert.rate + 0.01);
  }
}

TEST_CASE("no contraction without strong monotonicity") {
  const auto s = build_drs(zero_operator(), zero_operator(), 2, 1.0);
  DirectOptions o;
  o.base.stop = {-1.0, false, 40};  // never satisfied: w0 is already fixed
  o.base.keep_iterates = true;
  const auto trace = direct_iterate(s, Eigen::Vector2d(1.0, 2.0), s.config.theta, o);
  CHECK(empirical_rate(trace, Vec::Zero(2)) == doctest::Approx(1.0));
  CHECK_THROWS_AS(drs_contraction_factor(1, 1.0, 0.0, 0.0), Error);
}

TEST_CASE("M-strong monotonicity of the DRS assembly") {
  std::mt19937_64 rng(3);
  const auto inst = ratecase::instances(rng).front();
  const auto s = build_drs(linear_operator(inst.a), linear_operator(inst.b), 4, 1.0);
  CHECK(mstrong_check(s.blocks, rng, 500, 0.5).passed());
}
