#include "proxsplit/rates.hpp"

#include "proxsplit/errors.hpp"

#include <algorithm>
#include <cmath>

namespace proxsplit {

nlohmann::json RateCertificate::to_json() const {
  return {{"case", case_id},
          {"side", side == RateSide::A ? "a" : "b"},
          {"alpha", alpha},
          {"rate", rate},
          {"sigma", sigma},
          {"mu", mu},
          {"beta", beta}};
}

RateCertificate drs_contraction_factor(int case_id, double sigma, double mu, double beta,
                                       RateSide side) {
  if (!(sigma > 0.0)) throw Error(Errc::NonPositiveStep, "sigma must be positive");
  if (!(mu > 0.0) || !(beta > 0.0) || !std::isfinite(mu) || !std::isfinite(beta)) {
    throw Error(Errc::InvalidRegularity, "a linear rate needs mu > 0 and beta > 0");
  }
  RateCertificate c;
  c.case_id = case_id;
  c.side = side;
  c.sigma = sigma;
  c.mu = mu;
  c.beta = beta;
  switch (case_id) {
    case 1:
      c.alpha = std::min(sigma * mu / 2.0, 1.0 / (2.0 * sigma * beta));
      break;
    case 2:
      if (mu > beta) {
        throw Error(Errc::InvalidRegularity,
                    "a 1/beta-cocoercive, mu-strongly monotone operator has mu <= beta");
      }
      c.alpha = sigma * mu / (sigma * sigma * mu * beta + 1.0);
      break;
    case 3:
      c.alpha = sigma * mu / (sigma * sigma * beta * beta + 1.0);
      break;
    default:
      throw Error(Errc::ConfigError, "rate case must be 1, 2 or 3");
  }
  c.rate = 1.0 / (1.0 + c.alpha);
  return c;
}

double optimal_sigma_case1(double mu, double beta) {
  if (!(mu > 0.0) || !(beta > 0.0)) throw Error(Errc::InvalidRegularity, "mu, beta must be > 0");
  return 1.0 / std::sqrt(mu * beta);
}

CheckReport mstrong_check(const BlockAssembly& assembly, std::mt19937_64& rng,
                          std::size_t samples, double alpha, double scale, double slack) {
  CheckReport report;
  report.property = "M-alpha-strong monotonicity";
  const auto& m = assembly.preconditioner();
  for (std::size_t s = 0; s < samples; ++s) {
    const BlockVector u1 = random_block_vector(assembly.layout(), rng, scale);
    const BlockVector u2 = random_block_vector(assembly.layout(), rng, scale);
    const BlockVector t1 = evaluate_T(assembly, u1);
    const BlockVector t2 = evaluate_T(assembly, u2);
    const BlockVector dt = t1 - t2;
    const double lhs = m_inner(m, (u1 - t1) - (u2 - t2), dt);
    report.record(alpha * m_inner(m, dt, dt) - lhs, slack);
  }
  return report;
}

double empirical_rate(const std::vector<double>& d, double floor) {
  if (d.size() < 2) throw Error(Errc::InsufficientData, "need at least two distances");
  std::size_t end = d.size() - 1;
  for (std::size_t k = 0; k < d.size(); ++k) {
    if (d[k] < floor) {
      end = k;
      break;
    }
  }
  if (end == 0) throw Error(Errc::InsufficientData, "sequence starts below the floor");
  std::size_t begin = end - std::max<std::size_t>(1, end / 4);
  if (d[begin] <= 0.0) throw Error(Errc::InsufficientData, "zero distance inside the window");
  return std::pow(d[end] / d[begin], 1.0 / static_cast<double>(end - begin));
}

double empirical_rate(const IterationTrace& trace, const Vec& w_ref, double floor) {
  if (trace.iterates.empty()) {
    throw Error(Errc::InsufficientData, "empirical_rate needs a trace with kept iterates");
  }
  std::vector<double> d;
  d.reserve(trace.iterates.size() + 1);
  for (const auto& w : trace.iterates) d.push_back((w - w_ref).norm());
  return empirical_rate(d, floor);
}

}  // namespace proxsplit
