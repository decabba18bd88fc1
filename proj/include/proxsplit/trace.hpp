#pragma once

#include "proxsplit/spaces.hpp"

#include <json.hpp>

#include <cstddef>
#include <string>
#include <vector>

namespace proxsplit {

struct TraceRecord {
  std::size_t k = 0;
  double residual = 0.0;    // |T u^k - u^k|
  double m_residual = 0.0;  // |T u^k - u^k|_M
  double dist_ref = 0.0;    // NaN when no reference point was given
  double time_s = 0.0;
};

/// Per-iteration history of a fixed-point run.
struct IterationTrace {
  std::vector<TraceRecord> records;
  /// u^0, ..., u^K (flat storage) when the run kept iterates.
  std::vector<Vec> iterates;
  Vec final_iterate;
  bool converged = false;

  std::size_t iterations() const noexcept {
    return records.empty() ? 0 : records.back().k;
  }
  double final_residual() const noexcept {
    return records.empty() ? 0.0 : records.back().residual;
  }

  /// Columns k,residual,m_residual,dist_ref,time_s. Timing is written as 0
  /// unless `with_time` so that reruns produce identical files.
  std::string to_csv(bool with_time = false) const;
  nlohmann::json to_json(bool with_time = false) const;
};

inline constexpr const char* kTraceCsvHeader = "k,residual,m_residual,dist_ref,time_s";

/// Shortest round-trip decimal form of a double ("nan"/"inf" for specials).
std::string format_double(double v);

}  // namespace proxsplit
