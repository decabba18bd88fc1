#include "proxsplit/trace.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

namespace proxsplit {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string IterationTrace::to_csv(bool with_time) const {
  std::ostringstream out;
  out << kTraceCsvHeader << '\n';
  for (const auto& r : records) {
    out << r.k << ',' << format_double(r.residual) << ',' << format_double(r.m_residual) << ','
        << format_double(r.dist_ref) << ',' << format_double(with_time ? r.time_s : 0.0)
        << '\n';
  }
  return out.str();
}

nlohmann::json IterationTrace::to_json(bool with_time) const {
  auto num = [](double v) -> nlohmann::json {
    if (std::isfinite(v)) return v;
    return nullptr;
  };
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : records) {
    rows.push_back({{"k", r.k},
                    {"residual", num(r.residual)},
                    {"m_residual", num(r.m_residual)},
                    {"dist_ref", num(r.dist_ref)},
                    {"time_s", with_time ? r.time_s : 0.0}});
  }
  std::vector<double> final(final_iterate.data(), final_iterate.data() + final_iterate.size());
  return {{"converged", converged},
          {"iterations", iterations()},
          {"final_residual", num(final_residual())},
          {"final_iterate", final},
          {"records", rows}};
}

}  // namespace proxsplit
