/**
 * @file io.hpp
 * @brief CSV/JSON writers for trajectories and moment reports (17 significant digits).
 */
#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "pcshaper/basis.hpp"
#include "pcshaper/dynamics.hpp"
#include "pcshaper/errors.hpp"
#include "pcshaper/uq.hpp"

namespace pcshaper::io {

inline constexpr int kCsvPrecision = std::numeric_limits<double>::max_digits10;

/// Formats a double so that parsing it back yields the identical value.
[[nodiscard]] inline std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(kCsvPrecision) << v;
  return os.str();
}

inline void write_row(std::ostream& os, const std::vector<double>& row) {
  for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << fmt(row[i]);
  os << '\n';
}

inline void write_header(std::ostream& os, const std::vector<std::string>& cols) {
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << '\n';
}

/// Columns: t, a_0..a_K, b_0..b_K.
inline void write_trajectory_csv(std::ostream& os, const PceTrajectory& traj) {
  const std::size_t n = traj.basis.size();
  std::vector<std::string> cols{"t"};
  for (std::size_t i = 0; i < n; ++i) cols.push_back("a_" + std::to_string(i));
  for (std::size_t i = 0; i < n; ++i) cols.push_back("b_" + std::to_string(i));
  write_header(os, cols);
  std::vector<double> row(1 + 2 * n);
  for (std::size_t k = 0; k < traj.size(); ++k) {
    row[0] = traj.times[k];
    std::copy(traj.coeffs_a[k].begin(), traj.coeffs_a[k].end(), row.begin() + 1);
    std::copy(traj.coeffs_b[k].begin(), traj.coeffs_b[k].end(), row.begin() + 1 + static_cast<std::ptrdiff_t>(n));
    write_row(os, row);
  }
}

/// Header describing basis, truncation and schedule of a trajectory file.
[[nodiscard]] inline nlohmann::json trajectory_header(const PceTrajectory& traj, const UncertaintySchedule& schedule) {
  nlohmann::json idx = nlohmann::json::array();
  for (const MultiIndex& m : traj.basis.index_set()) idx.push_back({m.j1, m.j2});
  return nlohmann::json{{"interval", traj.interval_tag},
                        {"basis",
                         {{"dims", traj.basis.dims()},
                          {"degree", traj.basis.degree()},
                          {"truncation", to_string(traj.basis.truncation())},
                          {"quad_order", traj.basis.quad_order()},
                          {"size", traj.basis.size()},
                          {"index_set", idx}}},
                        {"schedule", schedule},
                        {"columns", "t, a_0..a_K, b_0..b_K"}};
}

/// Parses a trajectory CSV written by write_trajectory_csv against a known basis.
[[nodiscard]] inline PceTrajectory read_trajectory_csv(std::istream& is, const BasisSpec& basis, int interval_tag) {
  PceTrajectory traj;
  traj.basis = basis;
  traj.interval_tag = interval_tag;
  std::string line;
  if (!std::getline(is, line)) throw ConfigurationError("trajectory csv: missing header");
  const std::size_t n = basis.size();
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (row.size() != 1 + 2 * n) throw ConfigurationError("trajectory csv: row width does not match basis");
    traj.times.push_back(row[0]);
    traj.coeffs_a.emplace_back(row.begin() + 1, row.begin() + 1 + static_cast<std::ptrdiff_t>(n));
    traj.coeffs_b.emplace_back(row.begin() + 1 + static_cast<std::ptrdiff_t>(n), row.end());
  }
  return traj;
}

/// Columns: t, mean_x, var_x, mean_v, var_v.
inline void write_moments_csv(std::ostream& os, const MomentReport& r) {
  write_header(os, {"t", "mean_x", "var_x", "mean_v", "var_v"});
  for (std::size_t k = 0; k < r.size(); ++k) write_row(os, {r.times[k], r.mean_x[k], r.var_x[k], r.mean_v[k], r.var_v[k]});
}

[[nodiscard]] inline nlohmann::json moment_summary(const MomentReport& r, std::uint64_t seed, std::size_t sample_count,
                                                   int degree) {
  nlohmann::json j{{"seed", seed}, {"sample_count", sample_count}, {"degree", degree}};
  j["e_vres"] = r.e_vres ? nlohmann::json(*r.e_vres) : nlohmann::json(nullptr);
  j["var_vres"] = r.var_vres ? nlohmann::json(*r.var_vres) : nlohmann::json(nullptr);
  return j;
}

}  // namespace pcshaper::io
