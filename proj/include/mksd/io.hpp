#pragma once

// Text ingestion and emission of chart points.
//
// One observation per line; fields separated by commas, semicolons or
// whitespace; '#' starts a comment; a single non-numeric header line before
// the first observation is skipped. Circle: one angle. Torus: two angles.
// SO(3): nine entries of the rotation matrix in row-major order.

#include <Eigen/Geometry>

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "mksd/errors.hpp"
#include "mksd/manifold.hpp"

namespace mksd {

struct IngestOptions {
  bool degrees = false;          // angles given in degrees
  int directions = 0;            // > 0: integer direction codes m mapped to 2πm/directions
  double rotation_tol = 1e-6;    // accepted rotation_defect for SO(3) rows
};

namespace detail {

inline std::optional<double> parse_double(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  auto sep = [](char c) { return c == ',' || c == ';' || c == ' ' || c == '\t' || c == '\r'; };
  while (i < line.size()) {
    while (i < line.size() && sep(line[i])) ++i;
    const std::size_t start = i;
    while (i < line.size() && !sep(line[i])) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

}  // namespace detail

/// Shortest text that reads back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

struct NumericRow {
  std::size_t line = 0;
  std::vector<double> values;
};

/// Numeric rows with exactly `columns` fields, with their 1-based line numbers.
inline std::vector<NumericRow> read_numeric_rows(std::istream& in, std::size_t columns) {
  std::vector<NumericRow> rows;
  std::string raw;
  std::size_t line = 0;
  bool header_allowed = true;
  while (std::getline(in, raw)) {
    ++line;
    std::string_view s(raw);
    if (const auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
    const auto fields = detail::split_fields(s);
    if (fields.empty()) continue;
    NumericRow row{line, {}};
    bool numeric = true;
    for (auto f : fields) {
      const auto v = detail::parse_double(f);
      if (!v) {
        numeric = false;
        break;
      }
      row.values.push_back(*v);
    }
    if (!numeric) {
      if (header_allowed) {
        header_allowed = false;
        continue;
      }
      throw ParseError(line, "non-numeric field");
    }
    header_allowed = false;
    if (row.values.size() != columns) {
      throw ParseError(line, "expected " + std::to_string(columns) + " columns, got " +
                                 std::to_string(row.values.size()));
    }
    for (double v : row.values) {
      if (!std::isfinite(v)) throw ParseError(line, "non-finite value");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline double angle_from_field(double v, const IngestOptions& opt) {
  if (opt.directions > 0) return wrap_angle(kTwoPi * v / opt.directions);
  if (opt.degrees) return wrap_angle(v * std::numbers::pi / 180.0);
  return wrap_angle(v);
}

inline void check_options(ManifoldKind kind, const IngestOptions& opt) {
  if (opt.degrees && opt.directions > 0) throw UsageError("--degrees and --directions are mutually exclusive");
  if (opt.directions < 0) throw UsageError("--directions must be positive");
  if (kind == ManifoldKind::SO3Euler && (opt.degrees || opt.directions > 0)) {
    throw UsageError("--degrees and --directions apply to circle and torus data only");
  }
}

/// Rotation matrix to Euler coordinates. Rows on the singular set are turned
/// about the body x axis by 1e-8, growing tenfold until the map succeeds.
inline SO3Euler::Point rotation_to_point(const RotationMatrix& m) {
  try {
    return SO3Euler::matrix_to_euler(m);
  } catch (const GimbalLock&) {
  }
  for (double eps = 1e-8; eps < 1e-2; eps *= 10.0) {
    const RotationMatrix j = m * Eigen::AngleAxisd(eps, Eigen::Vector3d::UnitX()).toRotationMatrix();
    try {
      return SO3Euler::matrix_to_euler(j);
    } catch (const GimbalLock&) {
    }
  }
  throw GimbalLock("rotation could not be moved off the Euler-angle singular set");
}

template <Chart C>
std::vector<typename C::Point> ingest(std::istream& in, const IngestOptions& opt = {}) {
  check_options(C::kind, opt);
  std::vector<typename C::Point> out;
  if constexpr (C::kind == ManifoldKind::SO3Euler) {
    for (const auto& row : read_numeric_rows(in, 9)) {
      const RotationMatrix m = Eigen::Map<const Eigen::Matrix<double, 3, 3, Eigen::RowMajor>>(row.values.data());
      const double defect = rotation_defect(m);
      if (!(defect <= opt.rotation_tol)) throw InvalidRotation(row.line, defect);
      out.push_back(rotation_to_point(m));
    }
  } else {
    for (const auto& row : read_numeric_rows(in, C::dim)) {
      typename C::Point p;
      for (int i = 0; i < C::dim; ++i) p(i) = angle_from_field(row.values[static_cast<std::size_t>(i)], opt);
      out.push_back(p);
    }
  }
  return out;
}

template <Chart C>
std::vector<typename C::Point> ingest_file(const std::string& path, const IngestOptions& opt = {}) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open input file '" + path + "'");
  return ingest<C>(in, opt);
}

/// Inverse of ingest (radians; SO(3) as row-major matrices), full precision.
template <Chart C>
void emit(std::ostream& out, std::span<const typename C::Point> pts) {
  for (const auto& p : pts) {
    if constexpr (C::kind == ManifoldKind::SO3Euler) {
      const RotationMatrix m = SO3Euler::euler_to_matrix(p);
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) out << format_double(m(r, c)) << (r == 2 && c == 2 ? '\n' : ',');
    } else {
      for (int i = 0; i < C::dim; ++i) out << format_double(p(i)) << (i + 1 == C::dim ? '\n' : ',');
    }
  }
}

}  // namespace mksd
