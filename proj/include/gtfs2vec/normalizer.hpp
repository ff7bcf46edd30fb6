#pragma once

// Block-wise min-max scaling: one (min, max) pair shared by all 17 trip
// columns and one by all 17 direction columns, fitted on every region of
// every city at once.

#include <algorithm>
#include <map>
#include <string>
#include <string_view>

#include "gtfs2vec/detail/io.hpp"
#include "gtfs2vec/error.hpp"
#include "gtfs2vec/features.hpp"
#include "gtfs2vec/matrix.hpp"

namespace gtfs2vec {

struct norm_params {
  double trips_min{};
  double trips_max{};
  double dirs_min{};
  double dirs_max{};

  friend bool operator==(norm_params const&, norm_params const&) = default;
};

inline norm_params fit(matrix const& raw) {
  if (raw.rows() == 0) {
    throw empty_matrix("cannot fit normalization on an empty matrix");
  }
  if (raw.cols() != feature_count) {
    throw shape_mismatch("expected " + std::to_string(feature_count) +
                         " feature columns, got " + std::to_string(raw.cols()));
  }
  auto const trips = raw.leftCols(hours_per_block);
  auto const dirs = raw.rightCols(hours_per_block);
  return norm_params{trips.minCoeff(), trips.maxCoeff(), dirs.minCoeff(),
                     dirs.maxCoeff()};
}

inline norm_params fit(feature_matrix const& m) { return fit(m.values); }

namespace detail {

inline double scale(double v, double lo, double hi) {
  if (hi == lo) {
    return 0.0;
  }
  return std::clamp((v - lo) / (hi - lo), 0.0, 1.0);
}

inline double unscale(double v, double lo, double hi) {
  return lo + v * (hi - lo);
}

template <typename F>
matrix map_blocks(matrix const& in, norm_params const& p, F f) {
  if (in.cols() != feature_count) {
    throw shape_mismatch("expected " + std::to_string(feature_count) +
                         " feature columns, got " + std::to_string(in.cols()));
  }
  matrix out(in.rows(), in.cols());
  for (Eigen::Index r = 0; r < in.rows(); ++r) {
    for (Eigen::Index c = 0; c < in.cols(); ++c) {
      out(r, c) = c < hours_per_block ? f(in(r, c), p.trips_min, p.trips_max)
                                      : f(in(r, c), p.dirs_min, p.dirs_max);
    }
  }
  return out;
}

}  // namespace detail

// Values outside the fitted range are clamped to [0, 1]; a block whose
// min equals its max maps to 0.
inline matrix transform(matrix const& raw, norm_params const& p) {
  return detail::map_blocks(raw, p, detail::scale);
}

inline matrix inverse_transform(matrix const& normalized, norm_params const& p) {
  return detail::map_blocks(normalized, p, detail::unscale);
}

inline std::string norm_params_to_text(norm_params const& p) {
  std::string out = "# gtfs2vec normalization parameters\nmode=global\n";
  auto line = [&](std::string_view key, double v) {
    out += key;
    out += '=';
    detail::append_double(out, v);
    out += '\n';
  };
  line("trips_min", p.trips_min);
  line("trips_max", p.trips_max);
  line("dirs_min", p.dirs_min);
  line("dirs_max", p.dirs_max);
  return out;
}

inline norm_params norm_params_from_text(std::string_view text) {
  std::map<std::string, std::string, std::less<>> kv;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) {
      end = text.size();
    }
    auto const line = detail::trim(text.substr(start, end - start));
    start = end + 1;
    if (line.empty() || line.front() == '#') {
      continue;
    }
    auto const eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw format_error("normalization parameters: expected key=value, got '" +
                         std::string{line} + "'");
    }
    kv[std::string{detail::trim(line.substr(0, eq))}] =
        std::string{detail::trim(line.substr(eq + 1))};
  }
  if (auto const mode = kv.find("mode"); mode != kv.end() && mode->second != "global") {
    throw format_error("unsupported normalization mode '" + mode->second + "'");
  }
  auto get = [&](std::string_view key) {
    auto const it = kv.find(key);
    if (it == kv.end()) {
      throw format_error("normalization parameters: missing '" +
                         std::string{key} + "'");
    }
    return detail::parse_number_or_throw<double>(it->second, key);
  };
  norm_params p{get("trips_min"), get("trips_max"), get("dirs_min"),
                get("dirs_max")};
  if (p.trips_min > p.trips_max || p.dirs_min > p.dirs_max) {
    throw format_error("normalization parameters: min exceeds max");
  }
  return p;
}

}  // namespace gtfs2vec
