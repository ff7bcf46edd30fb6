#pragma once

// Per-region feature vectors: departures per hour (quantity) and distinct
// headsigns per hour (variety) for hours 6..22, 34 values in total.

#include <array>
#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "gtfs2vec/detail/csv.hpp"
#include "gtfs2vec/detail/io.hpp"
#include "gtfs2vec/gtfs.hpp"
#include "gtfs2vec/matrix.hpp"
#include "gtfs2vec/regionizer.hpp"

namespace gtfs2vec {

inline constexpr int first_feature_hour = 6;
inline constexpr int last_feature_hour = 22;
inline constexpr int hours_per_block = last_feature_hour - first_feature_hour + 1;
inline constexpr int feature_count = 2 * hours_per_block;

static_assert(feature_count == 34);

using hourly_counts = std::array<std::uint32_t, hours_per_block>;

inline constexpr bool in_feature_window(int hour) noexcept {
  return hour >= first_feature_hour && hour <= last_feature_hour;
}

struct region_feature_vector {
  region_key region;
  hourly_counts trips_per_hour{};
  hourly_counts directions_per_hour{};

  friend bool operator==(region_feature_vector const&,
                         region_feature_vector const&) = default;
};

inline std::vector<std::string> const& feature_column_names() {
  static auto const names = [] {
    std::vector<std::string> n;
    char buf[16];
    for (auto const* prefix : {"trips", "dirs"}) {
      for (int h = first_feature_hour; h <= last_feature_hour; ++h) {
        std::snprintf(buf, sizeof(buf), "%s_h%02d", prefix, h);
        n.emplace_back(buf);
      }
    }
    return n;
  }();
  return names;
}

// A trip serving k stops of the region contributes k.
inline hourly_counts hourly_trip_counts(
    std::span<departure_event const> events,
    std::span<std::string const> region_stops) {
  std::unordered_set<std::string_view> const members(region_stops.begin(),
                                                     region_stops.end());
  hourly_counts counts{};
  for (auto const& e : events) {
    if (in_feature_window(e.hour_of_day) && members.contains(e.stop_id)) {
      ++counts[static_cast<std::size_t>(e.hour_of_day - first_feature_hour)];
    }
  }
  return counts;
}

// Distinct headsigns among all departures of the region in each hour.
inline hourly_counts hourly_direction_counts(
    std::span<departure_event const> events,
    std::span<std::string const> region_stops) {
  std::unordered_set<std::string_view> const members(region_stops.begin(),
                                                     region_stops.end());
  std::array<std::unordered_set<std::string_view>, hours_per_block> seen;
  for (auto const& e : events) {
    if (in_feature_window(e.hour_of_day) && members.contains(e.stop_id)) {
      seen[static_cast<std::size_t>(e.hour_of_day - first_feature_hour)]
          .insert(detail::trim(e.headsign));
    }
  }
  hourly_counts counts{};
  for (std::size_t i = 0; i < seen.size(); ++i) {
    counts[i] = static_cast<std::uint32_t>(seen[i].size());
  }
  return counts;
}

// Single pass over a city's events for all of its regions. Produces the
// same vectors as calling the two per-region functions for each region.
inline std::vector<region_feature_vector> city_features(
    region_map const& regions, std::span<departure_event const> events) {
  std::vector<region_feature_vector> out;
  out.reserve(regions.size());
  std::unordered_map<std::string_view, std::size_t> region_of_stop;
  for (auto const& [key, stop_ids] : regions) {
    for (auto const& id : stop_ids) {
      region_of_stop.emplace(id, out.size());
    }
    out.push_back(region_feature_vector{key, {}, {}});
  }
  std::vector<std::array<std::unordered_set<std::string_view>, hours_per_block>>
      headsigns(out.size());
  for (auto const& e : events) {
    if (!in_feature_window(e.hour_of_day)) {
      continue;
    }
    auto const it = region_of_stop.find(e.stop_id);
    if (it == region_of_stop.end()) {
      continue;
    }
    auto const h = static_cast<std::size_t>(e.hour_of_day - first_feature_hour);
    ++out[it->second].trips_per_hour[h];
    headsigns[it->second][h].insert(detail::trim(e.headsign));
  }
  for (std::size_t r = 0; r < out.size(); ++r) {
    for (std::size_t h = 0; h < hours_per_block; ++h) {
      out[r].directions_per_hour[h] =
          static_cast<std::uint32_t>(headsigns[r][h].size());
    }
  }
  return out;
}

struct feature_matrix {
  std::vector<region_key> rows;
  matrix values{0, feature_count};  // raw counts, trips block then dirs block

  std::size_t size() const noexcept { return rows.size(); }
  static std::vector<std::string> const& column_names() {
    return feature_column_names();
  }

  auto trips_block() const {
    return values.leftCols(hours_per_block);
  }
  auto dirs_block() const {
    return values.rightCols(hours_per_block);
  }

  friend bool operator==(feature_matrix const& a, feature_matrix const& b) {
    return a.rows == b.rows && a.values.rows() == b.values.rows() &&
           a.values.cols() == b.values.cols() && a.values == b.values;
  }
};

struct city_events {
  std::string city_id;
  region_map regions;
  std::vector<departure_event> events;
};

// Rows are sorted by (city_id, cell) regardless of input order.
inline feature_matrix to_feature_matrix(
    std::vector<region_feature_vector> vectors) {
  std::sort(vectors.begin(), vectors.end(),
            [](auto const& a, auto const& b) { return a.region < b.region; });
  for (std::size_t i = 1; i < vectors.size(); ++i) {
    if (vectors[i].region == vectors[i - 1].region) {
      throw format_error("duplicate region " + vectors[i].region.str());
    }
  }
  feature_matrix m;
  m.rows.reserve(vectors.size());
  m.values.resize(static_cast<Eigen::Index>(vectors.size()), feature_count);
  for (std::size_t r = 0; r < vectors.size(); ++r) {
    m.rows.push_back(vectors[r].region);
    auto const row = static_cast<Eigen::Index>(r);
    for (int h = 0; h < hours_per_block; ++h) {
      m.values(row, h) = vectors[r].trips_per_hour[static_cast<std::size_t>(h)];
      m.values(row, hours_per_block + h) =
          vectors[r].directions_per_hour[static_cast<std::size_t>(h)];
    }
  }
  return m;
}

inline feature_matrix build_feature_matrix(std::span<city_events const> cities) {
  std::vector<region_feature_vector> all;
  for (auto const& city : cities) {
    for (auto& v : city_features(city.regions, city.events)) {
      if (v.region.city_id != city.city_id) {
        throw format_error("region " + v.region.str() +
                           " grouped under city '" + city.city_id + "'");
      }
      all.push_back(std::move(v));
    }
  }
  return to_feature_matrix(std::move(all));
}

inline std::string features_to_csv(feature_matrix const& m) {
  std::string out = "city_id,cell";
  for (auto const& name : feature_column_names()) {
    out += ',';
    out += name;
  }
  out += '\n';
  for (std::size_t r = 0; r < m.size(); ++r) {
    detail::append_csv_field(out, m.rows[r].city_id);
    out += ',';
    out += m.rows[r].cell.str();
    for (int c = 0; c < feature_count; ++c) {
      out += ',';
      detail::append_double(out, m.values(static_cast<Eigen::Index>(r), c));
    }
    out += '\n';
  }
  return out;
}

inline feature_matrix features_from_csv(std::string_view text) {
  detail::csv_reader r{text, "features"};
  auto const city = r.required_column("city_id");
  auto const cell = r.required_column("cell");
  std::vector<std::size_t> cols;
  for (auto const& name : feature_column_names()) {
    cols.push_back(r.required_column(name));
  }
  std::vector<region_key> keys;
  std::vector<std::array<double, feature_count>> rows;
  detail::csv_row row;
  while (r.next(row)) {
    try {
      keys.push_back(
          region_key{row.fields[city], cell_id::parse(row.fields[cell])});
      std::array<double, feature_count> v{};
      for (std::size_t c = 0; c < cols.size(); ++c) {
        v[c] = detail::parse_number_or_throw<double>(row.fields[cols[c]],
                                                     feature_column_names()[c]);
      }
      rows.push_back(v);
    } catch (error const& e) {
      throw malformed_row("features", row.line, e.what());
    }
  }
  feature_matrix m;
  m.rows = std::move(keys);
  m.values.resize(static_cast<Eigen::Index>(rows.size()), feature_count);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (int c = 0; c < feature_count; ++c) {
      m.values(static_cast<Eigen::Index>(i), c) =
          rows[i][static_cast<std::size_t>(c)];
    }
  }
  return m;
}

}  // namespace gtfs2vec
