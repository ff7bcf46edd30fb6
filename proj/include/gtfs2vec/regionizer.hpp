#pragma once

// Micro-regions are H3 cells; a region is a (city, cell) pair.

#include <cinttypes>
#include <cmath>
#include <compare>
#include <cstdint>
#include <cstdio>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <h3/h3api.h>

#include "gtfs2vec/gtfs.hpp"

namespace gtfs2vec {

inline constexpr int default_resolution = 8;

class cell_id {
public:
  cell_id() = default;

  // Throws invalid_cell unless `value` is a valid H3 cell index.
  explicit cell_id(std::uint64_t value) : value_{value} {
    if (!::isValidCell(value_)) {
      throw invalid_cell("not a valid H3 cell: " + to_hex(value_));
    }
  }

  static cell_id parse(std::string_view hex) {
    std::uint64_t v{};
    auto const s = detail::trim(hex);
    auto const [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v, 16);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
      throw invalid_cell("not a hexadecimal cell index: '" + std::string{hex} +
                         "'");
    }
    return cell_id{v};
  }

  std::uint64_t value() const noexcept { return value_; }
  int resolution() const noexcept { return ::getResolution(value_); }
  bool is_pentagon() const noexcept { return ::isPentagon(value_) != 0; }

  // 15-character lowercase hexadecimal, the canonical H3 string form.
  std::string str() const { return to_hex(value_); }

  cell_id parent(int resolution) const {
    H3Index p{};
    if (::cellToParent(value_, resolution, &p) != E_SUCCESS) {
      throw invalid_cell("no parent at resolution " +
                         std::to_string(resolution) + " for " + str());
    }
    return cell_id{p};
  }

  friend auto operator<=>(cell_id const&, cell_id const&) = default;

private:
  static std::string to_hex(std::uint64_t v) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%015" PRIx64, v);
    return buf;
  }

  std::uint64_t value_{0};
};

struct region_key {
  std::string city_id;
  cell_id cell;

  // Canonical order: city, then cell. Fixed-width hex makes the numeric
  // cell order identical to the string order.
  friend auto operator<=>(region_key const&, region_key const&) = default;
  friend bool operator==(region_key const&, region_key const&) = default;

  std::string str() const { return city_id + ":" + cell.str(); }
};

inline region_key parse_region_key(std::string_view text) {
  auto const colon = text.rfind(':');
  if (colon == std::string_view::npos || colon == 0) {
    throw format_error("region must be written as <city>:<cell>, got '" +
                       std::string{text} + "'");
  }
  return region_key{std::string{text.substr(0, colon)},
                    cell_id::parse(text.substr(colon + 1))};
}

struct lat_lon {
  double lat{};
  double lon{};

  friend bool operator==(lat_lon const&, lat_lon const&) = default;
};

inline cell_id assign_cell(double lat, double lon,
                           int resolution = default_resolution) {
  if (!std::isfinite(lat) || !std::isfinite(lon) || lat < -90.0 ||
      lat > 90.0 || lon < -180.0 || lon > 180.0) {
    throw invalid_coordinate("invalid coordinate (" + std::to_string(lat) +
                             ", " + std::to_string(lon) + ")");
  }
  if (resolution < 0 || resolution > 15) {
    throw invalid_coordinate("H3 resolution must be 0..15, got " +
                             std::to_string(resolution));
  }
  LatLng const p{::degsToRads(lat), ::degsToRads(lon)};
  H3Index out{};
  if (::latLngToCell(&p, resolution, &out) != E_SUCCESS) {
    throw invalid_coordinate("H3 rejected coordinate (" + std::to_string(lat) +
                             ", " + std::to_string(lon) + ")");
  }
  return cell_id{out};
}

using region_map = std::map<region_key, std::vector<std::string>>;

// Every stop lands in exactly one region; regions without stops are absent.
inline region_map group_stops_by_region(std::vector<stop> const& stops,
                                        std::string const& city_id,
                                        int resolution = default_resolution) {
  region_map regions;
  for (auto const& s : stops) {
    regions[region_key{city_id, assign_cell(s.lat, s.lon, resolution)}]
        .push_back(s.stop_id);
  }
  return regions;
}

// Boundary vertices in counterclockwise order (6, or 5 for pentagons),
// without repeating the first vertex.
inline std::vector<lat_lon> cell_boundary(cell_id cell) {
  if (!::isValidCell(cell.value())) {
    throw invalid_cell("not a valid H3 cell: " + cell.str());
  }
  CellBoundary b{};
  if (::cellToBoundary(cell.value(), &b) != E_SUCCESS) {
    throw invalid_cell("cannot compute boundary of " + cell.str());
  }
  std::vector<lat_lon> ring;
  ring.reserve(static_cast<std::size_t>(b.numVerts));
  for (int i = 0; i < b.numVerts; ++i) {
    ring.push_back({::radsToDegs(b.verts[i].lat), ::radsToDegs(b.verts[i].lng)});
  }
  return ring;
}

inline lat_lon cell_center(cell_id cell) {
  LatLng c{};
  if (::cellToLatLng(cell.value(), &c) != E_SUCCESS) {
    throw invalid_cell("cannot compute center of " + cell.str());
  }
  return {::radsToDegs(c.lat), ::radsToDegs(c.lng)};
}

// Cells whose centers fall inside a polygon (outer ring plus holes, each
// a lat/lon ring). Used to add stop-free cells inside a city boundary.
inline std::vector<cell_id> cells_in_polygon(
    std::vector<std::vector<lat_lon>> const& rings,
    int resolution = default_resolution) {
  if (rings.empty()) {
    return {};
  }
  auto to_loop = [](std::vector<lat_lon> const& ring,
                    std::vector<LatLng>& storage) {
    storage.clear();
    for (auto const& p : ring) {
      storage.push_back({::degsToRads(p.lat), ::degsToRads(p.lon)});
    }
    return GeoLoop{static_cast<int>(storage.size()), storage.data()};
  };
  std::vector<std::vector<LatLng>> storage(rings.size());
  GeoPolygon polygon{};
  polygon.geoloop = to_loop(rings[0], storage[0]);
  std::vector<GeoLoop> holes;
  for (std::size_t i = 1; i < rings.size(); ++i) {
    holes.push_back(to_loop(rings[i], storage[i]));
  }
  polygon.numHoles = static_cast<int>(holes.size());
  polygon.holes = holes.empty() ? nullptr : holes.data();

  std::int64_t max_size{};
  if (::maxPolygonToCellsSize(&polygon, resolution, 0, &max_size) !=
      E_SUCCESS) {
    throw invalid_coordinate("cannot fill polygon at resolution " +
                             std::to_string(resolution));
  }
  std::vector<H3Index> out(static_cast<std::size_t>(max_size), 0);
  if (::polygonToCells(&polygon, resolution, 0, out.data()) != E_SUCCESS) {
    throw invalid_coordinate("cannot fill polygon at resolution " +
                             std::to_string(resolution));
  }
  std::vector<cell_id> cells;
  for (auto h : out) {
    if (h != 0) {
      cells.emplace_back(h);
    }
  }
  std::sort(cells.begin(), cells.end());
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
  return cells;
}

}  // namespace gtfs2vec
