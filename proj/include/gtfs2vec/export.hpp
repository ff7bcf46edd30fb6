#pragma once

// Region records assembled from all stages, and their GeoJSON rendering
// (one hexagon Polygon per region).

#include <algorithm>
#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "gtfs2vec/features.hpp"
#include "gtfs2vec/regionizer.hpp"

namespace gtfs2vec {

struct region_record {
  region_key region;
  std::array<double, feature_count> raw{};
  std::array<double, feature_count> normalized{};
  vector embedding;
  int label_k3 = -1;
  int label_k9 = -1;
  std::string typology_name;
};

enum class map_layer { k3, k9, features };

inline map_layer parse_map_layer(std::string_view s) {
  if (s == "k3") {
    return map_layer::k3;
  }
  if (s == "k9") {
    return map_layer::k9;
  }
  if (s == "features") {
    return map_layer::features;
  }
  throw config_error("unknown map layer '" + std::string{s} +
                     "' (expected k3, k9 or features)");
}

namespace detail {

// Keeps the part of a convex ring on one side of the meridian `lon`
// (Sutherland-Hodgman against a single edge, planar in lon/lat).
inline std::vector<lat_lon> clip_at_meridian(std::vector<lat_lon> const& ring,
                                             double lon, bool keep_west) {
  auto inside = [&](lat_lon const& p) {
    return keep_west ? p.lon <= lon : p.lon >= lon;
  };
  std::vector<lat_lon> out;
  for (std::size_t i = 0; i < ring.size(); ++i) {
    auto const& a = ring[i];
    auto const& b = ring[(i + 1) % ring.size()];
    if (inside(a)) {
      out.push_back(a);
    }
    if (inside(a) != inside(b)) {
      auto const t = (lon - a.lon) / (b.lon - a.lon);
      out.push_back({a.lat + t * (b.lat - a.lat), lon});
    }
  }
  return out;
}

inline nlohmann::json closed_ring(std::vector<lat_lon> const& vertices,
                                  double lon_shift = 0.0) {
  auto ring = nlohmann::json::array();
  for (auto const& v : vertices) {
    ring.push_back({v.lon + lon_shift, v.lat});
  }
  ring.push_back(ring.front());
  return ring;
}

}  // namespace detail

// Closed exterior ring in [lon, lat] order, counterclockwise as RFC 7946
// requires. A cell straddling the antimeridian is cut along it into a
// two-part MultiPolygon.
inline nlohmann::json cell_polygon(cell_id cell) {
  auto boundary = cell_boundary(cell);
  auto const [lo, hi] = std::minmax_element(
      boundary.begin(), boundary.end(),
      [](lat_lon const& a, lat_lon const& b) { return a.lon < b.lon; });
  if (hi->lon - lo->lon <= 180.0) {
    return nlohmann::json{
        {"type", "Polygon"},
        {"coordinates", nlohmann::json::array({detail::closed_ring(boundary)})}};
  }
  // Unwrap to a continuous longitude range around +180.
  for (auto& v : boundary) {
    if (v.lon < 0.0) {
      v.lon += 360.0;
    }
  }
  auto const positive_side = detail::clip_at_meridian(boundary, 180.0, true);
  auto const negative_side = detail::clip_at_meridian(boundary, 180.0, false);
  return nlohmann::json{
      {"type", "MultiPolygon"},
      {"coordinates",
       nlohmann::json::array({nlohmann::json::array({detail::closed_ring(positive_side)}),
                              nlohmann::json::array(
                                  {detail::closed_ring(negative_side, -360.0)})})}};
}

inline nlohmann::json export_geojson(std::vector<region_record> const& records,
                                     map_layer layer) {
  auto features = nlohmann::json::array();
  auto const& names = feature_column_names();
  for (auto const& r : records) {
    nlohmann::json props{{"city_id", r.region.city_id},
                         {"cell", r.region.cell.str()},
                         {"typology_name", r.typology_name}};
    switch (layer) {
      case map_layer::k3:
        props["label"] = r.label_k3;
        break;
      case map_layer::k9:
        props["label"] = r.label_k9;
        props["label_k3"] = r.label_k3;
        break;
      case map_layer::features: {
        double sum_trips = 0.0;
        double dirs = 0.0;
        for (std::size_t i = 0; i < names.size(); ++i) {
          props[names[i]] = r.raw[i];
          (static_cast<int>(i) < hours_per_block ? sum_trips : dirs) += r.raw[i];
        }
        props["sum_trips"] = sum_trips;
        props["directions_whole_day"] = dirs;
        break;
      }
    }
    features.push_back(nlohmann::json{{"type", "Feature"},
                                      {"geometry", cell_polygon(r.region.cell)},
                                      {"properties", std::move(props)}});
  }
  return nlohmann::json{{"type", "FeatureCollection"},
                        {"features", std::move(features)}};
}

}  // namespace gtfs2vec
