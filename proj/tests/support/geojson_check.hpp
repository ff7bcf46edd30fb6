#pragma once

// Structural GeoJSON checks for FeatureCollections of (Multi)Polygons:
// member types, position ranges, closed linear rings with at least four
// positions, counterclockwise exterior rings, clockwise holes, and no
// ring spanning the antimeridian.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "json.hpp"

namespace testing_support {

// Shoelace sum over (lon, lat); positive for counterclockwise rings.
inline double signed_area(nlohmann::json const& ring) {
  double a = 0.0;
  for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
    a += ring[i][0].get<double>() * ring[i + 1][1].get<double>() -
         ring[i + 1][0].get<double>() * ring[i][1].get<double>();
  }
  return a / 2.0;
}

template <typename Fail>
void check_polygon(nlohmann::json const& rings, std::string const& where, Fail& fail) {
  std::size_t ring_no = 0;
  for (auto const& ring : rings) {
    auto const rwhere = where + "ring " + std::to_string(ring_no) + ": ";
    if (!ring.is_array() || ring.size() < 4) {
      fail(rwhere + "fewer than 4 positions");
      ++ring_no;
      continue;
    }
    bool positions_ok = true;
    double min_lon = 180.0, max_lon = -180.0;
    for (auto const& p : ring) {
      if (!p.is_array() || p.size() < 2 || !p[0].is_number() ||
          !p[1].is_number()) {
        fail(rwhere + "position is not [lon, lat]");
        positions_ok = false;
        break;
      }
      auto const lon = p[0].get<double>();
      auto const lat = p[1].get<double>();
      if (!std::isfinite(lon) || !std::isfinite(lat) || lon < -180.0 ||
          lon > 180.0 || lat < -90.0 || lat > 90.0) {
        fail(rwhere + "position out of range");
        positions_ok = false;
        break;
      }
      min_lon = std::min(min_lon, lon);
      max_lon = std::max(max_lon, lon);
    }
    if (!positions_ok) {
      ++ring_no;
      continue;
    }
    if (max_lon - min_lon > 180.0) {
      fail(rwhere + "ring crosses the antimeridian without being cut");
    }
    if (ring.front() != ring.back()) {
      fail(rwhere + "ring not closed");
    }
    auto const area = signed_area(ring);
    if (ring_no == 0 && !(area > 0.0)) {
      fail(rwhere + "exterior ring is not counterclockwise");
    }
    if (ring_no > 0 && !(area < 0.0)) {
      fail(rwhere + "hole is not clockwise");
    }
    ++ring_no;
  }
}

inline std::vector<std::string> geojson_problems(nlohmann::json const& doc) {
  std::vector<std::string> problems;
  auto fail = [&](std::string msg) { problems.push_back(std::move(msg)); };
  if (!doc.is_object() || doc.value("type", "") != "FeatureCollection") {
    fail("top level is not a FeatureCollection");
    return problems;
  }
  if (!doc.contains("features") || !doc["features"].is_array()) {
    fail("FeatureCollection without a features array");
    return problems;
  }
  std::size_t idx = 0;
  for (auto const& f : doc["features"]) {
    auto const where = "feature " + std::to_string(idx++) + ": ";
    if (!f.is_object() || f.value("type", "") != "Feature") {
      fail(where + "not a Feature");
      continue;
    }
    if (!f.contains("properties") ||
        !(f["properties"].is_object() || f["properties"].is_null())) {
      fail(where + "properties must be an object or null");
    }
    if (!f.contains("geometry") || !f["geometry"].is_object()) {
      fail(where + "missing geometry");
      continue;
    }
    auto const& g = f["geometry"];
    auto const type = g.value("type", "");
    if ((type != "Polygon" && type != "MultiPolygon") || !g.contains("coordinates") ||
        !g["coordinates"].is_array() || g["coordinates"].empty()) {
      fail(where + "geometry is not a Polygon or MultiPolygon with rings");
      continue;
    }
    if (type == "Polygon") {
      check_polygon(g["coordinates"], where, fail);
    } else {
      std::size_t part = 0;
      for (auto const& poly : g["coordinates"]) {
        if (!poly.is_array() || poly.empty()) {
          fail(where + "empty MultiPolygon member");
        } else {
          check_polygon(poly, where + "part " + std::to_string(part) + ": ", fail);
        }
        ++part;
      }
    }
  }
  return problems;
}

}  // namespace testing_support
