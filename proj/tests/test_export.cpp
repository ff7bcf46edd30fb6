#include <gtest/gtest.h>

#include <cmath>

#include "gtfs2vec/export.hpp"
#include "support/geojson_check.hpp"

using namespace gtfs2vec;
using namespace testing_support;

namespace {

std::vector<region_record> four_records() {
  std::vector<region_record> out;
  double const lats[] = {51.1079, 51.13, -33.8688, 0.0};
  double const lons[] = {17.0385, 17.05, 151.2093, 179.999};
  for (int i = 0; i < 4; ++i) {
    region_record r;
    r.region = {i < 2 ? "wro" : "far", assign_cell(lats[i], lons[i])};
    for (std::size_t c = 0; c < r.raw.size(); ++c) {
      r.raw[c] = static_cast<double>(i + 1) * (c < 17 ? 2.0 : 1.0);
    }
    r.label_k3 = i % 3;
    r.label_k9 = i;
    r.typology_name = i == 0 ? "hubs" : "suburban";
    out.push_back(r);
  }
  return out;
}

}  // namespace

TEST(CellPolygon, ClosedSevenPositionRingInLonLatOrder) {
  auto const cell = cell_id::parse("881e20408bfffff");
  auto const poly = cell_polygon(cell);
  EXPECT_EQ(poly["type"], "Polygon");
  auto const& ring = poly["coordinates"][0];
  ASSERT_EQ(ring.size(), 7u);
  EXPECT_EQ(ring.front(), ring.back());
  auto const boundary = cell_boundary(cell);
  EXPECT_EQ(ring[0][0].get<double>(), boundary[0].lon);
  EXPECT_EQ(ring[0][1].get<double>(), boundary[0].lat);
  EXPECT_GT(signed_area(ring), 0.0);
  EXPECT_EQ(cell_polygon(cell_id::parse("8808000001fffff"))["coordinates"][0].size(), 6u);
}

TEST(CellPolygon, AntimeridianCellIsCutIntoTwoParts) {
  for (double lon : {179.999, -179.999}) {
    auto const cell = assign_cell(0.0, lon);
    auto const g = cell_polygon(cell);
    ASSERT_EQ(g["type"], "MultiPolygon") << cell.str();
    ASSERT_EQ(g["coordinates"].size(), 2u);
    double area = 0.0;
    for (auto const& part : g["coordinates"]) {
      auto const& ring = part[0];
      EXPECT_EQ(ring.front(), ring.back());
      EXPECT_GT(signed_area(ring), 0.0);
      area += signed_area(ring);
      bool touches = false;
      for (auto const& p : ring) {
        EXPECT_LE(std::abs(p[0].get<double>()), 180.0);
        touches = touches || std::abs(p[0].get<double>()) == 180.0;
      }
      EXPECT_TRUE(touches);
    }
    // The two parts together cover about one resolution-8 cell.
    auto const reference = signed_area(cell_polygon(assign_cell(0.0, 179.9))["coordinates"][0]);
    EXPECT_NEAR(area, reference, 0.05 * reference);
  }
}

TEST(ExportGeojson, OneFeaturePerRegionAndValid) {
  auto const records = four_records();
  for (auto const layer : {map_layer::k3, map_layer::k9, map_layer::features}) {
    auto const doc = export_geojson(records, layer);
    EXPECT_EQ(doc["type"], "FeatureCollection");
    ASSERT_EQ(doc["features"].size(), 4u);
    EXPECT_EQ(geojson_problems(doc), std::vector<std::string>{});
    // Survives a text round trip.
    EXPECT_EQ(nlohmann::json::parse(doc.dump()), doc);
  }
  EXPECT_TRUE(export_geojson({}, map_layer::k3)["features"].empty());
}

TEST(ExportGeojson, LayerProperties) {
  auto const records = four_records();
  auto const k3 = export_geojson(records, map_layer::k3)["features"][1]["properties"];
  EXPECT_EQ(k3["city_id"], "wro");
  EXPECT_EQ(k3["cell"], records[1].region.cell.str());
  EXPECT_EQ(k3["label"], 1);
  EXPECT_EQ(k3["typology_name"], "suburban");
  EXPECT_FALSE(k3.contains("trips_h06"));

  auto const k9 = export_geojson(records, map_layer::k9)["features"][3]["properties"];
  EXPECT_EQ(k9["label"], 3);
  EXPECT_EQ(k9["label_k3"], 0);

  auto const f = export_geojson(records, map_layer::features)["features"][2]["properties"];
  EXPECT_EQ(f["trips_h06"], 6.0);
  EXPECT_EQ(f["dirs_h22"], 3.0);
  EXPECT_EQ(f["sum_trips"], 17 * 6.0);
  EXPECT_EQ(f["directions_whole_day"], 17 * 3.0);
  EXPECT_EQ(f.size(), 3u + 34u + 2u);
}

TEST(ExportGeojson, ValidatorRejectsBrokenDocuments) {
  auto doc = export_geojson(four_records(), map_layer::k3);
  auto open = doc;
  open["features"][0]["geometry"]["coordinates"][0].erase(6);
  EXPECT_FALSE(geojson_problems(open).empty());
  auto clockwise = doc;
  auto& ring = clockwise["features"][0]["geometry"]["coordinates"][0];
  std::reverse(ring.begin(), ring.end());
  EXPECT_FALSE(geojson_problems(clockwise).empty());
  auto swapped = doc;
  swapped["features"][2]["geometry"]["coordinates"][0][0] = {-33.8, 151.2};
  EXPECT_FALSE(geojson_problems(swapped).empty());
}

TEST(MapLayer, Parse) {
  EXPECT_EQ(parse_map_layer("k3"), map_layer::k3);
  EXPECT_EQ(parse_map_layer("k9"), map_layer::k9);
  EXPECT_EQ(parse_map_layer("features"), map_layer::features);
  EXPECT_THROW(parse_map_layer("k4"), config_error);
}
