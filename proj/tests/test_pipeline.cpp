#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <set>

#include "gtfs2vec/pipeline.hpp"
#include "support/fixture_run.hpp"
#include "support/geojson_check.hpp"
#include "support/temp_dir.hpp"

using namespace gtfs2vec;
using namespace testing_support;

namespace {

std::vector<fixture_city> two_cities() {
  return {{"alpha", 51.00, 17.00, 6, 4, 3, 11}, {"beta", 52.20, 21.00, 6, 5, 3, 12}};
}

std::string slurp(fs::path const& p) {
  std::ifstream in{p, std::ios::binary};
  return {std::istreambuf_iterator<char>{in}, std::istreambuf_iterator<char>{}};
}

std::map<std::string, std::string> digests(run_manifest const& m) {
  std::map<std::string, std::string> out;
  for (auto const& a : m.artifacts) {
    out[a.path] = a.sha256;
  }
  return out;
}

bool contains(std::vector<std::string> const& v, std::string const& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

}  // namespace

TEST(RunConfig, ParsesGlobalAndCityKeys) {
  auto const cfg = parse_run_config(R"(# demo configuration
output_dir = out
seed = 7
resolution = 8
cuts = 3, 9, 12
epochs = 50
batch_size = 16
learning_rate = 0.01
optimizer = sgd
shuffle = false
min_routes = 10

[city]
id = wro
gtfs = feeds/wro.zip     # relative to the config file
population = 640000
date = 2024-01-03

[ city ]
city_id = "krk"
gtfs = /abs/krk.zip
population = 800000
service_date = auto
boundary = krk.geojson
)",
                                    "/cfg");
  EXPECT_EQ(cfg.output_dir, fs::path{"/cfg/out"});
  EXPECT_EQ(cfg.seed, 7u);
  EXPECT_EQ(train_seed(cfg), 8u);
  EXPECT_EQ(cfg.cuts, (std::vector<std::size_t>{3, 9, 12}));
  EXPECT_EQ(cfg.train.epochs, 50);
  EXPECT_EQ(cfg.train.batch_size, 16);
  EXPECT_EQ(cfg.train.learning_rate, 0.01);
  EXPECT_EQ(cfg.train.optimizer, optimizer_kind::sgd);
  EXPECT_FALSE(cfg.train.shuffle);
  EXPECT_EQ(cfg.validation.min_routes, 10);
  ASSERT_EQ(cfg.cities.size(), 2u);
  EXPECT_EQ(cfg.cities[0].city_id, "wro");
  EXPECT_EQ(cfg.cities[0].gtfs, fs::path{"/cfg/feeds/wro.zip"});
  EXPECT_EQ(cfg.cities[0].population, 640000);
  EXPECT_EQ(cfg.cities[0].service_date, testing_support::ymd(2024, 1, 3));
  EXPECT_EQ(cfg.cities[1].city_id, "krk");
  EXPECT_EQ(cfg.cities[1].gtfs, fs::path{"/abs/krk.zip"});
  EXPECT_FALSE(cfg.cities[1].service_date);
  EXPECT_EQ(cfg.cities[1].boundary, fs::path{"/cfg/krk.geojson"});
}

TEST(RunConfig, DefaultsAndErrors) {
  auto const cfg = parse_run_config("[city]\nid=a\ngtfs=a.zip\n");
  EXPECT_EQ(cfg.resolution, 8);
  EXPECT_EQ(cfg.cuts, (std::vector<std::size_t>{3, 9}));
  EXPECT_EQ(cfg.seed, 42u);
  EXPECT_EQ(cfg.train.epochs, 200);
  EXPECT_EQ(cfg.train.batch_size, 32);
  EXPECT_EQ(cfg.train.learning_rate, 1e-3);

  EXPECT_THROW(parse_run_config(""), config_error);
  EXPECT_THROW(parse_run_config("[city]\nid=a\ngtfs=x\n[city]\nid=a\ngtfs=y\n"),
               config_error);
  EXPECT_THROW(parse_run_config("colour = blue\n[city]\nid=a\ngtfs=x\n"), config_error);
  EXPECT_THROW(parse_run_config("cuts = 0\n[city]\nid=a\ngtfs=x\n"), config_error);
  EXPECT_THROW(parse_run_config("cuts = three\n[city]\nid=a\ngtfs=x\n"), config_error);
  EXPECT_THROW(parse_run_config("normalization = per_city\n[city]\nid=a\ngtfs=x\n"),
               config_error);
  EXPECT_THROW(parse_run_config("[town]\n"), config_error);
  EXPECT_THROW(parse_run_config("[city]\nid=a\n"), config_error);
  EXPECT_THROW(parse_run_config("[city]\nid=a:b\ngtfs=x\n"), config_error);
  EXPECT_THROW(parse_run_config("[city]\nid=a\ngtfs=x\ndate=2024-02-30\n"),
               config_error);
  try {
    parse_run_config("seed = 1\nepochs = many\n[city]\nid=a\ngtfs=x\n");
    FAIL();
  } catch (config_error const& e) {
    EXPECT_NE(std::string{e.what()}.find("line 2"), std::string::npos);
  }
}

TEST(Boundary, GeoJsonShapesAndPolyfill) {
  std::string const poly = R"({"type":"Polygon","coordinates":[[[17.02,51.10],[17.06,51.10],[17.06,51.12],[17.02,51.12],[17.02,51.10]]]})";
  auto const rings = boundary_from_geojson(poly);
  ASSERT_EQ(rings.size(), 1u);
  EXPECT_EQ(boundary_cells(rings, 8).size(), 9u);
  auto const fc = boundary_from_geojson(
      R"({"type":"FeatureCollection","features":[{"type":"Feature","properties":{},"geometry":)" +
      poly + "}]}");
  EXPECT_EQ(fc, rings);
  auto const multi = boundary_from_geojson(
      R"({"type":"MultiPolygon","coordinates":[[[[17.02,51.10],[17.06,51.10],[17.06,51.12],[17.02,51.12],[17.02,51.10]]],[[[19.0,50.0],[19.01,50.0],[19.01,50.01],[19.0,50.0]]]]})");
  ASSERT_EQ(multi.size(), 2u);
  EXPECT_EQ(multi[0], rings[0]);
  EXPECT_THROW(boundary_from_geojson(R"({"type":"Point","coordinates":[1,2]})"),
               format_error);
  EXPECT_THROW(boundary_from_geojson("not json"), format_error);
}

TEST(Ingest, WritesAndReadsBack) {
  temp_dir dir{"ingest"};
  auto const city = make_archetype_city("wro", 51.0, 17.0, 3, 2, 1, 4);
  auto const c = ingest_feed(city.feed, std::nullopt, {});
  EXPECT_TRUE(c.included());
  EXPECT_EQ(c.service_date, fixture_wednesday);
  EXPECT_EQ(c.stops.size(), 6u);  // the station is not a boarding stop
  write_ingest(c, dir.path());
  auto const back = read_ingest(dir.path());
  EXPECT_EQ(back.city_id, "wro");
  EXPECT_EQ(back.service_date, c.service_date);
  EXPECT_EQ(back.events, c.events);
  ASSERT_EQ(back.stops.size(), c.stops.size());
  EXPECT_EQ(back.stops[0].lat, c.stops[0].lat);
  EXPECT_EQ(back.report.passed, c.report.passed);
  EXPECT_EQ(back.report.checks.size(), c.report.checks.size());
}

TEST(Ingest, ExcludedFeedKeepsReportOnly) {
  auto const city = make_archetype_city("tiny", 51.0, 17.0, 3, 2, 1, 4, 5);
  auto const c = ingest_feed(city.feed, std::nullopt, {});
  EXPECT_FALSE(c.included());
  EXPECT_TRUE(c.events.empty());
}

TEST(Run, TwoCityManifestListsEveryStage) {
  temp_dir dir{"run2"};
  auto fx = make_fixture_run(dir.path(), two_cities());
  auto const m = run(fx.config);
  for (auto const* f : {"features.csv", "norm_params.txt", "model.txt",
                        "loss_history.csv", "embeddings.csv", "dendrogram.csv",
                        "cuts.csv", "cluster_summary.csv", "map_k3.geojson",
                        "map_k9.geojson", "map_features.geojson",
                        "validation.csv", "excluded.csv"}) {
    auto const* a = m.find(f);
    ASSERT_NE(a, nullptr) << f;
    EXPECT_EQ(a->sha256, detail::file_sha256(fx.config.output_dir / f)) << f;
  }
  std::set<std::string> stages;
  for (auto const& a : m.artifacts) {
    stages.insert(a.stage);
  }
  EXPECT_EQ(stages, (std::set<std::string>{"ingest", "features", "normalize", "train",
                                           "embed", "cluster", "export"}));
  EXPECT_TRUE(m.excluded.empty());
  EXPECT_EQ(m.records.size(), 27u);
  EXPECT_EQ(slurp(fx.config.output_dir / "manifest.csv"), manifest_to_csv(m));

  // Records are complete and agree with the files on disk.
  auto const features = features_from_csv(slurp(fx.config.output_dir / "features.csv"));
  auto const cuts = cuts_from_csv(slurp(fx.config.output_dir / "cuts.csv"));
  for (std::size_t i = 0; i < m.records.size(); ++i) {
    auto const& r = m.records[i];
    EXPECT_EQ(r.region, features.rows[i]);
    EXPECT_EQ(r.embedding.size(), 64);
    EXPECT_GE(r.label_k3, 0);
    EXPECT_GE(r.label_k9, 0);
    EXPECT_EQ(r.label_k3, cuts.labels.at(3)[i]);
    EXPECT_FALSE(r.typology_name.empty());
    for (double v : r.normalized) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
  auto const loss = slurp(fx.config.output_dir / "loss_history.csv");
  EXPECT_EQ(std::count(loss.begin(), loss.end(), '\n'), 201);
}

TEST(Run, RerunIsCachedAndFreshRunIsByteIdentical) {
  temp_dir dir{"rerun"};
  auto fx = make_fixture_run(dir.path(), two_cities());
  auto const first = run(fx.config);
  EXPECT_TRUE(first.cached_stages.empty());
  auto const second = run(fx.config);
  for (auto const* s : {"ingest-alpha", "ingest-beta", "features", "normalize",
                        "train", "embed", "cluster", "export"}) {
    EXPECT_TRUE(contains(second.cached_stages, s)) << s;
  }
  EXPECT_EQ(digests(first), digests(second));

  auto cfg = fx.config;
  cfg.output_dir = dir / "fresh";
  auto const third = run(cfg, run_options{false, {}});
  EXPECT_TRUE(third.cached_stages.empty());
  EXPECT_EQ(digests(first), digests(third));
}

TEST(Run, SeedChangesModelButNotFeatures) {
  temp_dir dir{"seed"};
  auto fx = make_fixture_run(dir.path(), two_cities());
  fx.config.train.epochs = 5;
  auto const a = digests(run(fx.config));
  fx.config.seed = 1234;
  auto const m = run(fx.config);
  auto const b = digests(m);
  EXPECT_EQ(a.at("features.csv"), b.at("features.csv"));
  EXPECT_NE(a.at("model.txt"), b.at("model.txt"));
  EXPECT_TRUE(contains(m.cached_stages, "features"));
  EXPECT_FALSE(contains(m.cached_stages, "train"));
  auto const model = model_from_text(slurp(fx.config.output_dir / "model.txt"));
  EXPECT_EQ(model.seed, 1235u);
}

TEST(Run, ClusteringStageRerunsInIsolation) {
  temp_dir dir{"isolation"};
  auto fx = make_fixture_run(dir.path(), two_cities());
  auto const first = digests(run(fx.config));
  auto const out = fx.config.output_dir;
  fs::remove(out / "cuts.csv");
  fs::remove(out / "dendrogram.csv");
  {
    std::ofstream f{out / "cluster_summary.csv", std::ios::trunc};
    f << "tampered\n";
  }
  auto const m = run(fx.config);
  EXPECT_TRUE(contains(m.cached_stages, "train"));
  EXPECT_TRUE(contains(m.cached_stages, "embed"));
  EXPECT_FALSE(contains(m.cached_stages, "cluster"));
  EXPECT_TRUE(contains(m.cached_stages, "export"));
  EXPECT_EQ(digests(m), first);
}

TEST(Run, ExcludesFeedWithTooFewRoutes) {
  temp_dir dir{"exclude"};
  auto fx = make_fixture_run(dir.path(), {{"alpha", 51.00, 17.00, 5, 4, 3, 21},
                                          {"small", 50.00, 19.00, 5, 4, 3, 22, 5},
                                          {"gamma", 50.06, 19.94, 5, 4, 3, 23}});
  auto const m = run(fx.config);
  ASSERT_EQ(m.excluded.size(), 1u);
  EXPECT_EQ(m.excluded[0].city_id, "small");
  EXPECT_NE(m.excluded[0].reason.find("route"), std::string::npos);
  for (auto const& r : m.records) {
    EXPECT_NE(r.region.city_id, "small");
  }
  EXPECT_EQ(m.records.size(), 24u);
  auto const excluded = slurp(fx.config.output_dir / "excluded.csv");
  EXPECT_EQ(excluded.rfind("city_id,reason\nsmall,", 0), 0u);
  auto const validation = slurp(fx.config.output_dir / "validation.csv");
  EXPECT_NE(validation.find("small"), std::string::npos);
}

TEST(Run, AllCitiesExcludedIsAStageError) {
  temp_dir dir{"allout"};
  auto fx = make_fixture_run(dir.path(), {{"small", 50.0, 19.0, 5, 4, 3, 22, 5}});
  try {
    run(fx.config);
    FAIL();
  } catch (stage_error const& e) {
    EXPECT_EQ(e.stage(), "ingest");
  }
}

TEST(Run, ErrorsCarryStageAndCity) {
  temp_dir dir{"errors"};
  auto fx = make_fixture_run(dir.path(), two_cities());
  fx.config.cities[1].gtfs = dir / "missing.zip";
  try {
    run(fx.config);
    FAIL();
  } catch (stage_error const& e) {
    EXPECT_EQ(e.stage(), "ingest");
    EXPECT_EQ(e.city(), "beta");
    EXPECT_NE(std::string{e.what()}.find("beta"), std::string::npos);
  }

  auto fx2 = make_fixture_run(dir / "two", two_cities());
  {
    std::ofstream f{fx2.config.cities[0].gtfs, std::ios::binary | std::ios::trunc};
    f << "PK not really a zip";
  }
  EXPECT_THROW(run(fx2.config), stage_error);
}

TEST(Run, BoundaryAddsEmptyCells) {
  temp_dir dir{"boundary"};
  auto fx = make_fixture_run(dir.path(), {two_cities()[0]});
  fx.config.cuts = {3};
  auto const plain = run(fx.config).records.size();
  auto const b = dir / "alpha.geojson";
  {
    std::ofstream f{b};
    f << R"({"type":"Polygon","coordinates":[[[16.99,50.99],[17.25,50.99],[17.25,51.07],[16.99,51.07],[16.99,50.99]]]})";
  }
  fx.config.cities[0].boundary = b;
  auto const m = run(fx.config);
  EXPECT_FALSE(contains(m.cached_stages, "features"));
  EXPECT_GT(m.records.size(), plain);
  std::size_t empty = 0;
  for (auto const& r : m.records) {
    double total = 0;
    for (double v : r.raw) {
      total += v;
    }
    empty += total == 0.0 ? 1 : 0;
  }
  EXPECT_EQ(empty, m.records.size() - plain);
  EXPECT_EQ(m.find("map_k9.geojson"), nullptr);
}

TEST(Run, GeoJsonOutputsConform) {
  temp_dir dir{"geojson"};
  auto fx = make_fixture_run(dir.path(), two_cities());
  auto const m = run(fx.config);
  for (auto const* f : {"map_k3.geojson", "map_k9.geojson", "map_features.geojson"}) {
    auto const doc = nlohmann::json::parse(slurp(fx.config.output_dir / f));
    EXPECT_EQ(geojson_problems(doc), std::vector<std::string>{}) << f;
    EXPECT_EQ(doc["features"].size(), m.records.size());
  }
}

TEST(Run, ArchetypeTrainingLossAndEmbeddings) {
  temp_dir dir{"archetypes"};
  auto fx = make_fixture_run(dir.path(), three_city_fixture());
  auto const m = run(fx.config);
  auto const csv = slurp(fx.config.output_dir / "loss_history.csv");
  std::vector<double> loss;
  detail::csv_reader r{csv, "loss_history.csv"};
  detail::csv_row row;
  while (r.next(row)) {
    loss.push_back(std::stod(row.fields[1]));
  }
  ASSERT_EQ(loss.size(), 200u);
  // Three-epoch moving average, strictly decreasing over the first ten.
  for (std::size_t e = 3; e < 10; ++e) {
    double const prev = (loss[e - 3] + loss[e - 2] + loss[e - 1]) / 3.0;
    double const cur = (loss[e - 2] + loss[e - 1] + loss[e]) / 3.0;
    EXPECT_LT(cur, prev) << "epoch " << e + 1;
  }
  EXPECT_LT(loss.back(), loss.front());

  for (std::size_t i = 0; i < m.records.size(); ++i) {
    for (std::size_t j = i + 1; j < m.records.size(); ++j) {
      auto const& a = m.records[i];
      auto const& b = m.records[j];
      if (a.normalized != b.normalized) {
        EXPECT_GT((a.embedding - b.embedding).cwiseAbs().maxCoeff(), 0.0)
            << a.region.str() << " " << b.region.str();
      }
    }
  }
}
