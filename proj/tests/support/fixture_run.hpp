#pragma once

// On-disk archetype cities plus a matching run configuration.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "gtfs2vec/pipeline.hpp"
#include "support/synthetic_feed.hpp"

namespace testing_support {

struct fixture_city {
  std::string id;
  double lat{};
  double lon{};
  int suburbs{};
  int mids{};
  int hubs{};
  std::uint64_t seed{};
  int routes = 24;
};

struct fixture_run {
  run_config config;
  std::map<region_key, archetype> truth;  // planted archetype per region
};

inline std::vector<fixture_city> three_city_fixture() {
  return {{"alpha", 51.00, 17.00, 10, 7, 4, 101},
          {"beta", 52.20, 21.00, 11, 6, 4, 202},
          {"gamma", 50.06, 19.94, 9, 8, 5, 303}};
}

inline fixture_run make_fixture_run(std::filesystem::path const& root,
                                    std::vector<fixture_city> const& cities) {
  fixture_run out;
  std::filesystem::create_directories(root / "feeds");
  for (auto const& c : cities) {
    auto const city = make_archetype_city(c.id, c.lat, c.lon, c.suburbs, c.mids,
                                          c.hubs, c.seed, c.routes);
    auto const path = root / "feeds" / (c.id + ".zip");
    write_feed(city.feed, path);
    out.config.cities.push_back(
        city_config{c.id, path, static_cast<std::int64_t>(city.feed.declared_population),
                    std::nullopt, std::nullopt});
    for (auto const& r : city.regions) {
      out.truth[region_key{c.id, assign_cell(r.lat, r.lon)}] = r.kind;
    }
  }
  out.config.output_dir = root / "out";
  return out;
}

}  // namespace testing_support
