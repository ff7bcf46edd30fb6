#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "gtfs2vec/features.hpp"
#include "support/oracles.hpp"
#include "support/synthetic_feed.hpp"

using namespace gtfs2vec;
using namespace testing_support;

namespace {

std::vector<departure_event> ev(std::initializer_list<departure_event> e) {
  return e;
}

std::vector<stop> boarding(feed_bundle const& f) {
  std::vector<stop> out;
  std::copy_if(f.stops.begin(), f.stops.end(), std::back_inserter(out),
               [](stop const& s) { return s.location_type == 0; });
  return out;
}

}  // namespace

TEST(FeatureNames, ThirtyFourColumnsInBlockOrder) {
  auto const& names = feature_column_names();
  ASSERT_EQ(names.size(), 34u);
  EXPECT_EQ(names.front(), "trips_h06");
  EXPECT_EQ(names[16], "trips_h22");
  EXPECT_EQ(names[17], "dirs_h06");
  EXPECT_EQ(names.back(), "dirs_h22");
}

TEST(HourlyTripCounts, TwoStopsThreeDeparturesEach) {
  auto const events = ev({{"A", 8, "X"}, {"A", 8, "X"}, {"A", 8, "Y"},
                          {"B", 8, "X"}, {"B", 8, "X"}, {"B", 8, "Z"},
                          {"C", 8, "X"}});
  std::vector<std::string> const region{"A", "B"};
  auto const counts = hourly_trip_counts(events, region);
  EXPECT_EQ(counts[2], 6u);
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (i != 2) {
      EXPECT_EQ(counts[i], 0u);
    }
  }
}

TEST(HourlyTripCounts, NoEventsAllZero) {
  std::vector<std::string> const region{"A"};
  EXPECT_EQ(hourly_trip_counts({}, region), hourly_counts{});
  EXPECT_EQ(hourly_direction_counts({}, region), hourly_counts{});
}

TEST(HourlyDirectionCounts, DistinctHeadsignsPerHour) {
  auto const events = ev({{"A", 9, "A"}, {"A", 9, "A"}, {"A", 9, "B"},
                          {"A", 9, "B"}, {"A", 9, "B"}});
  std::vector<std::string> const region{"A"};
  auto const d = hourly_direction_counts(events, region);
  EXPECT_EQ(d[3], 2u);
  EXPECT_EQ(d[6], 0u);  // hour 12
}

TEST(HourlyDirectionCounts, TrimmedExactMatchNoCaseFolding) {
  auto const events = ev({{"A", 7, "Centrum"}, {"B", 7, " Centrum "},
                          {"A", 7, "centrum"}});
  std::vector<std::string> const region{"A", "B"};
  // Region-level set across stops: "Centrum" once, "centrum" once.
  EXPECT_EQ(hourly_direction_counts(events, region)[1], 2u);
}

TEST(HourWindow, NightEventsIgnored) {
  auto const events = ev({{"A", 5, "X"}, {"A", 23, "X"}, {"A", 0, "X"},
                          {"A", 6, "X"}, {"A", 22, "X"}});
  std::vector<std::string> const region{"A"};
  auto const t = hourly_trip_counts(events, region);
  EXPECT_EQ(t.front(), 1u);
  EXPECT_EQ(t.back(), 1u);
  EXPECT_EQ(std::accumulate(t.begin(), t.end(), 0u), 2u);
}

TEST(CityFeatures, MatchesPerRegionFunctions) {
  auto const city = make_archetype_city("c", 51.0, 17.0, 4, 3, 2, 9);
  auto const regions = group_stops_by_region(boarding(city.feed), "c");
  auto const events = departure_events(city.feed, fixture_wednesday);
  auto const vectors = city_features(regions, events);
  ASSERT_EQ(vectors.size(), regions.size());
  std::size_t i = 0;
  for (auto const& [key, stops] : regions) {
    EXPECT_EQ(vectors[i].region, key);
    EXPECT_EQ(vectors[i].trips_per_hour, hourly_trip_counts(events, stops));
    EXPECT_EQ(vectors[i].directions_per_hour,
              hourly_direction_counts(events, stops));
    ++i;
  }
}

TEST(CityFeatures, MatchesBruteForceOnRandomFeeds) {
  for (std::uint64_t seed = 1000; seed < 1120; ++seed) {
    auto const feed = make_random_feed(seed);
    auto const date = ymd(2024, 1, static_cast<unsigned>(1 + seed % 14));
    auto const oracle = brute_force_features(feed, date);
    std::vector<departure_event> events;
    try {
      events = departure_events(feed, date);
    } catch (empty_service_day const&) {
    }
    auto const vectors =
        city_features(group_stops_by_region(boarding(feed), feed.city_id), events);
    ASSERT_EQ(vectors.size(), oracle.size());
    for (auto const& v : vectors) {
      auto const& o = oracle.at(v.region);
      for (std::size_t h = 0; h < 17; ++h) {
        EXPECT_EQ(v.trips_per_hour[h], o.trips[h]) << "seed " << seed;
        EXPECT_EQ(v.directions_per_hour[h], o.dirs[h]) << "seed " << seed;
        EXPECT_LE(v.directions_per_hour[h], v.trips_per_hour[h]);
      }
    }
  }
}

TEST(CityFeatures, PermutationInvariantAndMonotone) {
  auto const city = make_archetype_city("c", 51.0, 17.0, 3, 3, 2, 4);
  auto const regions = group_stops_by_region(boarding(city.feed), "c");
  auto events = departure_events(city.feed, fixture_wednesday);
  auto const base = to_feature_matrix(city_features(regions, events));

  std::mt19937_64 rng{8};
  std::shuffle(events.begin(), events.end(), rng);
  EXPECT_EQ(to_feature_matrix(city_features(regions, events)), base);

  auto const& stop_id = regions.begin()->second.front();
  events.push_back({stop_id, 10, "brand new headsign"});
  auto const bumped = to_feature_matrix(city_features(regions, events));
  matrix const diff = bumped.values - base.values;
  EXPECT_EQ(diff.sum(), 2.0);         // one trip + one new direction
  EXPECT_EQ(diff(0, 4), 1.0);         // trips_h10 of the first region
  EXPECT_EQ(diff(0, 17 + 4), 1.0);    // dirs_h10
}

TEST(CityFeatures, SumConsistency) {
  auto const city = make_archetype_city("c", 51.0, 17.0, 3, 3, 2, 5);
  auto const regions = group_stops_by_region(boarding(city.feed), "c");
  auto const events = departure_events(city.feed, fixture_wednesday);
  for (auto const& v : city_features(regions, events)) {
    auto const& stops = regions.at(v.region);
    std::uint32_t expected = 0;
    for (auto const& e : events) {
      if (e.hour_of_day >= 6 && e.hour_of_day <= 22 &&
          std::find(stops.begin(), stops.end(), e.stop_id) != stops.end()) {
        ++expected;
      }
    }
    EXPECT_EQ(std::accumulate(v.trips_per_hour.begin(), v.trips_per_hour.end(), 0u),
              expected);
  }
}

TEST(FeatureMatrix, ShapeAndCanonicalOrder) {
  auto const a = make_archetype_city("zeta", 51.0, 17.0, 2, 0, 1, 1);
  auto const b = make_archetype_city("alpha", 50.0, 19.0, 3, 1, 1, 2);
  std::vector<city_events> cities;
  for (auto const* c : {&a, &b}) {
    cities.push_back({c->feed.city_id,
                      group_stops_by_region(boarding(c->feed), c->feed.city_id),
                      departure_events(c->feed, fixture_wednesday)});
  }
  auto const m = build_feature_matrix(cities);
  ASSERT_EQ(m.size(), 8u);
  EXPECT_EQ(m.values.rows(), 8);
  EXPECT_EQ(m.values.cols(), 34);
  EXPECT_TRUE(std::is_sorted(m.rows.begin(), m.rows.end()));
  EXPECT_EQ(m.rows.front().city_id, "alpha");
  EXPECT_EQ(m.rows.back().city_id, "zeta");
  for (std::size_t i = 1; i < m.size(); ++i) {
    if (m.rows[i].city_id == m.rows[i - 1].city_id) {
      EXPECT_LT(m.rows[i - 1].cell.str(), m.rows[i].cell.str());
    }
  }
  EXPECT_EQ(m.trips_block().cols(), 17);
  EXPECT_EQ(m.dirs_block().cols(), 17);
}

TEST(FeatureMatrix, HourTwentyThreeChangesNothing) {
  auto const city = make_archetype_city("c", 51.0, 17.0, 2, 1, 1, 3);
  auto const regions = group_stops_by_region(boarding(city.feed), "c");
  auto events = departure_events(city.feed, fixture_wednesday);
  auto const base = to_feature_matrix(city_features(regions, events));
  events.push_back({regions.begin()->second.front(), 23, "late"});
  EXPECT_EQ(to_feature_matrix(city_features(regions, events)), base);
}

TEST(FeatureMatrix, DuplicateRegionRejected) {
  region_feature_vector v{{"c", cell_id::parse("881e20408bfffff")}, {}, {}};
  EXPECT_THROW(to_feature_matrix({v, v}), format_error);
}

TEST(FeatureMatrix, CsvRoundTrip) {
  auto const city = make_archetype_city("c,quoted", 51.0, 17.0, 3, 2, 1, 6);
  auto const regions =
      group_stops_by_region(boarding(city.feed), city.feed.city_id);
  auto const m = to_feature_matrix(
      city_features(regions, departure_events(city.feed, fixture_wednesday)));
  auto const csv = features_to_csv(m);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "city_id,cell,trips_h06,trips_h07,trips_h08,trips_h09,trips_h10,"
            "trips_h11,trips_h12,trips_h13,trips_h14,trips_h15,trips_h16,"
            "trips_h17,trips_h18,trips_h19,trips_h20,trips_h21,trips_h22,"
            "dirs_h06,dirs_h07,dirs_h08,dirs_h09,dirs_h10,dirs_h11,dirs_h12,"
            "dirs_h13,dirs_h14,dirs_h15,dirs_h16,dirs_h17,dirs_h18,dirs_h19,"
            "dirs_h20,dirs_h21,dirs_h22");
  EXPECT_EQ(features_from_csv(csv), m);
  EXPECT_THROW(features_from_csv("city_id,cell\n"), malformed_row);
}
