#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <random>
#include <string>

#include "gtfs2vec/detail/zip.hpp"
#include "gtfs2vec/gtfs.hpp"
#include "support/oracles.hpp"
#include "support/synthetic_feed.hpp"
#include "support/temp_dir.hpp"

using namespace gtfs2vec;
using namespace testing_support;

namespace {

using table_map = std::map<std::string, std::string, std::less<>>;

table_lookup lookup_of(table_map const& tables) {
  return [&tables](std::string_view name) -> std::optional<std::string> {
    auto const it = tables.find(name);
    if (it == tables.end()) {
      return std::nullopt;
    }
    return it->second;
  };
}

table_map small_feed() {
  return {
      {"stops.txt",
       "stop_id,stop_name,stop_lat,stop_lon\nA,Rynek,51.1100,17.0320\n"
       "B,Dworzec,51.0990,17.0360\n"},
      {"routes.txt", "route_id,route_short_name,route_type\n1,1,0\n"},
      {"trips.txt",
       "route_id,service_id,trip_id,trip_headsign\n1,WK,t1,Biskupin\n"
       "1,WK,t2,Leśnica\n"},
      {"stop_times.txt",
       "trip_id,arrival_time,departure_time,stop_id,stop_sequence\n"
       "t1,08:15:00,08:15:00,A,1\nt1,08:20:00,08:21:00,B,2\n"
       "t2,25:30:00,25:30:00,B,1\nt2,25:40:00,,A,2\n"},
      {"calendar.txt",
       "service_id,monday,tuesday,wednesday,thursday,friday,saturday,sunday,"
       "start_date,end_date\nWK,1,1,1,1,1,0,0,20240101,20241231\n"},
  };
}

}  // namespace

TEST(GtfsTime, ParsesHoursBeyondMidnight) {
  EXPECT_EQ(parse_gtfs_time("25:30:00"), 91800);
  EXPECT_EQ(parse_gtfs_time("08:15:00"), 8 * 3600 + 15 * 60);
  EXPECT_EQ(parse_gtfs_time("8:15:00"), 8 * 3600 + 15 * 60);
  EXPECT_EQ(parse_gtfs_time("00:00:00"), 0);
  EXPECT_FALSE(parse_gtfs_time("08:60:00"));
  EXPECT_FALSE(parse_gtfs_time("08:15"));
  EXPECT_FALSE(parse_gtfs_time("-1:00:00"));
  EXPECT_EQ(format_gtfs_time(91800), "25:30:00");
}

TEST(LoadFeed, HandWrittenFixtureCounts) {
  auto const tables = small_feed();
  auto const feed = load_feed_tables(lookup_of(tables), "wro", 640000);
  EXPECT_EQ(feed.stops.size(), 2u);
  EXPECT_EQ(feed.route_count(), 1u);
  EXPECT_EQ(feed.trips.size(), 2u);
  EXPECT_EQ(feed.stop_times.size(), 4u);
  EXPECT_EQ(feed.stop_times[2].departure_seconds, 91800);
  // Missing departure falls back to arrival.
  EXPECT_EQ(feed.stop_times[3].departure_seconds, 25 * 3600 + 40 * 60);
  EXPECT_EQ(feed.stop_times[1].departure_seconds, 8 * 3600 + 21 * 60);
  EXPECT_EQ(feed.trips[1].headsign, "Leśnica");
  EXPECT_EQ(feed.declared_population, 640000u);
}

TEST(LoadFeed, FromZipArchive) {
  temp_dir dir{"gtfs-zip"};
  detail::zip_writer w;
  for (auto const& [name, text] : small_feed()) {
    w.add(name, text);
  }
  w.write_to(dir / "feed.zip");
  auto const feed = load_feed(dir / "feed.zip", "wro", 1);
  EXPECT_EQ(feed.stop_times.size(), 4u);
}

TEST(LoadFeed, FromDirectory) {
  temp_dir dir{"gtfs-dir"};
  for (auto const& [name, text] : small_feed()) {
    detail::write_file(dir / name, text);
  }
  EXPECT_EQ(load_feed(dir.path(), "wro", 1).trips.size(), 2u);
}

TEST(LoadFeed, MissingTripsTable) {
  auto tables = small_feed();
  tables.erase("trips.txt");
  try {
    load_feed_tables(lookup_of(tables), "wro", 1);
    FAIL() << "expected missing_file";
  } catch (missing_file const& e) {
    EXPECT_EQ(e.table(), "trips.txt");
  }
}

TEST(LoadFeed, MissingBothCalendars) {
  auto tables = small_feed();
  tables.erase("calendar.txt");
  EXPECT_THROW(load_feed_tables(lookup_of(tables), "wro", 1), missing_file);
}

TEST(LoadFeed, MalformedRowCarriesLineNumber) {
  auto tables = small_feed();
  tables["stop_times.txt"] =
      "trip_id,arrival_time,departure_time,stop_id,stop_sequence\n"
      "t1,08:15:00,08:15:00,A,1\nt1,xx,8:99:00,B,2\n";
  try {
    load_feed_tables(lookup_of(tables), "wro", 1);
    FAIL() << "expected malformed_row";
  } catch (malformed_row const& e) {
    EXPECT_EQ(e.table(), "stop_times.txt");
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(LoadFeed, InvalidCoordinatesAndDuplicates) {
  auto tables = small_feed();
  tables["stops.txt"] = "stop_id,stop_lat,stop_lon\nA,91.0,17.0\n";
  EXPECT_THROW(load_feed_tables(lookup_of(tables), "wro", 1), malformed_row);
  tables = small_feed();
  tables["stops.txt"] = "stop_id,stop_lat,stop_lon\nA,51,17\nA,51,17\n";
  EXPECT_THROW(load_feed_tables(lookup_of(tables), "wro", 1), malformed_row);
  tables = small_feed();
  tables["calendar.txt"] =
      "service_id,monday,tuesday,wednesday,thursday,friday,saturday,sunday,"
      "start_date,end_date\nWK,1,1,1,1,1,0,0,20241231,20240101\n";
  EXPECT_THROW(load_feed_tables(lookup_of(tables), "wro", 1), malformed_row);
  tables = small_feed();
  tables["calendar_dates.txt"] =
      "service_id,date,exception_type\nWK,20240103,2\nWK,20240103,1\n";
  EXPECT_THROW(load_feed_tables(lookup_of(tables), "wro", 1), malformed_row);
}

TEST(LoadFeed, DanglingReferences) {
  auto tables = small_feed();
  tables["stop_times.txt"] =
      "trip_id,departure_time,stop_id,stop_sequence\nt1,08:00:00,Z,1\n";
  EXPECT_THROW(load_feed_tables(lookup_of(tables), "wro", 1), dangling_reference);
  tables["stop_times.txt"] =
      "trip_id,departure_time,stop_id,stop_sequence\nt9,08:00:00,A,1\n";
  EXPECT_THROW(load_feed_tables(lookup_of(tables), "wro", 1), dangling_reference);
}

TEST(LoadFeed, RowWithoutAnyTimeIsSkippedWithAdvisory) {
  auto tables = small_feed();
  tables["stop_times.txt"] =
      "trip_id,arrival_time,departure_time,stop_id,stop_sequence\n"
      "t1,08:15:00,08:15:00,A,1\nt1,,,B,2\n";
  auto const feed = load_feed_tables(lookup_of(tables), "wro", 1);
  EXPECT_EQ(feed.stop_times.size(), 1u);
  EXPECT_EQ(feed.skipped_stop_times, 1u);
  auto const report = validate_feed(feed);
  auto const* check = report.find("stop_time_without_time");
  ASSERT_NE(check, nullptr);
  EXPECT_EQ(check->status, check_status::advisory);
}

TEST(LoadFeed, NodesWithoutCoordinatesAreSkipped) {
  auto tables = small_feed();
  tables["stops.txt"] =
      "stop_id,stop_lat,stop_lon,location_type\nA,51.11,17.03,0\n"
      "B,51.10,17.04,\nN1,,,3\n";
  auto const feed = load_feed_tables(lookup_of(tables), "wro", 1);
  EXPECT_EQ(feed.stops.size(), 2u);
}

namespace {

// The form in which a bundle survives serialization: trimmed headsigns and
// calendars listed weekly-schedule first, services without any dates gone.
feed_bundle canonical(feed_bundle f) {
  for (auto& t : f.trips) {
    t.headsign = strip(t.headsign);
  }
  std::erase_if(f.calendars, [](service_calendar const& c) {
    return !c.schedule && c.exceptions.empty();
  });
  std::stable_partition(f.calendars.begin(), f.calendars.end(),
                        [](service_calendar const& c) {
                          return c.schedule.has_value();
                        });
  return f;
}

}  // namespace

TEST(LoadFeed, RoundTripThroughArchive) {
  temp_dir dir{"roundtrip"};
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    auto const original = canonical(make_random_feed(seed));
    write_feed(original, dir / "f.zip");
    auto const loaded =
        load_feed(dir / "f.zip", original.city_id, original.declared_population);
    EXPECT_EQ(loaded, original) << "seed " << seed;
  }
  auto const city = make_archetype_city("x", 51.0, 17.0, 2, 2, 1, 7).feed;
  write_feed(city, dir / "c.zip");
  EXPECT_EQ(load_feed(dir / "c.zip", "x", city.declared_population), city);
}

TEST(ActiveServices, WeekdayMaskAndExceptions) {
  feed_bundle f;
  f.city_id = "c";
  f.calendars.push_back(weekday_service("WK"));
  auto const wed = fixture_wednesday;
  EXPECT_EQ(active_services(f, wed), std::set<std::string>{"WK"});

  f.calendars[0].exceptions.push_back({wed, exception_kind::removed});
  EXPECT_THROW(active_services(f, wed), empty_service_day);

  // Saturday outside the mask, added explicitly.
  auto const sat = ymd(2024, 1, 6);
  EXPECT_THROW(active_services(f, sat), empty_service_day);
  f.calendars[0].exceptions.push_back({sat, exception_kind::added});
  EXPECT_EQ(active_services(f, sat), std::set<std::string>{"WK"});

  // Out of range.
  EXPECT_THROW(active_services(f, ymd(2025, 1, 8)), empty_service_day);
}

TEST(ActiveServices, CalendarDatesOnlyFeed) {
  feed_bundle f;
  f.calendars.push_back(service_calendar{"X", std::nullopt,
                                         {{ymd(2024, 3, 6), exception_kind::added}}});
  f.calendars.push_back(service_calendar{"Y", std::nullopt,
                                         {{ymd(2024, 3, 7), exception_kind::added}}});
  EXPECT_EQ(active_services(f, ymd(2024, 3, 6)), std::set<std::string>{"X"});
}

TEST(ActiveServices, MatchesIndependentRuleOnRandomFeeds) {
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    auto const f = make_random_feed(seed);
    for (unsigned day = 1; day <= 14; ++day) {
      auto const date = ymd(2024, 1, day);
      std::set<std::string> expected;
      for (auto const& c : f.calendars) {
        if (service_runs(c, date)) {
          expected.insert(c.service_id);
        }
      }
      if (expected.empty()) {
        EXPECT_THROW(active_services(f, date), empty_service_day);
      } else {
        EXPECT_EQ(active_services(f, date), expected);
      }
    }
  }
}

TEST(ActiveServices, AddedExceptionNeverRemovesAService) {
  std::mt19937_64 rng{5};
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    auto f = make_random_feed(seed);
    auto const date = ymd(2024, 1, 1 + static_cast<unsigned>(rng() % 14));
    std::set<std::string> before;
    try {
      before = active_services(f, date);
    } catch (empty_service_day const&) {
    }
    auto& cal = f.calendars[rng() % f.calendars.size()];
    std::erase_if(cal.exceptions,
                  [&](service_exception const& e) { return e.date == date; });
    cal.exceptions.push_back({date, exception_kind::added});
    auto const after = active_services(f, date);
    EXPECT_TRUE(std::includes(after.begin(), after.end(), before.begin(),
                              before.end()));
  }
}

TEST(DepartureEvents, BucketsAndFilters) {
  auto const tables = small_feed();
  auto feed = load_feed_tables(lookup_of(tables), "wro", 1);
  feed.trips.push_back({"t3", "1", "WE", "Nowhere"});
  feed.calendars.push_back(service_calendar{
      "WE", weekly_schedule{{false, false, false, false, false, true, true},
                            ymd(2024, 1, 1), ymd(2024, 12, 31)},
      {}});
  feed.stop_times.push_back({"t3", "A", 9 * 3600, 1});
  auto const events = departure_events(feed, fixture_wednesday);
  ASSERT_EQ(events.size(), 4u);
  EXPECT_EQ(events[0], (departure_event{"A", 8, "Biskupin"}));
  EXPECT_EQ(events[2].hour_of_day, 1);  // 25:30 -> hour 1
  feed.stop_times.push_back({"t1", "A", 24 * 3600 + 600, 3});
  EXPECT_EQ(departure_events(feed, fixture_wednesday).back().hour_of_day, 0);
}

TEST(DepartureEvents, CountMatchesBruteForce) {
  for (std::uint64_t seed = 100; seed < 160; ++seed) {
    auto const f = make_random_feed(seed);
    auto const date = ymd(2024, 1, static_cast<unsigned>(1 + seed % 14));
    std::size_t expected = 0;
    for (auto const& st : f.stop_times) {
      for (auto const& t : f.trips) {
        if (t.trip_id != st.trip_id) {
          continue;
        }
        for (auto const& c : f.calendars) {
          if (c.service_id == t.service_id && service_runs(c, date)) {
            ++expected;
          }
        }
      }
    }
    try {
      EXPECT_EQ(departure_events(f, date).size(), expected);
    } catch (empty_service_day const&) {
      EXPECT_EQ(expected, 0u);
    }
  }
}

TEST(DefaultServiceDate, FirstWednesdayWithService) {
  feed_bundle f;
  f.calendars.push_back(weekday_service("WK"));
  EXPECT_EQ(default_service_date(f), fixture_wednesday);
  f.calendars[0].exceptions.push_back({fixture_wednesday, exception_kind::removed});
  EXPECT_EQ(default_service_date(f), ymd(2024, 1, 10));
  f.calendars.clear();
  EXPECT_THROW(default_service_date(f), empty_service_day);
}

TEST(ValidateFeed, PassingFeed) {
  auto const f = make_archetype_city("c", 51.0, 17.0, 3, 3, 1, 1, 25).feed;
  auto report = validate_feed(f);
  EXPECT_TRUE(report.passed);
  EXPECT_EQ(report.find("route_count")->status, check_status::pass);
  EXPECT_EQ(report.find("trip_headsign")->status, check_status::pass);
  EXPECT_EQ(report.find("population")->status, check_status::pass);
}

TEST(ValidateFeed, TooFewRoutesFails) {
  auto const f = make_archetype_city("c", 51.0, 17.0, 3, 3, 1, 1, 5).feed;
  auto const report = validate_feed(f);
  EXPECT_FALSE(report.passed);
  EXPECT_EQ(report.find("route_count")->status, check_status::fail);
}

TEST(ValidateFeed, EmptyHeadsignFails) {
  auto f = make_archetype_city("c", 51.0, 17.0, 3, 3, 1, 1).feed;
  f.trips[3].headsign.clear();
  auto const report = validate_feed(f);
  EXPECT_FALSE(report.passed);
  EXPECT_EQ(report.find("trip_headsign")->status, check_status::fail);
}

TEST(ValidateFeed, PopulationAndExtentAreAdvisory) {
  auto f = make_archetype_city("c", 51.0, 17.0, 3, 3, 1, 1).feed;
  f.declared_population = 1000;
  f.stops.push_back(stop{"far", 40.0, 2.0, "", 0});
  f.uses_frequencies = true;
  auto const report = validate_feed(f);
  EXPECT_TRUE(report.passed);
  EXPECT_EQ(report.find("population")->status, check_status::advisory);
  EXPECT_EQ(report.find("geographic_extent")->status, check_status::advisory);
  EXPECT_EQ(report.find("frequencies")->status, check_status::advisory);
}

TEST(ValidateFeed, ReportCsv) {
  auto const f = make_archetype_city("c", 51.0, 17.0, 3, 3, 1, 1, 5).feed;
  auto const csv = validation_report_csv({validate_feed(f)});
  EXPECT_NE(csv.find("c,route_count,fail,"), std::string::npos);
}
