#pragma once

// Generators for in-memory GTFS feeds used across the test suite.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "gtfs2vec/calendar_date.hpp"
#include "gtfs2vec/gtfs.hpp"

namespace testing_support {

using namespace gtfs2vec;

inline calendar_date ymd(int y, unsigned m, unsigned d) {
  return calendar_date{std::chrono::year{y}, std::chrono::month{m},
                       std::chrono::day{d}};
}

// 2024-01-03 is the first Wednesday of the weekday calendar used below.
inline calendar_date const fixture_wednesday = ymd(2024, 1, 3);

inline service_calendar weekday_service(std::string id) {
  weekly_schedule w;
  w.weekdays = {true, true, true, true, true, false, false};
  w.start_date = ymd(2024, 1, 1);
  w.end_date = ymd(2024, 12, 31);
  return service_calendar{std::move(id), w, {}};
}

enum class archetype { suburb, mid_city, hub };

inline char const* archetype_name(archetype a) {
  switch (a) {
    case archetype::suburb: return "suburban";
    case archetype::mid_city: return "mid-city";
    case archetype::hub: return "hubs";
  }
  return "?";
}

struct planted_region {
  std::string stop_id;
  double lat{};
  double lon{};
  archetype kind{};
};

struct archetype_city {
  feed_bundle feed;
  std::vector<planted_region> regions;
};

// One boarding stop per region, stops about 3 km apart so each falls in
// its own resolution-8 cell. Per hour 6..22 a region gets
//   suburb: 1-2 departures, one headsign
//   mid-city: 8-12 departures over 3-5 headsigns
//   hub: 40-50 departures over 10-14 headsigns
// plus a few night departures that the feature window must ignore.
inline archetype_city make_archetype_city(std::string const& city_id,
                                          double lat0, double lon0,
                                          int suburbs, int mids, int hubs,
                                          std::uint64_t seed,
                                          int route_count = 24) {
  std::mt19937_64 rng{seed};
  auto uniform = [&](int lo, int hi) {
    return std::uniform_int_distribution<int>{lo, hi}(rng);
  };
  archetype_city out;
  auto& f = out.feed;
  f.city_id = city_id;
  f.declared_population = 500'000;
  for (int r = 0; r < route_count; ++r) {
    f.routes.push_back("R" + std::to_string(r));
  }
  f.calendars.push_back(weekday_service("WK"));
  f.calendars.push_back(service_calendar{
      "WE",
      weekly_schedule{{false, false, false, false, false, true, true},
                      ymd(2024, 1, 1), ymd(2024, 12, 31)},
      {}});

  std::vector<archetype> kinds;
  kinds.insert(kinds.end(), static_cast<std::size_t>(suburbs), archetype::suburb);
  kinds.insert(kinds.end(), static_cast<std::size_t>(mids), archetype::mid_city);
  kinds.insert(kinds.end(), static_cast<std::size_t>(hubs), archetype::hub);
  std::shuffle(kinds.begin(), kinds.end(), rng);

  int const columns = 6;
  std::size_t trip_no = 0;
  auto add_trip = [&](std::string const& stop_id, int hour,
                      std::string const& headsign, std::string const& service) {
    auto const id = city_id + "-T" + std::to_string(trip_no);
    f.trips.push_back(trip_record{
        id, f.routes[trip_no % f.routes.size()], service, headsign});
    f.stop_times.push_back(stop_time_event{
        id, stop_id, hour * 3600 + uniform(0, 3599), 1});
    ++trip_no;
  };

  for (std::size_t i = 0; i < kinds.size(); ++i) {
    planted_region reg;
    reg.kind = kinds[i];
    reg.stop_id = city_id + "-S" + std::to_string(i);
    reg.lat = lat0 + 0.027 * static_cast<double>(static_cast<int>(i) / columns);
    reg.lon = lon0 + 0.045 * static_cast<double>(static_cast<int>(i) % columns);
    f.stops.push_back(stop{reg.stop_id, reg.lat, reg.lon, "Stop " + std::to_string(i), 0});

    for (int hour = 6; hour <= 22; ++hour) {
      int trips = 0;
      int dirs = 1;
      switch (reg.kind) {
        case archetype::suburb:
          trips = uniform(1, 2);
          dirs = 1;
          break;
        case archetype::mid_city:
          trips = uniform(8, 12);
          dirs = uniform(3, 5);
          break;
        case archetype::hub:
          trips = uniform(40, 50);
          dirs = uniform(10, 14);
          break;
      }
      for (int t = 0; t < trips; ++t) {
        add_trip(reg.stop_id, hour,
                 reg.stop_id + "-D" + std::to_string(t % dirs), "WK");
      }
    }
    // Outside the 6..22 window and on weekends: must not be counted.
    add_trip(reg.stop_id, 4, reg.stop_id + "-night", "WK");
    add_trip(reg.stop_id, 23, reg.stop_id + "-night", "WK");
    add_trip(reg.stop_id, 25, reg.stop_id + "-night", "WK");
    add_trip(reg.stop_id, 12, reg.stop_id + "-weekend", "WE");
    out.regions.push_back(reg);
  }
  // A station grouping the first stop; it shares coordinates and must not
  // form a region of its own.
  f.stops.push_back(stop{city_id + "-STATION", out.regions.front().lat,
                         out.regions.front().lon, "Station", 1});
  return out;
}

// Small random feed for oracle comparisons: up to 20 stops packed closely
// enough that cells hold several stops, up to 50 trips with several stops
// each, three services with random weekday masks and exceptions, and
// departure times spanning 0..27 h.
inline feed_bundle make_random_feed(std::uint64_t seed,
                                    std::string city_id = "rnd") {
  std::mt19937_64 rng{seed};
  auto uniform = [&](int lo, int hi) {
    return std::uniform_int_distribution<int>{lo, hi}(rng);
  };
  feed_bundle f;
  f.city_id = std::move(city_id);
  f.declared_population = 250'000;
  int const n_stops = uniform(1, 20);
  for (int i = 0; i < n_stops; ++i) {
    f.stops.push_back(stop{"s" + std::to_string(i),
                           50.0 + 0.004 * uniform(0, 6),
                           19.0 + 0.006 * uniform(0, 6), "", 0});
  }
  int const n_routes = uniform(1, 25);
  for (int r = 0; r < n_routes; ++r) {
    f.routes.push_back("r" + std::to_string(r));
  }
  for (int s = 0; s < 3; ++s) {
    service_calendar c;
    c.service_id = "svc" + std::to_string(s);
    if (uniform(0, 3) != 0) {
      weekly_schedule w;
      for (auto& d : w.weekdays) {
        d = uniform(0, 1) == 1;
      }
      w.start_date = ymd(2024, 1, 1);
      w.end_date = ymd(2024, 1, static_cast<unsigned>(uniform(1, 31)));
      c.schedule = w;
    }
    std::set<int> used;
    for (int e = uniform(0, 3); e > 0; --e) {
      int const day = uniform(1, 14);
      if (used.insert(day).second) {
        c.exceptions.push_back(
            {ymd(2024, 1, static_cast<unsigned>(day)),
             uniform(0, 1) == 0 ? exception_kind::added
                                : exception_kind::removed});
      }
    }
    f.calendars.push_back(std::move(c));
  }
  static char const* const headsigns[] = {"Centrum", "Dworzec", "Centrum ",
                                          "Lotnisko", "Port", " Port"};
  int const n_trips = uniform(1, 50);
  for (int t = 0; t < n_trips; ++t) {
    auto const id = "t" + std::to_string(t);
    f.trips.push_back(trip_record{
        id, f.routes[static_cast<std::size_t>(uniform(0, n_routes - 1))],
        "svc" + std::to_string(uniform(0, 2)), headsigns[uniform(0, 5)]});
    std::int64_t time = uniform(0, 24 * 3600);
    int const n = uniform(1, 5);
    for (int k = 0; k < n; ++k) {
      f.stop_times.push_back(stop_time_event{
          id, "s" + std::to_string(uniform(0, n_stops - 1)), time,
          static_cast<std::uint32_t>(k + 1)});
      time += uniform(60, 3 * 3600);
    }
  }
  return f;
}

}  // namespace testing_support
