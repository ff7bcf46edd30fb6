#pragma once

// GTFS ingestion: typed records from a feed archive, service-day
// resolution, stop-level departure events and feed validation.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "gtfs2vec/calendar_date.hpp"
#include "gtfs2vec/detail/csv.hpp"
#include "gtfs2vec/detail/io.hpp"
#include "gtfs2vec/detail/zip.hpp"
#include "gtfs2vec/error.hpp"

namespace gtfs2vec {

struct stop {
  std::string stop_id;
  double lat{};
  double lon{};
  std::string name;
  // GTFS location_type: 0 boarding stop, 1 station, 2 entrance, ...
  int location_type{0};

  friend bool operator==(stop const&, stop const&) = default;
};

struct trip_record {
  std::string trip_id;
  std::string route_id;
  std::string service_id;
  std::string headsign;

  friend bool operator==(trip_record const&, trip_record const&) = default;
};

struct stop_time_event {
  std::string trip_id;
  std::string stop_id;
  // Seconds since service-day midnight; may exceed 86400.
  std::int64_t departure_seconds{};
  std::uint32_t stop_sequence{};

  friend bool operator==(stop_time_event const&,
                         stop_time_event const&) = default;
};

enum class exception_kind : int { added = 1, removed = 2 };

struct service_exception {
  calendar_date date;
  exception_kind kind{};

  friend bool operator==(service_exception const&,
                         service_exception const&) = default;
};

struct weekly_schedule {
  std::array<bool, 7> weekdays{};  // Monday first
  calendar_date start_date;
  calendar_date end_date;

  friend bool operator==(weekly_schedule const&,
                         weekly_schedule const&) = default;
};

struct service_calendar {
  std::string service_id;
  // Absent for services defined only through calendar_dates.txt.
  std::optional<weekly_schedule> schedule;
  std::vector<service_exception> exceptions;

  friend bool operator==(service_calendar const&,
                         service_calendar const&) = default;
};

struct feed_bundle {
  std::string city_id;
  std::vector<stop> stops;
  std::vector<std::string> routes;
  std::vector<trip_record> trips;
  std::vector<stop_time_event> stop_times;
  std::vector<service_calendar> calendars;
  std::uint64_t declared_population{};

  // Load diagnostics surfaced by validate_feed as advisories.
  std::size_t skipped_stop_times{};
  bool uses_frequencies{};

  std::size_t route_count() const noexcept { return routes.size(); }

  friend bool operator==(feed_bundle const&, feed_bundle const&) = default;
};

struct departure_event {
  std::string stop_id;
  int hour_of_day{};  // 0..23
  std::string headsign;

  friend bool operator==(departure_event const&,
                         departure_event const&) = default;
};

enum class check_status { pass, fail, advisory };

inline std::string_view to_string(check_status s) {
  switch (s) {
    case check_status::pass: return "pass";
    case check_status::fail: return "fail";
    case check_status::advisory: return "advisory";
  }
  return "?";
}

struct validation_check {
  std::string criterion;
  check_status status{};
  std::string message;
};

struct validation_report {
  std::string city_id;
  bool passed{};
  std::vector<validation_check> checks;

  validation_check const* find(std::string_view criterion) const {
    for (auto const& c : checks) {
      if (c.criterion == criterion) {
        return &c;
      }
    }
    return nullptr;
  }
};

struct validation_options {
  std::size_t min_routes = 20;
  std::uint64_t min_population = 200'000;
  // Diagonal of the stop bounding box above which the feed is suspected
  // to cover a whole country rather than one city.
  double max_extent_km = 250.0;
};

// Parses "HH:MM:SS" (hours may exceed 23, one-digit hours accepted).
inline std::optional<std::int64_t> parse_gtfs_time(std::string_view text) {
  auto const s = detail::trim(text);
  auto const c1 = s.find(':');
  if (c1 == std::string_view::npos) {
    return std::nullopt;
  }
  auto const c2 = s.find(':', c1 + 1);
  if (c2 == std::string_view::npos || c2 - c1 != 3 || s.size() - c2 != 3) {
    return std::nullopt;
  }
  std::int64_t h{}, m{}, sec{};
  if (c1 == 0 || !detail::parse_number(s.substr(0, c1), h) ||
      !detail::parse_number(s.substr(c1 + 1, 2), m) ||
      !detail::parse_number(s.substr(c2 + 1, 2), sec) || h < 0 || m > 59 ||
      sec > 59 || m < 0 || sec < 0) {
    return std::nullopt;
  }
  return h * 3600 + m * 60 + sec;
}

inline std::string format_gtfs_time(std::int64_t seconds) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%02lld:%02lld:%02lld",
                static_cast<long long>(seconds / 3600),
                static_cast<long long>((seconds / 60) % 60),
                static_cast<long long>(seconds % 60));
  return buf;
}

// Returns the raw text of a table, or nullopt when the table is absent.
using table_lookup = std::function<std::optional<std::string>(std::string_view)>;

namespace detail {

class feed_parser {
public:
  feed_parser(table_lookup lookup, std::string city_id,
              std::uint64_t population)
      : lookup_{std::move(lookup)} {
    feed_.city_id = std::move(city_id);
    feed_.declared_population = population;
  }

  feed_bundle parse() && {
    auto stops = require("stops.txt");
    auto routes = require("routes.txt");
    auto trips = require("trips.txt");
    auto stop_times = require("stop_times.txt");
    auto calendar = lookup_("calendar.txt");
    auto calendar_dates = lookup_("calendar_dates.txt");
    if (!calendar && !calendar_dates) {
      throw missing_file("calendar.txt or calendar_dates.txt");
    }
    parse_stops(stops);
    parse_routes(routes);
    parse_trips(trips);
    parse_stop_times(stop_times);
    if (calendar) {
      parse_calendar(*calendar);
    }
    if (calendar_dates) {
      parse_calendar_dates(*calendar_dates);
    }
    feed_.uses_frequencies = lookup_("frequencies.txt").has_value();
    return std::move(feed_);
  }

private:
  std::string require(std::string_view table) {
    auto t = lookup_(table);
    if (!t) {
      throw missing_file(std::string{table});
    }
    return std::move(*t);
  }

  void parse_stops(std::string const& text) {
    csv_reader r{text, "stops.txt"};
    auto const id = r.required_column("stop_id");
    auto const lat = r.required_column("stop_lat");
    auto const lon = r.required_column("stop_lon");
    auto const name = r.column("stop_name");
    auto const type = r.column("location_type");
    std::unordered_set<std::string> seen;
    csv_row row;
    while (r.next(row)) {
      stop s;
      s.stop_id = trim(row.fields[id]);
      if (s.stop_id.empty()) {
        throw malformed_row(r.table(), row.line, "empty stop_id");
      }
      if (type && !trim(row.fields[*type]).empty() &&
          !parse_number(row.fields[*type], s.location_type)) {
        throw malformed_row(r.table(), row.line, "invalid location_type");
      }
      bool const no_coords =
          trim(row.fields[lat]).empty() && trim(row.fields[lon]).empty();
      // Generic nodes and boarding areas may omit coordinates.
      if (no_coords && (s.location_type == 3 || s.location_type == 4)) {
        continue;
      }
      if (!parse_number(row.fields[lat], s.lat) ||
          !parse_number(row.fields[lon], s.lon) || !std::isfinite(s.lat) ||
          !std::isfinite(s.lon)) {
        throw malformed_row(r.table(), row.line, "invalid coordinates");
      }
      if (s.lat < -90.0 || s.lat > 90.0 || s.lon < -180.0 || s.lon > 180.0) {
        throw malformed_row(r.table(), row.line, "coordinates out of range");
      }
      if (name) {
        s.name = trim(row.fields[*name]);
      }
      if (!seen.insert(s.stop_id).second) {
        throw malformed_row(r.table(), row.line,
                            "duplicate stop_id '" + s.stop_id + "'");
      }
      feed_.stops.push_back(std::move(s));
    }
  }

  void parse_routes(std::string const& text) {
    csv_reader r{text, "routes.txt"};
    auto const id = r.required_column("route_id");
    std::unordered_set<std::string> seen;
    csv_row row;
    while (r.next(row)) {
      std::string route_id{trim(row.fields[id])};
      if (!seen.insert(route_id).second) {
        throw malformed_row(r.table(), row.line,
                            "duplicate route_id '" + route_id + "'");
      }
      feed_.routes.push_back(std::move(route_id));
    }
  }

  void parse_trips(std::string const& text) {
    csv_reader r{text, "trips.txt"};
    auto const id = r.required_column("trip_id");
    auto const route = r.required_column("route_id");
    auto const service = r.required_column("service_id");
    auto const headsign = r.column("trip_headsign");
    csv_row row;
    while (r.next(row)) {
      trip_record t;
      t.trip_id = trim(row.fields[id]);
      t.route_id = trim(row.fields[route]);
      t.service_id = trim(row.fields[service]);
      if (headsign) {
        t.headsign = trim(row.fields[*headsign]);
      }
      if (t.trip_id.empty()) {
        throw malformed_row(r.table(), row.line, "empty trip_id");
      }
      if (!trip_index_.emplace(t.trip_id, feed_.trips.size()).second) {
        throw malformed_row(r.table(), row.line,
                            "duplicate trip_id '" + t.trip_id + "'");
      }
      feed_.trips.push_back(std::move(t));
    }
  }

  void parse_stop_times(std::string const& text) {
    csv_reader r{text, "stop_times.txt"};
    auto const trip = r.required_column("trip_id");
    auto const stop_col = r.required_column("stop_id");
    auto const seq = r.required_column("stop_sequence");
    auto const dep = r.column("departure_time");
    auto const arr = r.column("arrival_time");
    if (!dep && !arr) {
      throw malformed_row(r.table(), 1,
                          "missing departure_time and arrival_time columns");
    }
    std::unordered_set<std::string_view> stop_ids;
    for (auto const& s : feed_.stops) {
      stop_ids.insert(s.stop_id);
    }
    std::unordered_map<std::string, std::unordered_set<std::uint32_t>>
        sequences;
    csv_row row;
    while (r.next(row)) {
      stop_time_event e;
      e.trip_id = trim(row.fields[trip]);
      e.stop_id = trim(row.fields[stop_col]);
      if (!parse_number(row.fields[seq], e.stop_sequence)) {
        throw malformed_row(r.table(), row.line, "invalid stop_sequence");
      }
      auto const dep_text = dep ? trim(row.fields[*dep]) : std::string_view{};
      auto const arr_text = arr ? trim(row.fields[*arr]) : std::string_view{};
      auto const time_text = dep_text.empty() ? arr_text : dep_text;
      if (time_text.empty()) {
        ++feed_.skipped_stop_times;
        continue;
      }
      auto const seconds = parse_gtfs_time(time_text);
      if (!seconds) {
        throw malformed_row(r.table(), row.line,
                            "invalid time '" + std::string{time_text} + "'");
      }
      e.departure_seconds = *seconds;
      if (!trip_index_.contains(e.trip_id)) {
        throw dangling_reference("stop_times.txt:" + std::to_string(row.line) +
                                 ": unknown trip_id '" + e.trip_id + "'");
      }
      if (!stop_ids.contains(e.stop_id)) {
        throw dangling_reference("stop_times.txt:" + std::to_string(row.line) +
                                 ": unknown stop_id '" + e.stop_id + "'");
      }
      if (!sequences[e.trip_id].insert(e.stop_sequence).second) {
        throw malformed_row(r.table(), row.line,
                            "duplicate (trip_id, stop_sequence)");
      }
      feed_.stop_times.push_back(std::move(e));
    }
  }

  service_calendar& calendar_for(std::string const& service_id) {
    auto [it, inserted] =
        calendar_index_.emplace(service_id, feed_.calendars.size());
    if (inserted) {
      feed_.calendars.push_back(service_calendar{service_id, {}, {}});
    }
    return feed_.calendars[it->second];
  }

  void parse_calendar(std::string const& text) {
    csv_reader r{text, "calendar.txt"};
    static constexpr std::array<std::string_view, 7> days = {
        "monday", "tuesday", "wednesday", "thursday",
        "friday", "saturday", "sunday"};
    auto const id = r.required_column("service_id");
    std::array<std::size_t, 7> day_cols{};
    for (std::size_t i = 0; i < days.size(); ++i) {
      day_cols[i] = r.required_column(days[i]);
    }
    auto const start = r.required_column("start_date");
    auto const end = r.required_column("end_date");
    csv_row row;
    while (r.next(row)) {
      std::string service_id{trim(row.fields[id])};
      if (calendar_index_.contains(service_id)) {
        throw malformed_row(r.table(), row.line,
                            "duplicate service_id '" + service_id + "'");
      }
      weekly_schedule w;
      try {
        for (std::size_t i = 0; i < 7; ++i) {
          auto const v = trim(row.fields[day_cols[i]]);
          if (v != "0" && v != "1") {
            throw format_error("weekday flag must be 0 or 1");
          }
          w.weekdays[i] = v == "1";
        }
        w.start_date = parse_gtfs_date(row.fields[start]);
        w.end_date = parse_gtfs_date(row.fields[end]);
      } catch (format_error const& e) {
        throw malformed_row(r.table(), row.line, e.what());
      }
      if (std::chrono::sys_days{w.start_date} >
          std::chrono::sys_days{w.end_date}) {
        throw malformed_row(r.table(), row.line, "start_date after end_date");
      }
      calendar_for(service_id).schedule = w;
    }
  }

  void parse_calendar_dates(std::string const& text) {
    csv_reader r{text, "calendar_dates.txt"};
    auto const id = r.required_column("service_id");
    auto const date = r.required_column("date");
    auto const type = r.required_column("exception_type");
    csv_row row;
    while (r.next(row)) {
      service_exception ex;
      int kind{};
      try {
        ex.date = parse_gtfs_date(row.fields[date]);
      } catch (format_error const& e) {
        throw malformed_row(r.table(), row.line, e.what());
      }
      if (!parse_number(row.fields[type], kind) || (kind != 1 && kind != 2)) {
        throw malformed_row(r.table(), row.line, "exception_type must be 1 or 2");
      }
      ex.kind = static_cast<exception_kind>(kind);
      auto& cal = calendar_for(std::string{trim(row.fields[id])});
      for (auto const& existing : cal.exceptions) {
        if (existing.date == ex.date) {
          throw malformed_row(r.table(), row.line,
                              "duplicate exception date for service '" +
                                  cal.service_id + "'");
        }
      }
      cal.exceptions.push_back(ex);
    }
  }

  table_lookup lookup_;
  feed_bundle feed_;
  std::unordered_map<std::string, std::size_t> trip_index_;
  std::unordered_map<std::string, std::size_t> calendar_index_;
};

}  // namespace detail

inline feed_bundle load_feed_tables(table_lookup lookup, std::string city_id,
                                    std::uint64_t declared_population) {
  return detail::feed_parser{std::move(lookup), std::move(city_id),
                             declared_population}
      .parse();
}

inline feed_bundle load_feed(std::filesystem::path const& archive_path,
                             std::string city_id,
                             std::uint64_t declared_population) {
  if (std::filesystem::is_directory(archive_path)) {
    return load_feed_tables(
        [&archive_path](std::string_view table) -> std::optional<std::string> {
          auto const p = archive_path / std::string{table};
          if (!std::filesystem::is_regular_file(p)) {
            return std::nullopt;
          }
          return detail::read_file(p);
        },
        std::move(city_id), declared_population);
  }
  detail::zip_reader zip{archive_path};
  return load_feed_tables(
      [&zip](std::string_view table) { return zip.read(table); },
      std::move(city_id), declared_population);
}

// Writes the bundle back as GTFS tables. Only the columns the loader
// consumes are emitted.
inline std::map<std::string, std::string> feed_to_tables(
    feed_bundle const& feed) {
  using detail::append_csv_row;
  std::map<std::string, std::string> tables;

  auto& stops = tables["stops.txt"];
  stops = "stop_id,stop_name,stop_lat,stop_lon,location_type\n";
  for (auto const& s : feed.stops) {
    append_csv_row(stops, {s.stop_id, s.name, detail::format_double(s.lat),
                           detail::format_double(s.lon),
                           std::to_string(s.location_type)});
  }

  auto& routes = tables["routes.txt"];
  routes = "route_id,route_type\n";
  for (auto const& r : feed.routes) {
    append_csv_row(routes, {r, "3"});
  }

  auto& trips = tables["trips.txt"];
  trips = "route_id,service_id,trip_id,trip_headsign\n";
  for (auto const& t : feed.trips) {
    append_csv_row(trips, {t.route_id, t.service_id, t.trip_id, t.headsign});
  }

  auto& stop_times = tables["stop_times.txt"];
  stop_times = "trip_id,arrival_time,departure_time,stop_id,stop_sequence\n";
  for (auto const& e : feed.stop_times) {
    auto const t = format_gtfs_time(e.departure_seconds);
    append_csv_row(stop_times, {e.trip_id, t, t, e.stop_id,
                                std::to_string(e.stop_sequence)});
  }

  std::string calendar =
      "service_id,monday,tuesday,wednesday,thursday,friday,saturday,sunday,"
      "start_date,end_date\n";
  std::string dates = "service_id,date,exception_type\n";
  bool any_schedule = false;
  bool any_exception = false;
  for (auto const& c : feed.calendars) {
    if (c.schedule) {
      any_schedule = true;
      std::vector<std::string> row{c.service_id};
      for (bool d : c.schedule->weekdays) {
        row.emplace_back(d ? "1" : "0");
      }
      row.push_back(format_gtfs_date(c.schedule->start_date));
      row.push_back(format_gtfs_date(c.schedule->end_date));
      append_csv_row(calendar, row);
    }
    for (auto const& ex : c.exceptions) {
      any_exception = true;
      append_csv_row(dates, {c.service_id, format_gtfs_date(ex.date),
                             std::to_string(static_cast<int>(ex.kind))});
    }
  }
  if (any_schedule || !any_exception) {
    tables["calendar.txt"] = std::move(calendar);
  }
  if (any_exception) {
    tables["calendar_dates.txt"] = std::move(dates);
  }
  if (feed.uses_frequencies) {
    tables["frequencies.txt"] =
        "trip_id,start_time,end_time,headway_secs\n";
  }
  return tables;
}

inline void write_feed(feed_bundle const& feed,
                       std::filesystem::path const& archive_path) {
  detail::zip_writer zip;
  for (auto const& [name, text] : feed_to_tables(feed)) {
    zip.add(name, text);
  }
  zip.write_to(archive_path);
}

// Services running on `service_date`: weekly pattern in range and not
// removed, or explicitly added.
inline std::set<std::string> active_services(feed_bundle const& feed,
                                             calendar_date service_date) {
  auto const day = std::chrono::sys_days{service_date};
  auto const weekday = weekday_index(service_date);
  std::set<std::string> active;
  for (auto const& cal : feed.calendars) {
    std::optional<exception_kind> exception;
    for (auto const& ex : cal.exceptions) {
      if (ex.date == service_date) {
        exception = ex.kind;
      }
    }
    bool const by_schedule =
        cal.schedule && cal.schedule->weekdays[weekday] &&
        std::chrono::sys_days{cal.schedule->start_date} <= day &&
        day <= std::chrono::sys_days{cal.schedule->end_date};
    if ((by_schedule && exception != exception_kind::removed) ||
        exception == exception_kind::added) {
      active.insert(cal.service_id);
    }
  }
  if (active.empty()) {
    throw empty_service_day("no service runs on " +
                            format_iso_date(service_date) + " in feed '" +
                            feed.city_id + "'");
  }
  return active;
}

inline std::vector<departure_event> departure_events(
    feed_bundle const& feed, calendar_date service_date) {
  auto const active = active_services(feed, service_date);
  std::unordered_map<std::string_view, trip_record const*> running;
  for (auto const& t : feed.trips) {
    if (active.contains(t.service_id)) {
      running.emplace(t.trip_id, &t);
    }
  }
  std::vector<departure_event> events;
  for (auto const& st : feed.stop_times) {
    auto const it = running.find(st.trip_id);
    if (it == running.end()) {
      continue;
    }
    events.push_back(departure_event{
        st.stop_id, static_cast<int>((st.departure_seconds / 3600) % 24),
        it->second->headsign});
  }
  return events;
}

// First Wednesday inside the feed's calendar span on which at least one
// service runs.
inline calendar_date default_service_date(feed_bundle const& feed) {
  std::optional<std::chrono::sys_days> first, last;
  auto extend = [&](calendar_date d) {
    auto const s = std::chrono::sys_days{d};
    first = first ? std::min(*first, s) : s;
    last = last ? std::max(*last, s) : s;
  };
  for (auto const& c : feed.calendars) {
    if (c.schedule) {
      extend(c.schedule->start_date);
      extend(c.schedule->end_date);
    }
    for (auto const& ex : c.exceptions) {
      extend(ex.date);
    }
  }
  if (!first) {
    throw empty_service_day("feed '" + feed.city_id + "' defines no services");
  }
  auto day = *first;
  while (std::chrono::weekday{day} != std::chrono::Wednesday) {
    day += std::chrono::days{1};
  }
  for (; day <= *last; day += std::chrono::days{7}) {
    try {
      active_services(feed, calendar_date{day});
      return calendar_date{day};
    } catch (empty_service_day const&) {
    }
  }
  throw empty_service_day("feed '" + feed.city_id +
                          "' has no Wednesday with service");
}

namespace detail {

inline double haversine_km(double lat1, double lon1, double lat2, double lon2) {
  constexpr double earth_radius_km = 6371.0088;
  constexpr double rad = 3.14159265358979323846 / 180.0;
  auto const dlat = (lat2 - lat1) * rad;
  auto const dlon = (lon2 - lon1) * rad;
  auto const a = std::sin(dlat / 2) * std::sin(dlat / 2) +
                 std::cos(lat1 * rad) * std::cos(lat2 * rad) *
                     std::sin(dlon / 2) * std::sin(dlon / 2);
  return 2 * earth_radius_km * std::asin(std::min(1.0, std::sqrt(a)));
}

}  // namespace detail

inline validation_report validate_feed(feed_bundle const& feed,
                                       validation_options const& opt = {}) {
  validation_report report;
  report.city_id = feed.city_id;
  auto add = [&](std::string criterion, check_status status,
                 std::string message) {
    report.checks.push_back(
        {std::move(criterion), status, std::move(message)});
  };

  auto const routes = feed.route_count();
  add("route_count", routes >= opt.min_routes ? check_status::pass
                                              : check_status::fail,
      std::to_string(routes) + " routes (minimum " +
          std::to_string(opt.min_routes) + ")");

  auto const missing_headsigns = static_cast<std::size_t>(std::count_if(
      feed.trips.begin(), feed.trips.end(),
      [](trip_record const& t) { return t.headsign.empty(); }));
  add("trip_headsign",
      missing_headsigns == 0 ? check_status::pass : check_status::fail,
      std::to_string(missing_headsigns) + " of " +
          std::to_string(feed.trips.size()) + " trips without headsign");

  add("population",
      feed.declared_population >= opt.min_population ? check_status::pass
                                                     : check_status::advisory,
      "declared population " + std::to_string(feed.declared_population) +
          " (minimum " + std::to_string(opt.min_population) + ")");

  if (!feed.stops.empty()) {
    auto [min_lat, max_lat] = std::minmax_element(
        feed.stops.begin(), feed.stops.end(),
        [](stop const& a, stop const& b) { return a.lat < b.lat; });
    auto [min_lon, max_lon] = std::minmax_element(
        feed.stops.begin(), feed.stops.end(),
        [](stop const& a, stop const& b) { return a.lon < b.lon; });
    auto const extent = detail::haversine_km(min_lat->lat, min_lon->lon,
                                             max_lat->lat, max_lon->lon);
    add("geographic_extent",
        extent <= opt.max_extent_km ? check_status::pass
                                    : check_status::advisory,
        "stop bounding box diagonal " + std::to_string(extent) +
            " km (threshold " + std::to_string(opt.max_extent_km) + " km)");
  }

  if (feed.uses_frequencies) {
    add("frequencies", check_status::advisory,
        "frequencies.txt present; headway-based trips are not expanded");
  }
  if (feed.skipped_stop_times > 0) {
    add("stop_time_without_time", check_status::advisory,
        std::to_string(feed.skipped_stop_times) +
            " stop_times rows without arrival or departure time skipped");
  }

  report.passed = std::none_of(
      report.checks.begin(), report.checks.end(),
      [](validation_check const& c) { return c.status == check_status::fail; });
  return report;
}

inline std::string validation_report_csv(
    std::vector<validation_report> const& reports) {
  std::string out = "city_id,criterion,status,message\n";
  for (auto const& r : reports) {
    for (auto const& c : r.checks) {
      detail::append_csv_row(out, {r.city_id, c.criterion,
                                   std::string{to_string(c.status)},
                                   c.message});
    }
  }
  return out;
}

}  // namespace gtfs2vec
