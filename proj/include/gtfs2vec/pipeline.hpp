#pragma once

// End-to-end orchestration: ingest -> features -> normalize -> train ->
// embed -> cluster -> export, with every stage writing plain-text artifacts
// under one output directory and skipping work whose inputs are unchanged.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <future>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

#include "gtfs2vec/autoencoder.hpp"
#include "gtfs2vec/calendar_date.hpp"
#include "gtfs2vec/clustering.hpp"
#include "gtfs2vec/detail/csv.hpp"
#include "gtfs2vec/detail/digest.hpp"
#include "gtfs2vec/detail/io.hpp"
#include "gtfs2vec/error.hpp"
#include "gtfs2vec/export.hpp"
#include "gtfs2vec/features.hpp"
#include "gtfs2vec/gtfs.hpp"
#include "gtfs2vec/normalizer.hpp"
#include "gtfs2vec/regionizer.hpp"

namespace gtfs2vec {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct city_config {
  std::string city_id;
  fs::path gtfs;
  std::int64_t population = 0;
  std::optional<calendar_date> service_date;  // nullopt means "auto"
  std::optional<fs::path> boundary;           // GeoJSON polygon, optional
};

struct run_config {
  std::vector<city_config> cities;
  int resolution = default_resolution;
  std::string normalization = "global";
  train_config train;  // its seed is replaced by train_seed()
  std::vector<std::size_t> cuts{3, 9};
  fs::path output_dir = "gtfs2vec-out";
  std::uint64_t seed = 42;
  validation_options validation;

  void validate() const {
    if (cities.empty()) {
      throw config_error("configuration lists no cities");
    }
    std::set<std::string> ids;
    for (auto const& c : cities) {
      if (c.city_id.empty()) {
        throw config_error("city entry without id");
      }
      if (c.city_id.find_first_of(":/\\,") != std::string::npos) {
        throw config_error("city id '" + c.city_id +
                           "' may not contain ':', '/', '\\' or ','");
      }
      if (!ids.insert(c.city_id).second) {
        throw config_error("duplicate city id '" + c.city_id + "'");
      }
      if (c.gtfs.empty()) {
        throw config_error("city '" + c.city_id + "' has no gtfs path");
      }
    }
    if (resolution < 0 || resolution > 15) {
      throw config_error("resolution must be 0..15");
    }
    if (normalization != "global") {
      throw config_error("unsupported normalization mode '" + normalization +
                         "' (only 'global' is implemented)");
    }
    if (cuts.empty()) {
      throw config_error("cut list is empty");
    }
    for (auto const k : cuts) {
      if (k < 1) {
        throw config_error("cut values must be >= 1");
      }
    }
    train.validate();
  }
};

// Seeds of the stochastic stages derive from the global seed by fixed
// offsets, so any stage can be rerun on its own with the same result.
inline constexpr std::uint64_t train_seed_offset = 1;

inline std::uint64_t train_seed(run_config const& c) {
  return c.seed + train_seed_offset;
}

namespace detail {

inline bool parse_bool(std::string_view v, std::string_view key) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") {
    return true;
  }
  if (v == "false" || v == "0" || v == "no" || v == "off") {
    return false;
  }
  throw config_error("invalid boolean for " + std::string{key} + ": '" +
                     std::string{v} + "'");
}

inline std::string_view unquote(std::string_view v) {
  if (v.size() >= 2 && (v.front() == '"' || v.front() == '\'') &&
      v.back() == v.front()) {
    return v.substr(1, v.size() - 2);
  }
  return v;
}

}  // namespace detail

// Flat `key = value` lines; each `[city]` header opens a new city table.
// Relative paths resolve against `base_dir`.
inline run_config parse_run_config(std::string_view text,
                                   fs::path const& base_dir = {}) {
  run_config cfg;
  city_config* city = nullptr;
  std::size_t line_no = 0;
  std::size_t start = 0;
  auto resolve = [&](std::string_view v) {
    fs::path p{std::string{v}};
    return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
  };
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) {
      end = text.size();
    }
    auto raw = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    auto const hash = raw.find('#');
    if (hash != std::string_view::npos) {
      raw = raw.substr(0, hash);
    }
    auto const line = detail::trim(raw);
    if (line.empty()) {
      if (end == text.size()) {
        break;
      }
      continue;
    }
    auto fail = [&](std::string const& what) -> config_error {
      return config_error("config line " + std::to_string(line_no) + ": " +
                          what);
    };
    if (line.front() == '[') {
      if (line.back() != ']' ||
          detail::trim(line.substr(1, line.size() - 2)) != "city") {
        throw fail("unknown section " + std::string{line} +
                   " (only [city] is supported)");
      }
      cfg.cities.emplace_back();
      city = &cfg.cities.back();
      continue;
    }
    auto const eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw fail("expected key = value");
    }
    auto const key = std::string{detail::trim(line.substr(0, eq))};
    auto const value = detail::unquote(detail::trim(line.substr(eq + 1)));
    auto number = [&]<typename T>(T& out) {
      if (!detail::parse_number(value, out)) {
        throw fail("invalid number for " + key + ": '" + std::string{value} +
                   "'");
      }
    };
    if (city != nullptr) {
      if (key == "id" || key == "city_id") {
        city->city_id = value;
      } else if (key == "gtfs") {
        city->gtfs = resolve(value);
      } else if (key == "population") {
        number(city->population);
      } else if (key == "date" || key == "service_date") {
        if (value != "auto") {
          try {
            city->service_date = parse_iso_date(value);
          } catch (error const& e) {
            throw fail(e.what());
          }
        }
      } else if (key == "boundary") {
        city->boundary = resolve(value);
      } else {
        throw fail("unknown city key '" + key + "'");
      }
      continue;
    }
    if (key == "output_dir") {
      cfg.output_dir = resolve(value);
    } else if (key == "seed") {
      number(cfg.seed);
    } else if (key == "resolution") {
      number(cfg.resolution);
    } else if (key == "normalization") {
      cfg.normalization = value;
    } else if (key == "cuts") {
      cfg.cuts.clear();
      for (auto const& part : detail::split(value, ',')) {
        std::size_t k{};
        if (!detail::parse_number(part, k)) {
          throw fail("invalid cut value '" + part + "'");
        }
        cfg.cuts.push_back(k);
      }
    } else if (key == "epochs") {
      number(cfg.train.epochs);
    } else if (key == "batch_size") {
      number(cfg.train.batch_size);
    } else if (key == "learning_rate") {
      number(cfg.train.learning_rate);
    } else if (key == "optimizer") {
      try {
        cfg.train.optimizer = parse_optimizer(value);
      } catch (error const& e) {
        throw fail(e.what());
      }
    } else if (key == "shuffle") {
      cfg.train.shuffle = detail::parse_bool(value, key);
    } else if (key == "min_routes") {
      number(cfg.validation.min_routes);
    } else if (key == "min_population") {
      number(cfg.validation.min_population);
    } else if (key == "max_extent_km") {
      number(cfg.validation.max_extent_km);
    } else {
      throw fail("unknown key '" + key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

inline run_config load_run_config(fs::path const& path) {
  return parse_run_config(detail::read_file(path), path.parent_path());
}

// ---------------------------------------------------------------------------
// City boundaries
// ---------------------------------------------------------------------------

using polygon_rings = std::vector<std::vector<lat_lon>>;

// Accepts a Polygon or MultiPolygon, bare or wrapped in a Feature or
// FeatureCollection.
inline std::vector<polygon_rings> boundary_from_geojson(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (nlohmann::json::exception const& e) {
    throw format_error(std::string{"boundary is not valid JSON: "} + e.what());
  }
  std::vector<polygon_rings> out;
  auto read_polygon = [&](nlohmann::json const& coords) {
    polygon_rings rings;
    for (auto const& ring : coords) {
      std::vector<lat_lon> r;
      for (auto const& p : ring) {
        if (!p.is_array() || p.size() < 2) {
          throw format_error("boundary position must be [lon, lat]");
        }
        r.push_back({p[1].get<double>(), p[0].get<double>()});
      }
      if (r.size() > 1 && r.front().lat == r.back().lat &&
          r.front().lon == r.back().lon) {
        r.pop_back();
      }
      rings.push_back(std::move(r));
    }
    out.push_back(std::move(rings));
  };
  std::function<void(nlohmann::json const&)> visit =
      [&](nlohmann::json const& node) {
        auto const type = node.value("type", std::string{});
        if (type == "FeatureCollection") {
          for (auto const& f : node.at("features")) {
            visit(f);
          }
        } else if (type == "Feature") {
          visit(node.at("geometry"));
        } else if (type == "Polygon") {
          read_polygon(node.at("coordinates"));
        } else if (type == "MultiPolygon") {
          for (auto const& poly : node.at("coordinates")) {
            read_polygon(poly);
          }
        } else {
          throw format_error("unsupported boundary geometry type '" + type +
                             "'");
        }
      };
  try {
    visit(doc);
  } catch (nlohmann::json::exception const& e) {
    throw format_error(std::string{"malformed boundary GeoJSON: "} + e.what());
  }
  return out;
}

inline std::vector<cell_id> boundary_cells(
    std::vector<polygon_rings> const& polygons, int resolution) {
  std::set<cell_id> cells;
  for (auto const& p : polygons) {
    for (auto const c : cells_in_polygon(p, resolution)) {
      cells.insert(c);
    }
  }
  return {cells.begin(), cells.end()};
}

// ---------------------------------------------------------------------------
// Ingest stage
// ---------------------------------------------------------------------------

// What the rest of the pipeline needs from one feed: the boarding stops
// and the departures of the chosen service day.
struct city_ingest {
  std::string city_id;
  validation_report report;
  std::optional<calendar_date> service_date;  // unset when excluded
  std::vector<stop> stops;
  std::vector<departure_event> events;

  bool included() const noexcept { return report.passed; }
};

inline city_ingest ingest_feed(feed_bundle const& feed,
                               std::optional<calendar_date> date,
                               validation_options const& opts = {}) {
  city_ingest out;
  out.city_id = feed.city_id;
  out.report = validate_feed(feed, opts);
  if (!out.report.passed) {
    return out;
  }
  out.service_date = date ? *date : default_service_date(feed);
  // Stations, entrances and nodes share coordinates with the platforms
  // they group, so only boarding stops define regions.
  for (auto const& s : feed.stops) {
    if (s.location_type == 0) {
      out.stops.push_back(s);
    }
  }
  out.events = departure_events(feed, *out.service_date);
  return out;
}

inline city_ingest ingest_city(city_config const& city,
                               validation_options const& opts = {}) {
  return ingest_feed(load_feed(city.gtfs, city.city_id, city.population),
                     city.service_date, opts);
}

inline void write_ingest(city_ingest const& c, fs::path const& dir) {
  std::string meta = "city_id=" + c.city_id + "\nstatus=" +
                     (c.included() ? "included" : "excluded") + "\n";
  if (c.service_date) {
    meta += "service_date=" + format_iso_date(*c.service_date) + "\n";
  }
  std::string stops = "stop_id,stop_lat,stop_lon\n";
  for (auto const& s : c.stops) {
    detail::append_csv_field(stops, s.stop_id);
    stops += ',';
    detail::append_double(stops, s.lat);
    stops += ',';
    detail::append_double(stops, s.lon);
    stops += '\n';
  }
  std::string events = "stop_id,hour,headsign\n";
  for (auto const& e : c.events) {
    detail::append_csv_row(events,
                           {e.stop_id, std::to_string(e.hour_of_day), e.headsign});
  }
  detail::write_file(dir / "meta.txt", meta);
  detail::write_file(dir / "validation.csv", validation_report_csv({c.report}));
  detail::write_file(dir / "stops.csv", stops);
  detail::write_file(dir / "events.csv", events);
}

inline std::vector<fs::path> ingest_files(fs::path const& dir) {
  return {dir / "meta.txt", dir / "validation.csv", dir / "stops.csv",
          dir / "events.csv"};
}

inline city_ingest read_ingest(fs::path const& dir) {
  city_ingest c;
  for (auto const& line : detail::split(detail::read_file(dir / "meta.txt"), '\n')) {
    auto const eq = line.find('=');
    if (eq == std::string::npos) {
      continue;
    }
    auto const key = line.substr(0, eq);
    auto const value = line.substr(eq + 1);
    if (key == "city_id") {
      c.city_id = value;
    } else if (key == "service_date") {
      c.service_date = parse_iso_date(value);
    } else if (key == "status") {
      c.report.passed = value == "included";
    }
  }
  if (c.city_id.empty()) {
    throw format_error(dir.string() + "/meta.txt: missing city_id");
  }
  c.report.city_id = c.city_id;

  auto const validation = detail::read_file(dir / "validation.csv");
  detail::csv_reader vr{validation, "validation.csv"};
  auto const crit = vr.required_column("criterion");
  auto const status = vr.required_column("status");
  auto const message = vr.required_column("message");
  detail::csv_row row;
  while (vr.next(row)) {
    auto const& s = row.fields[status];
    check_status st = s == "pass"   ? check_status::pass
                      : s == "fail" ? check_status::fail
                                    : check_status::advisory;
    c.report.checks.push_back({row.fields[crit], st, row.fields[message]});
  }

  auto const stops = detail::read_file(dir / "stops.csv");
  detail::csv_reader sr{stops, "stops.csv"};
  auto const id = sr.required_column("stop_id");
  auto const lat = sr.required_column("stop_lat");
  auto const lon = sr.required_column("stop_lon");
  while (sr.next(row)) {
    stop s;
    s.stop_id = row.fields[id];
    s.lat = detail::parse_number_or_throw<double>(row.fields[lat], "stop_lat");
    s.lon = detail::parse_number_or_throw<double>(row.fields[lon], "stop_lon");
    c.stops.push_back(std::move(s));
  }

  auto const events = detail::read_file(dir / "events.csv");
  detail::csv_reader er{events, "events.csv"};
  auto const sid = er.required_column("stop_id");
  auto const hour = er.required_column("hour");
  auto const headsign = er.required_column("headsign");
  while (er.next(row)) {
    c.events.push_back(departure_event{
        row.fields[sid],
        detail::parse_number_or_throw<int>(row.fields[hour], "hour"),
        row.fields[headsign]});
  }
  return c;
}

// ---------------------------------------------------------------------------
// Feature stage
// ---------------------------------------------------------------------------

// Regions of every included city; cells from `extra_cells` (e.g. filled
// city boundaries) join as regions even when no stop lies in them.
inline feature_matrix compute_features(
    std::vector<city_ingest> const& cities, int resolution = default_resolution,
    std::map<std::string, std::vector<cell_id>> const& extra_cells = {}) {
  std::vector<std::future<std::vector<region_feature_vector>>> jobs;
  for (auto const& c : cities) {
    if (!c.included()) {
      continue;
    }
    jobs.push_back(std::async(std::launch::async, [&c, resolution, &extra_cells] {
      try {
        auto regions = group_stops_by_region(c.stops, c.city_id, resolution);
        if (auto const it = extra_cells.find(c.city_id); it != extra_cells.end()) {
          for (auto const cell : it->second) {
            regions.try_emplace(region_key{c.city_id, cell});
          }
        }
        return city_features(regions, c.events);
      } catch (stage_error const&) {
        throw;
      } catch (error const& e) {
        throw stage_error("features", c.city_id, e.what());
      }
    }));
  }
  std::vector<region_feature_vector> all;
  for (auto& j : jobs) {
    auto part = j.get();
    all.insert(all.end(), std::make_move_iterator(part.begin()),
               std::make_move_iterator(part.end()));
  }
  return to_feature_matrix(std::move(all));
}

// ---------------------------------------------------------------------------
// Cluster stage artifacts
// ---------------------------------------------------------------------------

struct cluster_outcome {
  dendrogram tree;
  std::vector<cluster_cut> cuts;
  std::map<std::size_t, std::vector<cluster_summary>> summaries;  // per k
  std::map<int, std::string> typology;  // k=3 label -> name; empty if no k=3

  cluster_cut const* find_cut(std::size_t k) const {
    for (auto const& c : cuts) {
      if (c.k == k) {
        return &c;
      }
    }
    return nullptr;
  }

  std::string typology_of(std::size_t row) const {
    auto const* k3 = find_cut(3);
    if (k3 == nullptr || typology.empty()) {
      return {};
    }
    return typology.at(k3->labels[row]);
  }
};

inline cluster_outcome cluster_embeddings(dendrogram tree, matrix const& raw,
                                          std::vector<std::size_t> const& ks) {
  cluster_outcome out;
  out.tree = std::move(tree);
  for (auto const k : ks) {
    out.cuts.push_back(cut(out.tree, k));
    out.summaries[k] = summarize_clusters(out.cuts.back(), raw);
  }
  if (auto const* k3 = out.find_cut(3)) {
    out.typology = assign_typology(*k3, out.summaries.at(3));
  }
  return out;
}

inline std::string cuts_to_csv(std::vector<region_key> const& rows,
                               cluster_outcome const& c) {
  std::string out = "city_id,cell";
  for (auto const& ct : c.cuts) {
    out += ",label_k" + std::to_string(ct.k);
  }
  out += ",typology_name\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    detail::append_csv_field(out, rows[i].city_id);
    out += ',' + rows[i].cell.str();
    for (auto const& ct : c.cuts) {
      out += ',' + std::to_string(ct.labels[i]);
    }
    out += ',';
    detail::append_csv_field(out, c.typology_of(i));
    out += '\n';
  }
  return out;
}

struct cut_table {
  std::vector<region_key> rows;
  std::map<std::size_t, std::vector<int>> labels;  // per k
  std::vector<std::string> typology;
};

inline cut_table cuts_from_csv(std::string_view text) {
  detail::csv_reader r{text, "cuts.csv"};
  auto const city = r.required_column("city_id");
  auto const cell = r.required_column("cell");
  auto const name = r.column("typology_name");
  std::vector<std::pair<std::size_t, std::size_t>> label_cols;  // (k, column)
  for (std::size_t i = 0; i < r.header().size(); ++i) {
    std::string_view h = r.header()[i];
    if (h.starts_with("label_k")) {
      label_cols.emplace_back(
          detail::parse_number_or_throw<std::size_t>(h.substr(7), "cut column"),
          i);
    }
  }
  cut_table t;
  detail::csv_row row;
  while (r.next(row)) {
    t.rows.push_back({row.fields[city], cell_id::parse(row.fields[cell])});
    for (auto const& [k, col] : label_cols) {
      t.labels[k].push_back(
          detail::parse_number_or_throw<int>(row.fields[col], "cluster label"));
    }
    t.typology.push_back(name ? row.fields[*name] : std::string{});
  }
  return t;
}

inline std::string cluster_summary_to_csv(cluster_outcome const& c) {
  std::string out =
      "k,cluster_id,region_count,mean_sum_trips,mean_directions_whole_day,"
      "typology_name\n";
  for (auto const& [k, summaries] : c.summaries) {
    for (auto const& s : summaries) {
      out += std::to_string(k) + ',' + std::to_string(s.cluster_id) + ',' +
             std::to_string(s.region_count) + ',';
      detail::append_double(out, s.mean_sum_trips);
      out += ',';
      detail::append_double(out, s.mean_directions_whole_day);
      out += ',';
      if (k == 3 && !c.typology.empty()) {
        out += c.typology.at(s.cluster_id);
      }
      out += '\n';
    }
  }
  return out;
}

// Joins the per-stage results row by row. Optional parts may be empty.
inline std::vector<region_record> assemble_records(
    feature_matrix const& features, matrix const& normalized,
    std::vector<embedding> const& embeddings, cut_table const& cuts) {
  auto const n = features.size();
  if ((normalized.size() != 0 && static_cast<std::size_t>(normalized.rows()) != n) ||
      (!embeddings.empty() && embeddings.size() != n) || cuts.rows.size() != n) {
    throw shape_mismatch("stage outputs disagree on the number of regions");
  }
  std::vector<region_record> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& r = out[i];
    r.region = features.rows[i];
    if (cuts.rows[i] != r.region ||
        (!embeddings.empty() && embeddings[i].region != r.region)) {
      throw shape_mismatch("stage outputs disagree on region order at row " +
                           std::to_string(i));
    }
    auto const ri = static_cast<Eigen::Index>(i);
    for (int c = 0; c < feature_count; ++c) {
      r.raw[static_cast<std::size_t>(c)] = features.values(ri, c);
      if (normalized.size() != 0) {
        r.normalized[static_cast<std::size_t>(c)] = normalized(ri, c);
      }
    }
    if (!embeddings.empty()) {
      r.embedding = embeddings[i].values;
    }
    if (auto const it = cuts.labels.find(3); it != cuts.labels.end()) {
      r.label_k3 = it->second[i];
    }
    if (auto const it = cuts.labels.find(9); it != cuts.labels.end()) {
      r.label_k9 = it->second[i];
    }
    r.typology_name = cuts.typology[i];
  }
  return out;
}

inline cut_table to_cut_table(std::vector<region_key> const& rows,
                              cluster_outcome const& c) {
  cut_table t;
  t.rows = rows;
  for (auto const& ct : c.cuts) {
    t.labels[ct.k] = ct.labels;
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    t.typology.push_back(c.typology_of(i));
  }
  return t;
}

inline matrix embedding_matrix(std::vector<embedding> const& rows) {
  if (rows.empty()) {
    return matrix(0, embedding_size);
  }
  matrix m(static_cast<Eigen::Index>(rows.size()), rows.front().values.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    m.row(static_cast<Eigen::Index>(i)) = rows[i].values.transpose();
  }
  return m;
}

// ---------------------------------------------------------------------------
// Stage cache and manifest
// ---------------------------------------------------------------------------

struct artifact {
  std::string stage;
  std::string path;  // relative to the output directory, '/' separated
  std::string sha256;

  friend bool operator==(artifact const&, artifact const&) = default;
};

struct excluded_city {
  std::string city_id;
  std::string reason;
};

struct run_manifest {
  fs::path output_dir;
  std::vector<artifact> artifacts;
  std::vector<validation_report> reports;
  std::vector<excluded_city> excluded;
  std::vector<std::string> cached_stages;  // stages skipped as up to date
  std::vector<region_record> records;

  artifact const* find(std::string_view path) const {
    for (auto const& a : artifacts) {
      if (a.path == path) {
        return &a;
      }
    }
    return nullptr;
  }
};

inline std::string manifest_to_csv(run_manifest const& m) {
  std::string out = "stage,path,sha256\n";
  for (auto const& a : m.artifacts) {
    detail::append_csv_row(out, {a.stage, a.path, a.sha256});
  }
  return out;
}

namespace detail {

// One key file per stage under <out>/.cache. The key digests the stage's
// parameters and input digests; the file also records the output
// digests so a tampered or missing output forces a recompute.
class stage_cache {
public:
  stage_cache(fs::path out_dir, bool enabled)
      : out_{std::move(out_dir)}, enabled_{enabled} {}

  bool fresh(std::string const& stage, std::string const& key,
             std::vector<std::string> const& outputs) const {
    if (!enabled_ || !fs::exists(key_file(stage))) {
      return false;
    }
    auto const lines = split(read_file(key_file(stage)), '\n');
    if (lines.empty() || lines[0] != key) {
      return false;
    }
    std::map<std::string, std::string> recorded;
    for (std::size_t i = 1; i < lines.size(); ++i) {
      auto const sp = lines[i].find(' ');
      if (sp != std::string::npos) {
        recorded[lines[i].substr(sp + 1)] = lines[i].substr(0, sp);
      }
    }
    for (auto const& o : outputs) {
      auto const it = recorded.find(o);
      if (it == recorded.end() || !fs::exists(out_ / o) ||
          file_sha256(out_ / o) != it->second) {
        return false;
      }
    }
    return true;
  }

  void store(std::string const& stage, std::string const& key,
             std::vector<std::string> const& outputs) const {
    std::string text = key + "\n";
    for (auto const& o : outputs) {
      text += file_sha256(out_ / o) + " " + o + "\n";
    }
    write_file(key_file(stage), text);
  }

private:
  fs::path key_file(std::string const& stage) const {
    return out_ / ".cache" / (stage + ".key");
  }

  fs::path out_;
  bool enabled_;
};

inline std::string stage_key(std::vector<std::string> const& parts) {
  std::string joined;
  for (auto const& p : parts) {
    joined += p;
    joined += '\x1f';
  }
  return sha256_hex(joined);
}

inline std::string train_config_key(train_config const& t) {
  std::string s = "epochs=" + std::to_string(t.epochs) +
                  ";batch=" + std::to_string(t.batch_size) + ";lr=" +
                  format_double(t.learning_rate) + ";opt=" +
                  std::string{to_string(t.optimizer)} + ";seed=" +
                  std::to_string(t.seed) + ";shuffle=" +
                  (t.shuffle ? "1" : "0") + ";b1=" + format_double(t.beta1) +
                  ";b2=" + format_double(t.beta2) + ";eps=" +
                  format_double(t.epsilon);
  return s;
}

}  // namespace detail

struct run_options {
  bool use_cache = true;
  std::function<void(std::string_view)> log;  // progress messages, optional
};

// Bumped whenever an artifact format changes, so stale caches are ignored.
inline constexpr std::string_view artifact_format_version = "1";

inline run_manifest run(run_config const& cfg, run_options const& opts = {}) {
  cfg.validate();
  auto const& out = cfg.output_dir;
  auto train_cfg = cfg.train;
  train_cfg.seed = train_seed(cfg);
  fs::create_directories(out);
  detail::stage_cache cache{out, opts.use_cache};
  run_manifest manifest;
  manifest.output_dir = out;
  auto log = [&](std::string const& msg) {
    if (opts.log) {
      opts.log(msg);
    }
  };
  auto digest = [&](std::string const& rel) {
    return detail::file_sha256(out / rel);
  };
  auto record = [&](std::string const& stage,
                    std::vector<std::string> const& files) {
    for (auto const& f : files) {
      manifest.artifacts.push_back({stage, f, digest(f)});
    }
  };
  // Runs `compute` unless the cache says the outputs for `key` are current.
  auto staged = [&](std::string const& stage, std::string const& cache_name,
                    std::string const& city, std::string const& key,
                    std::vector<std::string> const& outputs, auto&& compute) {
    try {
      if (cache.fresh(cache_name, key, outputs)) {
        manifest.cached_stages.push_back(cache_name);
        log(cache_name + ": up to date");
        return true;
      }
      log(cache_name + ": running");
      compute();
      cache.store(cache_name, key, outputs);
      return false;
    } catch (stage_error const&) {
      throw;
    } catch (std::exception const& e) {
      throw stage_error(stage, city, e.what());
    }
  };

  // --- ingest, one job per city ---
  struct ingest_job {
    std::string key;
    std::vector<std::string> outputs;
    bool cached = false;
  };
  std::vector<ingest_job> ingest_jobs(cfg.cities.size());
  for (std::size_t i = 0; i < cfg.cities.size(); ++i) {
    auto const& c = cfg.cities[i];
    auto& job = ingest_jobs[i];
    fs::path const dir = fs::path{"ingest"} / c.city_id;
    for (auto const& f : ingest_files(dir)) {
      job.outputs.push_back(f.generic_string());
    }
    try {
      job.key = detail::stage_key(
          {"ingest", std::string{artifact_format_version}, c.city_id,
           detail::file_sha256(c.gtfs), std::to_string(c.population),
           c.service_date ? format_iso_date(*c.service_date) : "auto",
           std::to_string(cfg.validation.min_routes),
           std::to_string(cfg.validation.min_population),
           detail::format_double(cfg.validation.max_extent_km)});
    } catch (std::exception const& e) {
      throw stage_error("ingest", c.city_id, e.what());
    }
  }
  {
    std::vector<std::future<void>> jobs;
    for (std::size_t i = 0; i < cfg.cities.size(); ++i) {
      jobs.push_back(std::async(std::launch::async, [&, i] {
        auto const& c = cfg.cities[i];
        auto& job = ingest_jobs[i];
        try {
          if (cache.fresh("ingest-" + c.city_id, job.key, job.outputs)) {
            job.cached = true;
            return;
          }
          write_ingest(ingest_city(c, cfg.validation), out / "ingest" / c.city_id);
          cache.store("ingest-" + c.city_id, job.key, job.outputs);
        } catch (std::exception const& e) {
          throw stage_error("ingest", c.city_id, e.what());
        }
      }));
    }
    for (auto& j : jobs) {
      j.get();
    }
  }
  std::vector<city_ingest> ingested;
  for (std::size_t i = 0; i < cfg.cities.size(); ++i) {
    auto const& c = cfg.cities[i];
    if (ingest_jobs[i].cached) {
      manifest.cached_stages.push_back("ingest-" + c.city_id);
    }
    try {
      ingested.push_back(read_ingest(out / "ingest" / c.city_id));
    } catch (std::exception const& e) {
      throw stage_error("ingest", c.city_id, e.what());
    }
    record("ingest", ingest_jobs[i].outputs);
    auto const& rep = ingested.back().report;
    manifest.reports.push_back(rep);
    if (!rep.passed) {
      std::string reason;
      for (auto const& chk : rep.checks) {
        if (chk.status == check_status::fail) {
          reason += (reason.empty() ? "" : "; ") + chk.criterion + ": " + chk.message;
        }
      }
      manifest.excluded.push_back({c.city_id, reason});
      log("excluded city " + c.city_id + " (" + reason + ")");
    }
  }
  {
    detail::write_file(out / "validation.csv",
                       validation_report_csv(manifest.reports));
    std::string ex = "city_id,reason\n";
    for (auto const& e : manifest.excluded) {
      detail::append_csv_row(ex, {e.city_id, e.reason});
    }
    detail::write_file(out / "excluded.csv", ex);
    record("ingest", {"validation.csv", "excluded.csv"});
  }
  if (manifest.excluded.size() == cfg.cities.size()) {
    throw stage_error("ingest", {}, "no city passed validation");
  }

  // --- features ---
  std::vector<std::string> feature_inputs{"features",
                                          std::string{artifact_format_version},
                                          std::to_string(cfg.resolution)};
  for (std::size_t i = 0; i < cfg.cities.size(); ++i) {
    for (auto const& f : ingest_jobs[i].outputs) {
      feature_inputs.push_back(digest(f));
    }
    auto const& b = cfg.cities[i].boundary;
    feature_inputs.push_back(b ? detail::file_sha256(*b) : "-");
  }
  auto const features_key = detail::stage_key(feature_inputs);
  feature_matrix features;
  staged("features", "features", {}, features_key, {"features.csv"}, [&] {
    std::map<std::string, std::vector<cell_id>> extra;
    for (auto const& c : cfg.cities) {
      if (c.boundary) {
        try {
          extra[c.city_id] = boundary_cells(
              boundary_from_geojson(detail::read_file(*c.boundary)),
              cfg.resolution);
        } catch (std::exception const& e) {
          throw stage_error("features", c.city_id, e.what());
        }
      }
    }
    detail::write_file(out / "features.csv",
                       features_to_csv(compute_features(ingested, cfg.resolution, extra)));
  });
  features = features_from_csv(detail::read_file(out / "features.csv"));
  record("features", {"features.csv"});
  if (features.size() == 0) {
    throw stage_error("features", {}, "no regions with boarding stops");
  }

  // --- normalize ---
  auto const norm_key = detail::stage_key(
      {"normalize", std::string{artifact_format_version}, cfg.normalization,
       digest("features.csv")});
  staged("normalize", "normalize", {}, norm_key, {"norm_params.txt"}, [&] {
    detail::write_file(out / "norm_params.txt", norm_params_to_text(fit(features)));
  });
  auto const params = norm_params_from_text(detail::read_file(out / "norm_params.txt"));
  matrix const normalized = transform(features.values, params);
  record("normalize", {"norm_params.txt"});

  // --- train ---
  auto const train_key = detail::stage_key(
      {"train", std::string{artifact_format_version},
       detail::train_config_key(train_cfg), digest("features.csv"),
       digest("norm_params.txt")});
  staged("train", "train", {}, train_key, {"model.txt", "loss_history.csv"}, [&] {
    auto const result = train(normalized, train_cfg);
    detail::write_file(out / "model.txt", model_to_text(result.model));
    detail::write_file(out / "loss_history.csv",
                       loss_history_to_csv(result.loss_history));
  });
  record("train", {"model.txt", "loss_history.csv"});

  // --- embed ---
  auto const embed_key = detail::stage_key(
      {"embed", std::string{artifact_format_version}, digest("model.txt"),
       digest("features.csv"), digest("norm_params.txt")});
  staged("embed", "embed", {}, embed_key, {"embeddings.csv"}, [&] {
    auto const model = model_from_text(detail::read_file(out / "model.txt"));
    detail::write_file(out / "embeddings.csv",
                       embeddings_to_csv(encode(model, features.rows, normalized)));
  });
  auto const embeddings = embeddings_from_csv(detail::read_file(out / "embeddings.csv"));
  record("embed", {"embeddings.csv"});

  // --- cluster ---
  std::string cuts_param;
  for (auto const k : cfg.cuts) {
    cuts_param += std::to_string(k) + ",";
  }
  auto const cluster_key = detail::stage_key(
      {"cluster", std::string{artifact_format_version}, cuts_param,
       digest("embeddings.csv"), digest("features.csv")});
  std::vector<std::string> const cluster_outputs{"dendrogram.csv", "cuts.csv",
                                                 "cluster_summary.csv"};
  staged("cluster", "cluster", {}, cluster_key, cluster_outputs, [&] {
    auto const outcome = cluster_embeddings(
        ward_agglomerate(embedding_matrix(embeddings)), features.values, cfg.cuts);
    detail::write_file(out / "dendrogram.csv", dendrogram_to_csv(outcome.tree));
    detail::write_file(out / "cuts.csv", cuts_to_csv(features.rows, outcome));
    detail::write_file(out / "cluster_summary.csv", cluster_summary_to_csv(outcome));
  });
  auto const cuts = cuts_from_csv(detail::read_file(out / "cuts.csv"));
  record("cluster", cluster_outputs);

  // --- export ---
  try {
    manifest.records = assemble_records(features, normalized, embeddings, cuts);
  } catch (std::exception const& e) {
    throw stage_error("export", {}, e.what());
  }
  std::vector<std::pair<std::string, map_layer>> layers;
  if (cuts.labels.contains(3)) {
    layers.emplace_back("map_k3.geojson", map_layer::k3);
  }
  if (cuts.labels.contains(9)) {
    layers.emplace_back("map_k9.geojson", map_layer::k9);
  }
  layers.emplace_back("map_features.geojson", map_layer::features);
  std::vector<std::string> export_outputs;
  for (auto const& [file, layer] : layers) {
    export_outputs.push_back(file);
  }
  auto const export_key = detail::stage_key(
      {"export", std::string{artifact_format_version}, digest("features.csv"),
       digest("cuts.csv")});
  staged("export", "export", {}, export_key, export_outputs, [&] {
    for (auto const& [file, layer] : layers) {
      detail::write_file(out / file,
                         export_geojson(manifest.records, layer).dump() + "\n");
    }
  });
  record("export", export_outputs);

  detail::write_file(out / "manifest.csv", manifest_to_csv(manifest));
  log("wrote " + (out / "manifest.csv").string());
  return manifest;
}

}  // namespace gtfs2vec
