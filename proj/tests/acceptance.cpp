// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero when any criterion fails.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <string>

#include "gtfs2vec/pipeline.hpp"
#include "gtfs2vec/similarity.hpp"
#include "support/fixture_run.hpp"
#include "support/gradient_check.hpp"
#include "support/oracles.hpp"
#include "support/temp_dir.hpp"

using namespace gtfs2vec;
using namespace testing_support;

namespace {

struct verdict {
  bool pass = false;
  std::string detail;
};

using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point t0) {
  return std::chrono::duration<double>(clock_type::now() - t0).count();
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string slurp(fs::path const& p) {
  std::ifstream in{p, std::ios::binary};
  return {std::istreambuf_iterator<char>{in}, std::istreambuf_iterator<char>{}};
}

// Shared state: two independent full runs over the 3-city archetype fixture.
struct full_runs {
  temp_dir dir{"acceptance"};
  fixture_run fixture;
  run_manifest first;
  run_manifest second;
  fs::path second_out;
  double first_seconds = 0.0;
};

full_runs& runs() {
  static full_runs r;
  static bool const ready = [] {
    r.fixture = make_fixture_run(r.dir.path(), three_city_fixture());
    auto const t0 = clock_type::now();
    r.first = run(r.fixture.config, run_options{false, {}});
    r.first_seconds = seconds_since(t0);
    auto cfg = r.fixture.config;
    cfg.output_dir = r.dir / "second";
    r.second_out = cfg.output_dir;
    r.second = run(cfg, run_options{false, {}});
    return true;
  }();
  (void)ready;
  return r;
}

matrix uniform_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 rng{seed};
  std::uniform_real_distribution<double> u{0.0, 1.0};
  matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    m.data()[i] = u(rng);
  }
  return m;
}

verdict feature_shape() {
  auto const& names = feature_column_names();
  bool ok = names.size() == 34;
  for (int h = 0; h < 17 && ok; ++h) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%02d", h + 6);
    ok = names[static_cast<std::size_t>(h)] == std::string{"trips_h"} + buf &&
         names[static_cast<std::size_t>(h + 17)] == std::string{"dirs_h"} + buf;
  }
  auto& r = runs();
  auto const out = r.fixture.config.output_dir;
  auto const features = features_from_csv(slurp(out / "features.csv"));
  ok = ok && features.values.cols() == 34 && features.trips_block().cols() == 17 &&
       features.dirs_block().cols() == 17 && features.size() == r.first.records.size();

  // Time the feature stage alone on the ingested fixture.
  std::vector<city_ingest> cities;
  for (auto const& c : r.fixture.config.cities) {
    cities.push_back(read_ingest(out / "ingest" / c.city_id));
  }
  auto const t0 = clock_type::now();
  auto const recomputed = compute_features(cities);
  auto const secs = seconds_since(t0);
  ok = ok && recomputed == features && secs < 1.0;
  return {ok, std::to_string(features.size()) + " regions x " +
                  std::to_string(features.values.cols()) + " columns (17 trips + 17 directions, hours 06-22), feature stage " +
                  fmt(secs) + " s"};
}

verdict counting_oracle() {
  auto const t0 = clock_type::now();
  int feeds = 0;
  std::size_t regions = 0;
  std::size_t mismatches = 0;
  bool sizes_ok = true;
  for (std::uint64_t seed = 5000; seed < 5150; ++seed) {
    auto const feed = make_random_feed(seed);
    sizes_ok = sizes_ok && feed.stops.size() <= 20 && feed.trips.size() <= 50;
    auto const date = ymd(2024, 1, static_cast<unsigned>(1 + seed % 14));
    auto const oracle = brute_force_features(feed, date);
    std::vector<departure_event> events;
    try {
      events = departure_events(feed, date);
    } catch (empty_service_day const&) {
    }
    std::vector<stop> boarding;
    std::copy_if(feed.stops.begin(), feed.stops.end(), std::back_inserter(boarding),
                 [](stop const& s) { return s.location_type == 0; });
    auto const grouped = group_stops_by_region(boarding, feed.city_id);
    if (grouped.size() != oracle.size()) {
      ++mismatches;
    }
    for (auto const& [key, stops] : grouped) {
      auto const trips = hourly_trip_counts(events, stops);
      auto const dirs = hourly_direction_counts(events, stops);
      auto const it = oracle.find(key);
      if (it == oracle.end()) {
        ++mismatches;
        continue;
      }
      for (std::size_t h = 0; h < 17; ++h) {
        mismatches += trips[h] != it->second.trips[h] ? 1 : 0;
        mismatches += dirs[h] != it->second.dirs[h] ? 1 : 0;
      }
      ++regions;
    }
    ++feeds;
  }
  return {mismatches == 0 && sizes_ok && feeds >= 100,
          std::to_string(feeds) + " feeds, " + std::to_string(regions) +
              " regions, " + std::to_string(mismatches) + " mismatching counts, " +
              fmt(seconds_since(t0)) + " s"};
}

verdict normalization_contract() {
  auto& r = runs();
  auto const out = r.fixture.config.output_dir;
  auto const all = features_from_csv(slurp(out / "features.csv"));
  auto const params = fit(all);
  matrix const t = transform(all.values, params);
  bool const in_range = t.minCoeff() >= 0.0 && t.maxCoeff() <= 1.0;

  matrix const back = inverse_transform(t, params);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < back.size(); ++i) {
    auto const x = all.values.data()[i];
    worst = std::max(worst, std::abs(back.data()[i] - x) / std::max(1.0, std::abs(x)));
  }

  // Pooled fit versus the per-block extrema of separate per-city fits.
  std::map<std::string, std::vector<Eigen::Index>> by_city;
  for (std::size_t i = 0; i < all.size(); ++i) {
    by_city[all.rows[i].city_id].push_back(static_cast<Eigen::Index>(i));
  }
  norm_params combined{INFINITY, -INFINITY, INFINITY, -INFINITY};
  for (auto const& [city, idx] : by_city) {
    matrix part(static_cast<Eigen::Index>(idx.size()), feature_count);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      part.row(static_cast<Eigen::Index>(i)) = all.values.row(idx[i]);
    }
    auto const p = fit(part);
    combined.trips_min = std::min(combined.trips_min, p.trips_min);
    combined.trips_max = std::max(combined.trips_max, p.trips_max);
    combined.dirs_min = std::min(combined.dirs_min, p.dirs_min);
    combined.dirs_max = std::max(combined.dirs_max, p.dirs_max);
  }
  auto const stored = norm_params_from_text(slurp(out / "norm_params.txt"));
  bool const pooled = combined == params && stored == params;
  return {in_range && worst < 1e-9 && pooled,
          std::string{"range ["} + fmt(t.minCoeff()) + ", " + fmt(t.maxCoeff()) +
              "], inverse max rel error " + fmt(worst) + ", pooled fit " +
              (pooled ? "equals" : "differs from") + " combined per-city extrema"};
}

verdict gradient_check_criterion() {
  auto const t0 = clock_type::now();
  auto const model = init_model(2024);
  auto const batch = uniform_matrix(8, 34, 2025);
  auto const report = gradient_check(model, batch, 1e-5);
  auto const secs = seconds_since(t0);
  return {report.max_relative_error < 1e-4 && report.checked == model.parameter_count() &&
              secs < 10.0,
          std::to_string(report.checked) + " parameters, max relative error " +
              fmt(report.max_relative_error) + ", " + fmt(secs) + " s"};
}

verdict capacity() {
  auto const t0 = clock_type::now();
  auto const data = uniform_matrix(20, 34, 77);
  train_config cfg;  // default optimizer, rate, batch size and seed
  cfg.epochs = 2000;
  auto const result = train(data, cfg);
  auto const secs = seconds_since(t0);
  auto const final_loss = result.loss_history.back();
  // Loss after the last update, over all rows in one pass.
  auto const recon = detail::forward_batch(result.model, data).reconstruction;
  auto const after = loss(data, recon);
  return {after < 1e-3 && secs < 60.0,
          "loss " + fmt(after) + " (last epoch mean " + fmt(final_loss) +
              ", per-entry mean " + fmt(after / 34.0) + ") after 2000 epochs, " +
              fmt(secs) + " s"};
}

verdict ward_oracle() {
  auto const t0 = clock_type::now();
  std::mt19937_64 rng{606};
  std::normal_distribution<double> g;
  double worst = 0.0;
  int partition_failures = 0;
  for (int inst = 0; inst < 50; ++inst) {
    auto const n = static_cast<std::size_t>(2 + rng() % 11);
    matrix x(static_cast<Eigen::Index>(n), 64);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      x.data()[i] = g(rng);
    }
    auto const d = ward_agglomerate(x);
    auto const ref = reference_ward(x);
    std::vector<double> heights;
    for (auto const& m : d.merges) {
      heights.push_back(m.height);
    }
    std::sort(heights.begin(), heights.end());
    for (std::size_t i = 0; i < ref.size(); ++i) {
      worst = std::max(worst, std::abs(heights[i] - ref[i].height) / ref[i].height);
    }
    for (std::size_t k = 1; k <= n; ++k) {
      if (!same_partition(cut(d, k).labels, reference_partition(ref, n, k))) {
        ++partition_failures;
      }
    }
  }
  return {worst < 1e-9 && partition_failures == 0,
          "50 instances (N <= 12, d = 64), max relative height error " + fmt(worst) +
              ", " + std::to_string(partition_failures) + " cut disagreements, " +
              fmt(seconds_since(t0)) + " s"};
}

verdict cut_nesting() {
  auto& r = runs();
  auto const cuts = cuts_from_csv(slurp(r.fixture.config.output_dir / "cuts.csv"));
  auto const& k3 = cuts.labels.at(3);
  auto const& k9 = cuts.labels.at(9);
  std::set<int> const distinct3(k3.begin(), k3.end());
  std::set<int> const distinct9(k9.begin(), k9.end());
  bool const ok = refines(k9, k3) && distinct3.size() == 3 && distinct9.size() == 9;
  return {ok, std::to_string(k3.size()) + " regions, " +
                  std::to_string(distinct9.size()) + " k=9 clusters each inside one of " +
                  std::to_string(distinct3.size()) + " k=3 clusters"};
}

verdict typology_recovery() {
  auto& r = runs();
  std::size_t agree = 0;
  std::size_t total = 0;
  std::map<std::string, std::pair<double, std::size_t>> trips_by_name;
  for (auto const& rec : r.first.records) {
    auto const it = r.fixture.truth.find(rec.region);
    if (it == r.fixture.truth.end()) {
      continue;
    }
    ++total;
    agree += rec.typology_name == archetype_name(it->second) ? 1 : 0;
    double sum = 0.0;
    for (int h = 0; h < hours_per_block; ++h) {
      sum += rec.raw[static_cast<std::size_t>(h)];
    }
    auto& acc = trips_by_name[rec.typology_name];
    acc.first += sum;
    ++acc.second;
  }
  auto mean = [&](std::string const& n) {
    auto const it = trips_by_name.find(n);
    return it == trips_by_name.end() ? NAN : it->second.first / static_cast<double>(it->second.second);
  };
  double const s = mean("suburban"), m = mean("mid-city"), h = mean("hubs");
  double const rate = total == 0 ? 0.0 : static_cast<double>(agree) / static_cast<double>(total);
  bool const ordered = s < m && m < h;
  bool const ok = total == r.first.records.size() && rate >= 0.9 && ordered &&
                  r.first_seconds < 120.0;
  return {ok, std::to_string(agree) + "/" + std::to_string(total) +
                  " regions named after their planted archetype (" + fmt(100.0 * rate) +
                  "%), mean sum_trips suburban " + fmt(s) + " < mid-city " + fmt(m) +
                  " < hubs " + fmt(h) + ", full run " + fmt(r.first_seconds) + " s"};
}

verdict similarity_oracle() {
  std::mt19937_64 rng{909};
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> lat{49.0, 54.0}, lon{14.0, 24.0};
  std::vector<std::string> const cities{"a", "b", "c", "d", "e"};
  std::set<region_key> seen;
  std::vector<embedding> entries;
  while (entries.size() < 1000) {
    region_key key{cities[rng() % cities.size()], assign_cell(lat(rng), lon(rng))};
    if (!seen.insert(key).second) {
      continue;
    }
    vector v(64);
    for (auto& x : v) {
      x = g(rng);
    }
    entries.push_back({key, v});
  }
  embedding_index const index{entries};
  int mismatches = 0;
  for (int q = 0; q < 100; ++q) {
    auto const& query = entries[rng() % entries.size()];
    auto const k = static_cast<std::size_t>(1 + rng() % 20);
    std::vector<neighbor> scan;
    for (auto const& e : entries) {
      if (e.region == query.region) {
        continue;
      }
      double s2 = 0.0;
      for (Eigen::Index i = 0; i < 64; ++i) {
        double const d = query.values[i] - e.values[i];
        s2 += d * d;
      }
      scan.push_back({e.region, std::sqrt(s2)});
    }
    std::sort(scan.begin(), scan.end(), [](auto const& a, auto const& b) {
      return std::tie(a.distance, a.region) < std::tie(b.distance, b.region);
    });
    scan.resize(k);
    mismatches += index.nearest(query.region, k) == scan ? 0 : 1;
  }
  return {mismatches == 0, "100 queries over 1000 embeddings, " +
                               std::to_string(mismatches) + " differing result lists"};
}

verdict determinism() {
  auto& r = runs();
  auto const a = r.fixture.config.output_dir;
  auto const b = r.second_out;
  std::vector<std::string> differing;
  std::size_t compared = 0;
  for (auto const* f : {"embeddings.csv", "cuts.csv", "map_k3.geojson",
                        "map_k9.geojson", "map_features.geojson", "model.txt",
                        "features.csv", "dendrogram.csv"}) {
    ++compared;
    auto const x = slurp(a / f);
    if (x.empty() || x != slurp(b / f)) {
      differing.push_back(f);
    }
  }
  std::string detail = std::to_string(compared - differing.size()) + "/" +
                       std::to_string(compared) + " artifacts byte-identical across two runs";
  for (auto const& d : differing) {
    detail += "; differs: " + d;
  }
  return {differing.empty(), detail};
}

}  // namespace

int main() {
  std::array<std::pair<char const*, std::function<verdict()>>, 10> const criteria{{
      {"feature shape", feature_shape},
      {"counting oracle", counting_oracle},
      {"normalization contract", normalization_contract},
      {"gradient check", gradient_check_criterion},
      {"capacity", capacity},
      {"Ward oracle", ward_oracle},
      {"cut nesting", cut_nesting},
      {"typology recovery", typology_recovery},
      {"similarity oracle", similarity_oracle},
      {"determinism", determinism},
  }};
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    verdict v;
    try {
      v = criteria[i].second();
    } catch (std::exception const& e) {
      v = {false, std::string{"threw: "} + e.what()};
    }
    failures += v.pass ? 0 : 1;
    std::printf("[criterion %zu] %s %s: %s\n", i + 1, v.pass ? "PASS" : "FAIL",
                criteria[i].first, v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
