#pragma once

// Independent, deliberately naive implementations that the library is
// checked against. None of them calls the code under test except for H3
// cell lookup, which is an external contract.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "gtfs2vec/gtfs.hpp"
#include "gtfs2vec/matrix.hpp"
#include "gtfs2vec/regionizer.hpp"

namespace testing_support {

using namespace gtfs2vec;

// --- GTFS calendar and hourly counting -------------------------------------

inline bool service_runs(service_calendar const& c, calendar_date date) {
  for (auto const& ex : c.exceptions) {
    if (ex.date == date) {
      return ex.kind == exception_kind::added;
    }
  }
  if (!c.schedule) {
    return false;
  }
  std::chrono::sys_days const day{date};
  if (day < std::chrono::sys_days{c.schedule->start_date} ||
      day > std::chrono::sys_days{c.schedule->end_date}) {
    return false;
  }
  // iso_encoding: Monday = 1 .. Sunday = 7
  auto const wd = std::chrono::weekday{day}.iso_encoding() - 1;
  return c.schedule->weekdays[wd];
}

inline std::string strip(std::string const& s) {
  auto const b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) {
    return {};
  }
  auto const e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

struct brute_counts {
  std::array<std::uint32_t, 17> trips{};
  std::array<std::uint32_t, 17> dirs{};
};

// For every (region, hour) pair, walks all stop_times of the feed.
inline std::map<region_key, brute_counts> brute_force_features(
    feed_bundle const& feed, calendar_date date, int resolution = 8) {
  std::map<std::string, region_key> region_of;
  std::set<region_key> regions;
  for (auto const& s : feed.stops) {
    if (s.location_type != 0) {
      continue;
    }
    region_key k{feed.city_id, assign_cell(s.lat, s.lon, resolution)};
    region_of.emplace(s.stop_id, k);
    regions.insert(k);
  }
  std::map<region_key, brute_counts> out;
  for (auto const& region : regions) {
    brute_counts c;
    for (int h = 6; h <= 22; ++h) {
      std::set<std::string> heads;
      for (auto const& st : feed.stop_times) {
        auto const it = region_of.find(st.stop_id);
        if (it == region_of.end() || !(it->second == region)) {
          continue;
        }
        trip_record const* trip = nullptr;
        for (auto const& t : feed.trips) {
          if (t.trip_id == st.trip_id) {
            trip = &t;
          }
        }
        bool active = false;
        for (auto const& cal : feed.calendars) {
          if (cal.service_id == trip->service_id && service_runs(cal, date)) {
            active = true;
          }
        }
        if (!active || (st.departure_seconds / 3600) % 24 != h) {
          continue;
        }
        ++c.trips[static_cast<std::size_t>(h - 6)];
        heads.insert(strip(trip->headsign));
      }
      c.dirs[static_cast<std::size_t>(h - 6)] =
          static_cast<std::uint32_t>(heads.size());
    }
    out[region] = c;
  }
  return out;
}

// --- Ward reference ----------------------------------------------------------

struct reference_merge {
  std::set<std::size_t> members;  // leaves of the merged cluster
  double height{};
};

// Textbook O(N^3) agglomeration on a full distance matrix with the
// Lance-Williams update for Ward linkage; the globally closest pair is
// merged at every step.
inline std::vector<reference_merge> reference_ward(matrix const& x) {
  auto const n = static_cast<std::size_t>(x.rows());
  std::vector<std::vector<double>> d(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (Eigen::Index c = 0; c < x.cols(); ++c) {
        auto const diff = x(static_cast<Eigen::Index>(i), c) -
                          x(static_cast<Eigen::Index>(j), c);
        s += diff * diff;
      }
      d[i][j] = std::sqrt(s);
    }
  }
  std::vector<std::set<std::size_t>> members(n);
  std::vector<bool> alive(n, true);
  for (std::size_t i = 0; i < n; ++i) {
    members[i] = {i};
  }
  std::vector<reference_merge> merges;
  for (std::size_t step = 0; step + 1 < n; ++step) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (alive[i] && alive[j] && d[i][j] < best) {
          best = d[i][j];
          bi = i;
          bj = j;
        }
      }
    }
    auto const ni = static_cast<double>(members[bi].size());
    auto const nj = static_cast<double>(members[bj].size());
    for (std::size_t k = 0; k < n; ++k) {
      if (!alive[k] || k == bi || k == bj) {
        continue;
      }
      auto const nk = static_cast<double>(members[k].size());
      auto const v = ((nk + ni) * d[k][bi] * d[k][bi] +
                      (nk + nj) * d[k][bj] * d[k][bj] - nk * best * best) /
                     (nk + ni + nj);
      d[k][bi] = d[bi][k] = std::sqrt(std::max(v, 0.0));
    }
    members[bi].insert(members[bj].begin(), members[bj].end());
    alive[bj] = false;
    merges.push_back({members[bi], best});
  }
  return merges;
}

// Partition after applying the first n-k reference merges, as a label per
// leaf (label = smallest leaf of the cluster).
inline std::vector<std::size_t> reference_partition(
    std::vector<reference_merge> const& merges, std::size_t n, std::size_t k) {
  std::vector<std::size_t> label(n);
  for (std::size_t i = 0; i < n; ++i) {
    label[i] = i;
  }
  for (std::size_t m = 0; m < n - k; ++m) {
    auto const root = *merges[m].members.begin();
    for (auto const leaf : merges[m].members) {
      label[leaf] = root;
    }
  }
  return label;
}

// True when both labelings induce the same partition of the leaves.
template <typename A, typename B>
bool same_partition(std::vector<A> const& a, std::vector<B> const& b) {
  if (a.size() != b.size()) {
    return false;
  }
  std::map<A, B> fwd;
  std::map<B, A> back;
  for (std::size_t i = 0; i < a.size(); ++i) {
    auto [f, fi] = fwd.emplace(a[i], b[i]);
    auto [r, ri] = back.emplace(b[i], a[i]);
    if (f->second != b[i] || r->second != a[i]) {
      return false;
    }
  }
  return true;
}

// Every cluster of `fine` lies inside one cluster of `coarse`.
inline bool refines(std::vector<int> const& fine, std::vector<int> const& coarse) {
  std::map<int, int> parent;
  for (std::size_t i = 0; i < fine.size(); ++i) {
    auto [it, inserted] = parent.emplace(fine[i], coarse[i]);
    if (it->second != coarse[i]) {
      return false;
    }
  }
  return true;
}

}  // namespace testing_support
