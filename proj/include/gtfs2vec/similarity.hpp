#pragma once

// Exact nearest-neighbor search over region embeddings.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "gtfs2vec/autoencoder.hpp"
#include "gtfs2vec/clustering.hpp"
#include "gtfs2vec/error.hpp"

namespace gtfs2vec {

struct neighbor {
  region_key region;
  double distance{};

  friend bool operator==(neighbor const&, neighbor const&) = default;
};

struct search_filter {
  std::optional<std::set<std::string>> cities;  // only these cities
  bool exclude_same_city = false;
};

class embedding_index {
public:
  explicit embedding_index(std::vector<embedding> entries,
                           std::vector<std::string> typology = {})
      : entries_{std::move(entries)}, typology_{std::move(typology)} {
    if (!typology_.empty() && typology_.size() != entries_.size()) {
      throw shape_mismatch("typology labels do not match index size");
    }
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      if (!position_.emplace(entries_[i].region, i).second) {
        throw format_error("duplicate region in index: " +
                           entries_[i].region.str());
      }
      if (entries_[i].values.size() != entries_.front().values.size()) {
        throw shape_mismatch("embeddings of differing width in index");
      }
    }
  }

  std::vector<embedding> const& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }

  std::optional<std::size_t> find(region_key const& key) const {
    auto const it = position_.find(key);
    return it == position_.end() ? std::nullopt
                                 : std::optional<std::size_t>{it->second};
  }

  std::string const* typology(std::size_t i) const {
    return typology_.empty() ? nullptr : &typology_[i];
  }

  // The k closest regions to `query` (never the query itself), ascending
  // by distance, ties by (city_id, cell).
  std::vector<neighbor> nearest(region_key const& query, std::size_t k,
                                search_filter const& filter = {}) const {
    if (k < 1) {
      throw invalid_k("k must be >= 1");
    }
    auto const q = find(query);
    if (!q) {
      throw unknown_region("region not in index: " + query.str());
    }
    auto const& qv = entries_[*q].values;
    std::vector<neighbor> candidates;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      auto const& e = entries_[i];
      if (i == *q) {
        continue;
      }
      if (filter.cities && !filter.cities->contains(e.region.city_id)) {
        continue;
      }
      if (filter.exclude_same_city && e.region.city_id == query.city_id) {
        continue;
      }
      candidates.push_back({e.region, euclidean_distance(qv, e.values)});
    }
    if (candidates.empty()) {
      throw empty_candidate_set("no candidate regions left after filtering");
    }
    return take_smallest(std::move(candidates), k);
  }

  // The m members of `cluster_id` closest to the cluster's centroid.
  // `labels` is parallel to the index entries.
  std::vector<region_key> cluster_center_exemplars(cluster_cut const& labels,
                                                   int cluster_id,
                                                   std::size_t m) const {
    if (labels.labels.size() != entries_.size()) {
      throw shape_mismatch("cut covers " + std::to_string(labels.labels.size()) +
                           " regions, index has " +
                           std::to_string(entries_.size()));
    }
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      if (labels.labels[i] == cluster_id) {
        members.push_back(i);
      }
    }
    if (members.empty()) {
      throw unknown_cluster("cluster " + std::to_string(cluster_id) +
                            " has no members");
    }
    vector centroid = vector::Zero(entries_[members.front()].values.size());
    for (auto const i : members) {
      centroid += entries_[i].values;
    }
    centroid /= static_cast<double>(members.size());
    std::vector<neighbor> ranked;
    for (auto const i : members) {
      ranked.push_back(
          {entries_[i].region, euclidean_distance(centroid, entries_[i].values)});
    }
    std::vector<region_key> out;
    for (auto& n : take_smallest(std::move(ranked), m)) {
      out.push_back(std::move(n.region));
    }
    return out;
  }

private:
  static std::vector<neighbor> take_smallest(std::vector<neighbor> v,
                                             std::size_t k) {
    auto const less = [](neighbor const& a, neighbor const& b) {
      if (a.distance != b.distance) {
        return a.distance < b.distance;
      }
      return a.region < b.region;
    };
    k = std::min(k, v.size());
    std::partial_sort(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k),
                      v.end(), less);
    v.resize(k);
    return v;
  }

  std::vector<embedding> entries_;
  std::vector<std::string> typology_;
  std::map<region_key, std::size_t> position_;
};

inline std::string neighbors_to_csv(region_key const& query,
                                    std::vector<neighbor> const& result) {
  std::string out = "rank,query,city_id,cell,distance\n";
  for (std::size_t i = 0; i < result.size(); ++i) {
    out += std::to_string(i + 1) + ',';
    detail::append_csv_field(out, query.str());
    out += ',';
    detail::append_csv_field(out, result[i].region.city_id);
    out += ',' + result[i].region.cell.str() + ',';
    detail::append_double(out, result[i].distance);
    out += '\n';
  }
  return out;
}

}  // namespace gtfs2vec
