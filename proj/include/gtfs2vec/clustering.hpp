#pragma once

// Agglomerative clustering with Ward's minimum-variance linkage over
// euclidean distance, dendrogram cuts, and cluster summaries.
//
// Heights follow the convention in which two singletons merge at their
// euclidean distance: d(A, B) = sqrt(2 |A||B| / (|A| + |B|)) * |c_A - c_B|,
// the value the Lance-Williams Ward recurrence produces.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "gtfs2vec/detail/csv.hpp"
#include "gtfs2vec/detail/io.hpp"
#include "gtfs2vec/error.hpp"
#include "gtfs2vec/features.hpp"
#include "gtfs2vec/matrix.hpp"

namespace gtfs2vec {

inline double euclidean_distance(std::span<double const> x,
                                 std::span<double const> y) {
  if (x.size() != y.size()) {
    throw shape_mismatch("euclidean_distance: lengths " +
                         std::to_string(x.size()) + " and " +
                         std::to_string(y.size()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    auto const d = x[i] - y[i];
    s += d * d;
  }
  return std::sqrt(s);
}

inline double euclidean_distance(vector const& x, vector const& y) {
  return euclidean_distance(std::span<double const>{x.data(), static_cast<std::size_t>(x.size())},
                            std::span<double const>{y.data(), static_cast<std::size_t>(y.size())});
}

// Node ids: leaves are 0..leaf_count-1, merge i creates node leaf_count+i.
struct merge_step {
  std::size_t left{};   // smaller node id
  std::size_t right{};  // larger node id
  double height{};
  std::size_t size{};

  friend bool operator==(merge_step const&, merge_step const&) = default;
};

struct dendrogram {
  std::vector<merge_step> merges;  // nondecreasing height
  std::size_t leaf_count{};

  friend bool operator==(dendrogram const&, dendrogram const&) = default;
};

namespace detail {

class union_find {
public:
  explicit union_find(std::size_t n) : parent_(n) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }

  std::size_t find(std::size_t x) {
    auto root = x;
    while (parent_[root] != root) {
      root = parent_[root];
    }
    while (parent_[x] != root) {
      x = std::exchange(parent_[x], root);
    }
    return root;
  }

  // Returns the surviving root.
  std::size_t unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) {
      return a;
    }
    if (b < a) {
      std::swap(a, b);
    }
    parent_[b] = a;
    return a;
  }

private:
  std::vector<std::size_t> parent_;
};

}  // namespace detail

// Nearest-neighbor chain: O(N^2 d) time, O(N d) memory; Ward distances are
// computed on the fly from cluster centroids and sizes instead of being
// stored in an N x N matrix.
inline dendrogram ward_agglomerate(matrix const& points) {
  auto const n = static_cast<std::size_t>(points.rows());
  if (n < 2) {
    throw degenerate_input("Ward clustering needs at least 2 points, got " +
                           std::to_string(n));
  }
  if (!points.allFinite()) {
    throw degenerate_input("Ward clustering input contains non-finite values");
  }

  // Cluster state lives in the slot of its smallest leaf.
  matrix centroid = points;
  std::vector<double> size(n, 1.0);
  std::vector<std::size_t> active(n);
  std::iota(active.begin(), active.end(), std::size_t{0});

  auto ward_sq = [&](std::size_t a, std::size_t b) {
    auto const f = 2.0 * size[a] * size[b] / (size[a] + size[b]);
    return f * (centroid.row(static_cast<Eigen::Index>(a)) -
                centroid.row(static_cast<Eigen::Index>(b)))
                   .squaredNorm();
  };

  struct raw_merge {
    std::size_t a, b;  // slots == smallest leaf of each cluster
    double height;
  };
  std::vector<raw_merge> raw;
  raw.reserve(n - 1);

  std::vector<std::size_t> chain;
  chain.reserve(n);
  while (raw.size() < n - 1) {
    if (chain.empty()) {
      chain.push_back(active.front());
    }
    std::size_t a{}, b{};
    double best{};
    while (true) {
      a = chain.back();
      bool const has_prev = chain.size() >= 2;
      std::size_t candidate = has_prev ? chain[chain.size() - 2] : a;
      best = has_prev ? ward_sq(a, candidate)
                      : std::numeric_limits<double>::infinity();
      // Strict comparison: ties keep the chain predecessor, otherwise the
      // smallest slot.
      for (auto const s : active) {
        if (s == a) {
          continue;
        }
        auto const d = ward_sq(a, s);
        if (d < best) {
          best = d;
          candidate = s;
        }
      }
      if (has_prev && candidate == chain[chain.size() - 2]) {
        b = candidate;
        break;
      }
      chain.push_back(candidate);
    }
    chain.pop_back();
    chain.pop_back();

    auto const keep = std::min(a, b);
    auto const drop = std::max(a, b);
    raw.push_back({keep, drop, std::sqrt(best)});
    auto const total = size[keep] + size[drop];
    centroid.row(static_cast<Eigen::Index>(keep)) =
        (size[keep] * centroid.row(static_cast<Eigen::Index>(keep)) +
         size[drop] * centroid.row(static_cast<Eigen::Index>(drop))) /
        total;
    size[keep] = total;
    active.erase(std::find(active.begin(), active.end(), drop));
  }

  // Chain order is not height order; sort and assign node ids.
  std::stable_sort(raw.begin(), raw.end(), [](auto const& x, auto const& y) {
    return x.height < y.height;
  });
  dendrogram out;
  out.leaf_count = n;
  out.merges.reserve(n - 1);
  detail::union_find uf{n};
  std::vector<std::size_t> node_of_root(n);
  std::vector<std::size_t> size_of_root(n, 1);
  std::iota(node_of_root.begin(), node_of_root.end(), std::size_t{0});
  for (std::size_t i = 0; i < raw.size(); ++i) {
    auto const ra = uf.find(raw[i].a);
    auto const rb = uf.find(raw[i].b);
    auto const na = node_of_root[ra];
    auto const nb = node_of_root[rb];
    auto const merged_size = size_of_root[ra] + size_of_root[rb];
    out.merges.push_back(merge_step{std::min(na, nb), std::max(na, nb),
                                    raw[i].height, merged_size});
    auto const root = uf.unite(ra, rb);
    node_of_root[root] = n + i;
    size_of_root[root] = merged_size;
  }
  return out;
}

struct cluster_cut {
  std::size_t k{};
  // Per leaf, 0..k-1; 0 is the largest cluster (ties: smallest leaf index).
  std::vector<int> labels;

  friend bool operator==(cluster_cut const&, cluster_cut const&) = default;
};

// Undoes the last k-1 merges.
inline cluster_cut cut(dendrogram const& tree, std::size_t k) {
  auto const n = tree.leaf_count;
  if (k < 1 || k > n) {
    throw invalid_k("cut k must be in [1, " + std::to_string(n) + "], got " +
                    std::to_string(k));
  }
  if (tree.merges.size() + 1 != n) {
    throw format_error("dendrogram has " + std::to_string(tree.merges.size()) +
                       " merges for " + std::to_string(n) + " leaves");
  }
  // Any leaf of each node serves as its union-find handle.
  std::vector<std::size_t> leaf_of_node(n + tree.merges.size());
  std::iota(leaf_of_node.begin(), leaf_of_node.begin() + static_cast<std::ptrdiff_t>(n),
            std::size_t{0});
  detail::union_find uf{n};
  for (std::size_t i = 0; i < tree.merges.size(); ++i) {
    auto const& m = tree.merges[i];
    if (m.left >= n + i || m.right >= n + i) {
      throw format_error("dendrogram merge " + std::to_string(i) +
                         " references a node not yet created");
    }
    leaf_of_node[n + i] = leaf_of_node[m.left];
    if (i < n - k) {
      uf.unite(leaf_of_node[m.left], leaf_of_node[m.right]);
    }
  }

  struct group {
    std::size_t root, count, first_leaf;
  };
  std::map<std::size_t, group> groups;
  for (std::size_t leaf = 0; leaf < n; ++leaf) {
    auto const r = uf.find(leaf);
    auto [it, inserted] = groups.try_emplace(r, group{r, 0, leaf});
    ++it->second.count;
  }
  std::vector<group> ordered;
  for (auto const& [root, g] : groups) {
    ordered.push_back(g);
  }
  std::sort(ordered.begin(), ordered.end(), [](auto const& x, auto const& y) {
    return std::tie(y.count, x.first_leaf) < std::tie(x.count, y.first_leaf);
  });
  std::map<std::size_t, int> label_of_root;
  for (std::size_t i = 0; i < ordered.size(); ++i) {
    label_of_root[ordered[i].root] = static_cast<int>(i);
  }
  cluster_cut c;
  c.k = k;
  c.labels.resize(n);
  for (std::size_t leaf = 0; leaf < n; ++leaf) {
    c.labels[leaf] = label_of_root.at(uf.find(leaf));
  }
  return c;
}

struct cluster_summary {
  int cluster_id{};
  std::size_t region_count{};
  double mean_sum_trips{};
  double mean_directions_whole_day{};  // mean of the summed 17 hourly counts
};

// Means over raw (unnormalized) features, one entry per cluster id.
inline std::vector<cluster_summary> summarize_clusters(cluster_cut const& c,
                                                       matrix const& raw) {
  if (static_cast<std::size_t>(raw.rows()) != c.labels.size()) {
    throw shape_mismatch("cut covers " + std::to_string(c.labels.size()) +
                         " regions, feature matrix has " +
                         std::to_string(raw.rows()));
  }
  if (raw.cols() != feature_count) {
    throw shape_mismatch("expected " + std::to_string(feature_count) +
                         " feature columns");
  }
  std::vector<cluster_summary> out(c.k);
  for (std::size_t i = 0; i < c.k; ++i) {
    out[i].cluster_id = static_cast<int>(i);
  }
  for (std::size_t r = 0; r < c.labels.size(); ++r) {
    auto& s = out[static_cast<std::size_t>(c.labels[r])];
    auto const row = raw.row(static_cast<Eigen::Index>(r));
    ++s.region_count;
    s.mean_sum_trips += row.head(hours_per_block).sum();
    s.mean_directions_whole_day += row.tail(hours_per_block).sum();
  }
  for (auto& s : out) {
    if (s.region_count > 0) {
      s.mean_sum_trips /= static_cast<double>(s.region_count);
      s.mean_directions_whole_day /= static_cast<double>(s.region_count);
    }
  }
  return out;
}

inline constexpr std::array<std::string_view, 3> typology_names = {
    "suburban", "mid-city", "hubs"};

// Names the three first-level clusters by ascending mean_sum_trips
// (ties: mean_directions_whole_day, then cluster id).
inline std::map<int, std::string> assign_typology(
    cluster_cut const& k3, std::vector<cluster_summary> const& summaries) {
  if (k3.k != 3) {
    throw invalid_k("typology naming needs the k=3 cut, got k=" +
                    std::to_string(k3.k));
  }
  if (summaries.size() != 3) {
    throw shape_mismatch("typology naming needs 3 cluster summaries");
  }
  auto order = summaries;
  std::sort(order.begin(), order.end(), [](auto const& a, auto const& b) {
    return std::tie(a.mean_sum_trips, a.mean_directions_whole_day,
                    a.cluster_id) < std::tie(b.mean_sum_trips,
                                             b.mean_directions_whole_day,
                                             b.cluster_id);
  });
  std::map<int, std::string> names;
  for (std::size_t i = 0; i < order.size(); ++i) {
    names[order[i].cluster_id] = std::string{typology_names[i]};
  }
  return names;
}

// --- persistence ---

inline std::string dendrogram_to_csv(dendrogram const& d) {
  std::string out = "step,left,right,height,size\n";
  for (std::size_t i = 0; i < d.merges.size(); ++i) {
    auto const& m = d.merges[i];
    out += std::to_string(i) + ',' + std::to_string(m.left) + ',' +
           std::to_string(m.right) + ',';
    detail::append_double(out, m.height);
    out += ',' + std::to_string(m.size) + '\n';
  }
  return out;
}

inline dendrogram dendrogram_from_csv(std::string_view text) {
  detail::csv_reader r{text, "dendrogram"};
  auto const left = r.required_column("left");
  auto const right = r.required_column("right");
  auto const height = r.required_column("height");
  auto const size = r.required_column("size");
  dendrogram d;
  detail::csv_row row;
  while (r.next(row)) {
    try {
      d.merges.push_back(merge_step{
          detail::parse_number_or_throw<std::size_t>(row.fields[left], "left"),
          detail::parse_number_or_throw<std::size_t>(row.fields[right], "right"),
          detail::parse_number_or_throw<double>(row.fields[height], "height"),
          detail::parse_number_or_throw<std::size_t>(row.fields[size], "size")});
    } catch (error const& e) {
      throw malformed_row("dendrogram", row.line, e.what());
    }
  }
  d.leaf_count = d.merges.size() + 1;
  return d;
}

}  // namespace gtfs2vec
