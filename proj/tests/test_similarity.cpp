#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "gtfs2vec/similarity.hpp"

using namespace gtfs2vec;

namespace {

std::vector<region_key> distinct_keys(std::size_t n, std::uint64_t seed,
                                      std::vector<std::string> const& cities) {
  std::mt19937_64 rng{seed};
  std::uniform_real_distribution<double> lat{50.0, 50.6}, lon{19.0, 19.9};
  std::set<region_key> seen;
  std::vector<region_key> out;
  while (out.size() < n) {
    region_key k{cities[rng() % cities.size()], assign_cell(lat(rng), lon(rng))};
    if (seen.insert(k).second) {
      out.push_back(k);
    }
  }
  return out;
}

std::vector<embedding> random_index(std::size_t n, std::uint64_t seed,
                                    int dims = 64) {
  auto const keys = distinct_keys(n, seed, {"a", "b", "c", "d"});
  std::mt19937_64 rng{seed + 1};
  std::normal_distribution<double> g;
  std::vector<embedding> out;
  for (auto const& k : keys) {
    vector v(dims);
    for (auto& x : v) {
      x = g(rng);
    }
    out.push_back({k, v});
  }
  return out;
}

// Independent scan: full sort with the documented order.
std::vector<neighbor> brute_force(std::vector<embedding> const& entries,
                                  region_key const& q, std::size_t k,
                                  search_filter const& f = {}) {
  vector const* qv = nullptr;
  for (auto const& e : entries) {
    if (e.region == q) {
      qv = &e.values;
    }
  }
  std::vector<neighbor> all;
  for (auto const& e : entries) {
    if (e.region == q || (f.cities && !f.cities->contains(e.region.city_id)) ||
        (f.exclude_same_city && e.region.city_id == q.city_id)) {
      continue;
    }
    double s = 0.0;
    for (Eigen::Index i = 0; i < qv->size(); ++i) {
      s += ((*qv)[i] - e.values[i]) * ((*qv)[i] - e.values[i]);
    }
    all.push_back({e.region, std::sqrt(s)});
  }
  std::stable_sort(all.begin(), all.end(), [](auto const& a, auto const& b) {
    return std::tie(a.distance, a.region) < std::tie(b.distance, b.region);
  });
  all.resize(std::min(all.size(), k));
  return all;
}

}  // namespace

TEST(Nearest, ExactDuplicateAtDistanceZero) {
  auto entries = random_index(20, 1);
  entries[7].values = entries[3].values;
  embedding_index const idx{entries};
  auto const r = idx.nearest(entries[3].region, 1);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].region, entries[7].region);
  EXPECT_EQ(r[0].distance, 0.0);
}

TEST(Nearest, KLargerThanCandidatesReturnsAllSorted) {
  auto const entries = random_index(6, 2);
  embedding_index const idx{entries};
  auto const r = idx.nearest(entries[0].region, 50);
  ASSERT_EQ(r.size(), 5u);
  EXPECT_TRUE(std::is_sorted(r.begin(), r.end(), [](auto const& a, auto const& b) {
    return a.distance < b.distance;
  }));
}

TEST(Nearest, TiesBrokenByCityThenCell) {
  std::vector<embedding> entries;
  auto const keys = distinct_keys(5, 3, {"x"});
  vector zero = vector::Zero(2);
  vector one(2);
  one << 1, 0;
  vector other(2);
  other << 0, -1;
  entries.push_back({keys[0], zero});
  entries.push_back({{"z", keys[1].cell}, one});
  entries.push_back({{"b", keys[2].cell}, other});
  entries.push_back({{"b", keys[1].cell}, one});
  embedding_index const idx{entries};
  auto const r = idx.nearest(keys[0], 3);
  std::vector<region_key> expected{{"b", keys[1].cell}, {"b", keys[2].cell},
                                   {"z", keys[1].cell}};
  if (expected[1] < expected[0]) {
    std::swap(expected[0], expected[1]);
  }
  ASSERT_EQ(r.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(r[i].region, expected[i]);
    EXPECT_EQ(r[i].distance, 1.0);
  }
}

TEST(Nearest, MatchesBruteForceScan) {
  auto const entries = random_index(1000, 4);
  embedding_index const idx{entries};
  std::mt19937_64 rng{5};
  for (int q = 0; q < 100; ++q) {
    auto const& query = entries[rng() % entries.size()].region;
    auto const k = 1 + rng() % 25;
    EXPECT_EQ(idx.nearest(query, k), brute_force(entries, query, k));
  }
}

TEST(Nearest, FiltersAndQueryExclusion) {
  auto const entries = random_index(300, 6);
  embedding_index const idx{entries};
  std::mt19937_64 rng{7};
  for (int q = 0; q < 30; ++q) {
    auto const& query = entries[rng() % entries.size()].region;
    search_filter f;
    f.exclude_same_city = true;
    auto const cross = idx.nearest(query, 10, f);
    EXPECT_EQ(cross, brute_force(entries, query, 10, f));
    for (auto const& n : cross) {
      EXPECT_NE(n.region.city_id, query.city_id);
    }
    f = {};
    f.cities = std::set<std::string>{"a", "c"};
    auto const only = idx.nearest(query, 10, f);
    EXPECT_EQ(only, brute_force(entries, query, 10, f));
    for (auto const& n : only) {
      EXPECT_TRUE(n.region.city_id == "a" || n.region.city_id == "c");
      EXPECT_NE(n.region, query);
      vector const* v = nullptr;
      for (auto const& e : entries) {
        if (e.region == n.region) {
          v = &e.values;
        }
      }
      EXPECT_EQ(n.distance, euclidean_distance(entries[*idx.find(query)].values, *v));
    }
  }
}

TEST(Nearest, Errors) {
  auto const entries = random_index(10, 8);
  embedding_index const idx{entries};
  EXPECT_THROW(idx.nearest(entries[0].region, 0), invalid_k);
  EXPECT_THROW(idx.nearest({"nowhere", entries[0].region.cell}, 1), unknown_region);
  search_filter f;
  f.cities = std::set<std::string>{"nowhere"};
  EXPECT_THROW(idx.nearest(entries[0].region, 1, f), empty_candidate_set);
  auto dup = entries;
  dup.push_back(entries[0]);
  EXPECT_THROW(embedding_index{dup}, format_error);
  EXPECT_THROW((embedding_index{entries, {"one"}}), shape_mismatch);
}

TEST(Exemplars, SingletonAndSymmetricPair) {
  auto entries = random_index(4, 9, 2);
  entries[1].values << 1, 0;
  entries[2].values << -1, 0;
  embedding_index const idx{entries};
  cluster_cut const c{3, {0, 1, 1, 2}};
  EXPECT_EQ(idx.cluster_center_exemplars(c, 2, 1),
            (std::vector<region_key>{entries[3].region}));
  auto const pair = idx.cluster_center_exemplars(c, 1, 2);
  ASSERT_EQ(pair.size(), 2u);
  EXPECT_LT(pair[0], pair[1]);
  EXPECT_THROW(idx.cluster_center_exemplars(c, 5, 1), unknown_cluster);
  EXPECT_THROW(idx.cluster_center_exemplars(cluster_cut{1, {0}}, 0, 1), shape_mismatch);
}

TEST(Exemplars, MatchBruteForceCentroidSort) {
  auto const entries = random_index(120, 10);
  std::vector<int> labels(120);
  for (std::size_t i = 0; i < 120; ++i) {
    labels[i] = i < 50 ? 0 : 1;
  }
  embedding_index const idx{entries};
  vector centroid = vector::Zero(64);
  for (std::size_t i = 0; i < 50; ++i) {
    centroid += entries[i].values;
  }
  centroid /= 50.0;
  std::vector<neighbor> ranked;
  for (std::size_t i = 0; i < 50; ++i) {
    ranked.push_back({entries[i].region, euclidean_distance(centroid, entries[i].values)});
  }
  std::sort(ranked.begin(), ranked.end(), [](auto const& a, auto const& b) {
    return std::tie(a.distance, a.region) < std::tie(b.distance, b.region);
  });
  auto const got = idx.cluster_center_exemplars(cluster_cut{2, labels}, 0, 5);
  ASSERT_EQ(got.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(got[i], ranked[i].region);
  }
}

TEST(NeighborsCsv, Format) {
  region_key const q{"a", cell_id::parse("881e20408bfffff")};
  std::vector<neighbor> const r{{{"b", cell_id::parse("881e204089fffff")}, 0.5}};
  EXPECT_EQ(neighbors_to_csv(q, r),
            "rank,query,city_id,cell,distance\n"
            "1,a:881e20408bfffff,b,881e204089fffff,0.5\n");
}
