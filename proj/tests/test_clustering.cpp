#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "gtfs2vec/clustering.hpp"
#include "support/oracles.hpp"

using namespace gtfs2vec;
using namespace testing_support;

namespace {

matrix random_points(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
  std::mt19937_64 rng{seed};
  std::normal_distribution<double> g;
  matrix m(n, d);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    m.data()[i] = g(rng);
  }
  return m;
}

matrix rows(std::initializer_list<std::initializer_list<double>> r) {
  matrix m(static_cast<Eigen::Index>(r.size()),
           static_cast<Eigen::Index>(r.begin()->size()));
  Eigen::Index i = 0;
  for (auto const& row : r) {
    Eigen::Index j = 0;
    for (auto const v : row) {
      m(i, j++) = v;
    }
    ++i;
  }
  return m;
}

std::vector<double> sorted_heights(dendrogram const& d) {
  std::vector<double> h;
  for (auto const& m : d.merges) {
    h.push_back(m.height);
  }
  std::sort(h.begin(), h.end());
  return h;
}

std::vector<std::set<std::size_t>> partition_sets(std::vector<int> const& labels) {
  std::map<int, std::set<std::size_t>> groups;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    groups[labels[i]].insert(i);
  }
  std::vector<std::set<std::size_t>> out;
  for (auto& [l, s] : groups) {
    out.push_back(s);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST(EuclideanDistance, BasicsAndMetricProperties) {
  vector a(2), b(2);
  a << 0, 0;
  b << 3, 4;
  EXPECT_EQ(euclidean_distance(a, b), 5.0);
  EXPECT_EQ(euclidean_distance(b, b), 0.0);
  EXPECT_EQ(euclidean_distance(a, b), euclidean_distance(b, a));
  EXPECT_THROW(euclidean_distance(a, vector::Zero(3)), shape_mismatch);
  auto const p = random_points(300, 8, 1);
  for (Eigen::Index i = 0; i + 2 < p.rows(); i += 3) {
    vector const x = p.row(i).transpose();
    vector const y = p.row(i + 1).transpose();
    vector const z = p.row(i + 2).transpose();
    EXPECT_LE(euclidean_distance(x, z),
              euclidean_distance(x, y) + euclidean_distance(y, z) + 1e-12);
  }
}

TEST(Ward, TwoPointsMergeAtTheirDistance) {
  auto const d = ward_agglomerate(rows({{0, 0}, {3, 4}}));
  ASSERT_EQ(d.merges.size(), 1u);
  EXPECT_EQ(d.merges[0], (merge_step{0, 1, 5.0, 2}));
  EXPECT_EQ(d.leaf_count, 2u);
}

TEST(Ward, CollinearPoints) {
  auto const d = ward_agglomerate(rows({{10}, {0}, {1}}));
  ASSERT_EQ(d.merges.size(), 2u);
  EXPECT_EQ(d.merges[0].left, 1u);
  EXPECT_EQ(d.merges[0].right, 2u);
  EXPECT_EQ(d.merges[1].left, 0u);
  EXPECT_EQ(d.merges[1].right, 3u);
  EXPECT_EQ(d.merges[1].size, 3u);
  // sqrt(2 * 1 * 2 / 3) * |10 - 0.5|
  EXPECT_NEAR(d.merges[1].height, std::sqrt(4.0 / 3.0) * 9.5, 1e-12);
}

TEST(Ward, MatchesFrozenScipyLinkage) {
  // scipy.cluster.hierarchy.linkage(X, "ward") and fcluster(Z, 3, "maxclust").
  auto const x = rows({{0, 0}, {0, 1}, {4, 0}, {4, 1.5}, {10, 0}, {10.5, 0.5}, {2, 7}});
  std::vector<merge_step> const expected{
      {4, 5, 0.7071067811865476, 2}, {0, 1, 1.0, 2},
      {2, 3, 1.5, 2},                {8, 9, 5.667892024377317, 4},
      {6, 10, 8.063808033429368, 5}, {7, 11, 14.221211521627021, 7}};
  auto const d = ward_agglomerate(x);
  ASSERT_EQ(d.merges.size(), expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) {
    EXPECT_EQ(d.merges[i].left, expected[i].left) << i;
    EXPECT_EQ(d.merges[i].right, expected[i].right) << i;
    EXPECT_EQ(d.merges[i].size, expected[i].size) << i;
    EXPECT_NEAR(d.merges[i].height, expected[i].height, 1e-12 * expected[i].height);
  }
  std::vector<int> const scipy_labels{2, 2, 2, 2, 1, 1, 3};
  EXPECT_TRUE(same_partition(cut(d, 3).labels, scipy_labels));
}

TEST(Ward, MatchesReferenceOnRandomInstances) {
  std::mt19937_64 rng{99};
  for (int inst = 0; inst < 50; ++inst) {
    auto const n = static_cast<Eigen::Index>(2 + rng() % 11);
    auto const x = random_points(n, 64, rng());
    auto const d = ward_agglomerate(x);
    auto const ref = reference_ward(x);
    auto const got = sorted_heights(d);
    ASSERT_EQ(got.size(), ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) {
      EXPECT_NEAR(got[i], ref[i].height, 1e-9 * ref[i].height) << "instance " << inst;
    }
    for (std::size_t k = 1; k <= static_cast<std::size_t>(n); ++k) {
      EXPECT_TRUE(same_partition(cut(d, k).labels,
                                 reference_partition(ref, static_cast<std::size_t>(n), k)))
          << "instance " << inst << " k " << k;
    }
  }
}

TEST(Ward, DendrogramInvariants) {
  auto const x = random_points(200, 16, 5);
  auto const d = ward_agglomerate(x);
  ASSERT_EQ(d.merges.size(), 199u);
  std::vector<std::size_t> size(200, 1);
  for (std::size_t i = 0; i < d.merges.size(); ++i) {
    auto const& m = d.merges[i];
    EXPECT_LT(m.left, m.right);
    EXPECT_LT(m.right, 200 + i);
    EXPECT_EQ(m.size, size[m.left] + size[m.right]);
    size.push_back(m.size);
    if (i > 0) {
      EXPECT_GE(m.height, d.merges[i - 1].height);
    }
  }
  EXPECT_EQ(d.merges.back().size, 200u);
}

TEST(Ward, PermutationInvariance) {
  auto const x = random_points(60, 8, 6);
  std::vector<Eigen::Index> perm(60);
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  std::mt19937_64 rng{7};
  std::shuffle(perm.begin(), perm.end(), rng);
  matrix y(60, 8);
  for (Eigen::Index i = 0; i < 60; ++i) {
    y.row(i) = x.row(perm[static_cast<std::size_t>(i)]);
  }
  auto const dx = ward_agglomerate(x);
  auto const dy = ward_agglomerate(y);
  auto const hx = sorted_heights(dx);
  auto const hy = sorted_heights(dy);
  for (std::size_t i = 0; i < hx.size(); ++i) {
    EXPECT_NEAR(hx[i], hy[i], 1e-9 * hx[i]);
  }
  for (std::size_t k : {2u, 3u, 9u, 20u}) {
    auto const cx = cut(dx, k).labels;
    auto const cy = cut(dy, k).labels;
    std::vector<int> back(60);
    for (std::size_t i = 0; i < 60; ++i) {
      back[static_cast<std::size_t>(perm[i])] = cy[i];
    }
    EXPECT_EQ(partition_sets(cx), partition_sets(back)) << "k " << k;
  }
}

TEST(Ward, DuplicatePointsAndTiesAreDeterministic) {
  auto const x = rows({{1, 1}, {1, 1}, {1, 1}, {5, 5}, {5, 5}});
  auto const a = ward_agglomerate(x);
  EXPECT_EQ(a, ward_agglomerate(x));
  EXPECT_EQ(a.merges[0], (merge_step{0, 1, 0.0, 2}));
  EXPECT_EQ(cut(a, 2).labels, (std::vector<int>{0, 0, 0, 1, 1}));
}

TEST(Ward, Errors) {
  EXPECT_THROW(ward_agglomerate(matrix::Zero(1, 3)), degenerate_input);
  matrix bad = matrix::Zero(3, 2);
  bad(1, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(ward_agglomerate(bad), degenerate_input);
}

TEST(Cut, ExtremesAndLabelOrder) {
  auto const d = ward_agglomerate(random_points(30, 4, 8));
  auto const all = cut(d, 30);
  EXPECT_EQ(std::set<int>(all.labels.begin(), all.labels.end()).size(), 30u);
  auto const one = cut(d, 1);
  EXPECT_TRUE(std::all_of(one.labels.begin(), one.labels.end(),
                          [](int l) { return l == 0; }));
  for (std::size_t k = 1; k <= 30; ++k) {
    auto const c = cut(d, k);
    std::vector<std::size_t> count(k, 0);
    for (auto const l : c.labels) {
      ASSERT_GE(l, 0);
      ASSERT_LT(static_cast<std::size_t>(l), k);
      ++count[static_cast<std::size_t>(l)];
    }
    for (std::size_t i = 0; i < k; ++i) {
      EXPECT_GE(count[i], 1u);
      if (i > 0) {
        EXPECT_GE(count[i - 1], count[i]);
      }
    }
  }
  EXPECT_THROW(cut(d, 0), invalid_k);
  EXPECT_THROW(cut(d, 31), invalid_k);
}

TEST(Cut, NestedAcrossLevels) {
  auto const d = ward_agglomerate(random_points(120, 10, 9));
  EXPECT_TRUE(refines(cut(d, 9).labels, cut(d, 3).labels));
  for (std::size_t k = 2; k < 40; ++k) {
    EXPECT_TRUE(refines(cut(d, k + 1).labels, cut(d, k).labels)) << k;
  }
}

TEST(Summaries, MeansOverRawFeatures) {
  matrix raw = matrix::Zero(3, feature_count);
  raw.row(0).head(hours_per_block).setConstant(1.0);  // sum_trips 17
  raw(1, 0) = 10;
  raw(2, 0) = 30;
  raw(1, 17) = 2;
  raw(2, 20) = 4;
  cluster_cut const c{2, {0, 1, 1}};
  auto const s = summarize_clusters(c, raw);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].region_count, 1u);
  EXPECT_EQ(s[0].mean_sum_trips, 17.0);
  EXPECT_EQ(s[1].region_count, 2u);
  EXPECT_EQ(s[1].mean_sum_trips, 20.0);
  EXPECT_EQ(s[1].mean_directions_whole_day, 3.0);
  EXPECT_THROW(summarize_clusters(c, matrix::Zero(2, feature_count)), shape_mismatch);
}

TEST(Typology, OrderedByMeanTrips) {
  cluster_cut const c{3, {0, 0, 1, 2}};
  std::vector<cluster_summary> const s{{0, 2, 80, 8}, {1, 1, 400, 30}, {2, 1, 5, 1}};
  auto const names = assign_typology(c, s);
  EXPECT_EQ(names.at(0), "mid-city");
  EXPECT_EQ(names.at(1), "hubs");
  EXPECT_EQ(names.at(2), "suburban");
}

TEST(Typology, IndependentOfClusterIds) {
  cluster_cut const a{3, {0, 1, 2}};
  cluster_cut const b{3, {2, 0, 1}};
  matrix raw = matrix::Zero(3, feature_count);
  raw(0, 0) = 5;
  raw(1, 0) = 80;
  raw(2, 0) = 400;
  auto const na = assign_typology(a, summarize_clusters(a, raw));
  auto const nb = assign_typology(b, summarize_clusters(b, raw));
  for (std::size_t r = 0; r < 3; ++r) {
    EXPECT_EQ(na.at(a.labels[r]), nb.at(b.labels[r]));
  }
  EXPECT_EQ(na.at(a.labels[0]), "suburban");
  EXPECT_EQ(na.at(a.labels[2]), "hubs");
}

TEST(Typology, TieBreaks) {
  cluster_cut const c{3, {0, 1, 2}};
  auto names = assign_typology(c, {{0, 1, 50, 9}, {1, 1, 50, 3}, {2, 1, 10, 1}});
  EXPECT_EQ(names.at(2), "suburban");
  EXPECT_EQ(names.at(1), "mid-city");
  EXPECT_EQ(names.at(0), "hubs");
  names = assign_typology(c, {{0, 1, 7, 7}, {1, 1, 7, 7}, {2, 1, 7, 7}});
  EXPECT_EQ(names.at(0), "suburban");
  EXPECT_EQ(names.at(2), "hubs");
  EXPECT_THROW(assign_typology(cluster_cut{2, {0, 1}}, {}), invalid_k);
}

TEST(DendrogramCsv, RoundTripIsExact) {
  auto const d = ward_agglomerate(random_points(25, 6, 10));
  auto const text = dendrogram_to_csv(d);
  EXPECT_EQ(text.substr(0, text.find('\n')), "step,left,right,height,size");
  EXPECT_EQ(dendrogram_from_csv(text), d);
  EXPECT_THROW(dendrogram_from_csv("step,left,right,height,size\n0,a,1,2,2\n"),
               malformed_row);
}
