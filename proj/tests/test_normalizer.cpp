#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gtfs2vec/normalizer.hpp"

using namespace gtfs2vec;

namespace {

matrix random_counts(Eigen::Index rows, std::uint64_t seed, int trips_hi = 120,
                     int dirs_hi = 14) {
  std::mt19937_64 rng{seed};
  matrix m(rows, feature_count);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (int c = 0; c < feature_count; ++c) {
      auto const hi = c < hours_per_block ? trips_hi : dirs_hi;
      m(r, c) = static_cast<double>(rng() % static_cast<std::uint64_t>(hi + 1));
    }
  }
  return m;
}

}  // namespace

TEST(Fit, BlockExtrema) {
  matrix m = matrix::Zero(3, feature_count);
  m(0, 5) = 120;
  m(2, 16) = 7;
  m(1, 17) = 14;
  m(2, 33) = 3;
  EXPECT_EQ(fit(m), (norm_params{0, 120, 0, 14}));
}

TEST(Fit, SingleRowDegenerate) {
  matrix m = matrix::Constant(1, feature_count, 4.0);
  m.rightCols(hours_per_block).setConstant(2.0);
  auto const p = fit(m);
  EXPECT_EQ(p.trips_min, p.trips_max);
  EXPECT_EQ(p.dirs_min, p.dirs_max);
  EXPECT_TRUE(transform(m, p).isZero());
}

TEST(Fit, Errors) {
  EXPECT_THROW(fit(matrix(0, feature_count)), empty_matrix);
  EXPECT_THROW(fit(matrix::Zero(2, 10)), shape_mismatch);
}

TEST(Fit, PooledAcrossCitiesNotAveraged) {
  auto const a = random_counts(30, 1, 40, 5);
  auto const b = random_counts(20, 2, 120, 14);
  matrix ab(a.rows() + b.rows(), feature_count);
  ab << a, b;
  auto const pa = fit(a);
  auto const pb = fit(b);
  auto const pooled = fit(ab);
  EXPECT_EQ(pooled.trips_min, std::min(pa.trips_min, pb.trips_min));
  EXPECT_EQ(pooled.trips_max, std::max(pa.trips_max, pb.trips_max));
  EXPECT_EQ(pooled.dirs_max, std::max(pa.dirs_max, pb.dirs_max));
  EXPECT_NE(pooled.trips_max, (pa.trips_max + pb.trips_max) / 2);
}

TEST(Transform, EndpointsAndRange) {
  auto const m = random_counts(50, 3);
  auto const p = fit(m);
  auto const t = transform(m, p);
  EXPECT_GE(t.minCoeff(), 0.0);
  EXPECT_LE(t.maxCoeff(), 1.0);
  matrix probe = matrix::Zero(1, feature_count);
  probe(0, 0) = p.trips_max;
  probe(0, 1) = p.trips_min;
  probe(0, 17) = p.dirs_max;
  auto const tp = transform(probe, p);
  EXPECT_EQ(tp(0, 0), 1.0);
  EXPECT_EQ(tp(0, 1), 0.0);
  EXPECT_EQ(tp(0, 17), 1.0);
}

TEST(Transform, ClampsUnseenValues) {
  norm_params const p{0, 100, 0, 10};
  matrix m = matrix::Zero(1, feature_count);
  m(0, 0) = 250;
  m(0, 1) = -5;
  m(0, 20) = 11;
  auto const t = transform(m, p);
  EXPECT_EQ(t(0, 0), 1.0);
  EXPECT_EQ(t(0, 1), 0.0);
  EXPECT_EQ(t(0, 20), 1.0);
}

TEST(Transform, OrderAndRatioPreservedWithinBlock) {
  auto const m = random_counts(40, 4);
  norm_params p = fit(m);
  p.trips_min = 0;  // ratio property needs a zero minimum
  auto const t = transform(m, p);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (int c = 1; c < hours_per_block; ++c) {
      if (m(r, c - 1) < m(r, c)) {
        EXPECT_LT(t(r, c - 1), t(r, c));
      }
      if (m(r, c) != 0) {
        EXPECT_NEAR(t(r, c - 1) / t(r, c), m(r, c - 1) / m(r, c), 1e-12);
      }
    }
  }
}

TEST(InverseTransform, Endpoints) {
  norm_params const p{0, 120, 1, 14};
  matrix n = matrix::Zero(1, feature_count);
  n(0, 0) = 1.0;
  auto const back = inverse_transform(n, p);
  EXPECT_EQ(back(0, 0), 120.0);
  EXPECT_EQ(back(0, 1), 0.0);
  EXPECT_EQ(back(0, 17), 1.0);
}

TEST(InverseTransform, RandomRoundTrip) {
  std::mt19937_64 rng{5};
  std::uniform_real_distribution<double> u{-50.0, 1000.0};
  for (int rep = 0; rep < 20; ++rep) {
    matrix m(25, feature_count);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      m.data()[i] = u(rng);
    }
    auto const p = fit(m);
    auto const back = inverse_transform(transform(m, p), p);
    auto const range = std::max(p.trips_max - p.trips_min, p.dirs_max - p.dirs_min);
    EXPECT_LT((back - m).cwiseAbs().maxCoeff(), 1e-9 * range);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      EXPECT_LE(std::abs(back.data()[i] - m.data()[i]),
                1e-9 * std::max(1.0, std::abs(m.data()[i])));
    }
  }
}

TEST(NormParams, TextRoundTripIsExact) {
  norm_params const p{0.1, 1.0 / 3.0, 2.5, 1e6};
  auto const text = norm_params_to_text(p);
  EXPECT_NE(text.find("mode=global"), std::string::npos);
  EXPECT_EQ(norm_params_from_text(text), p);
  EXPECT_THROW(norm_params_from_text("trips_min=0\n"), format_error);
  EXPECT_THROW(norm_params_from_text("mode=per_city\ntrips_min=0\ntrips_max=1\n"
                                     "dirs_min=0\ndirs_max=1\n"),
               format_error);
  EXPECT_THROW(norm_params_from_text("trips_min=2\ntrips_max=1\n"
                                     "dirs_min=0\ndirs_max=1\n"),
               format_error);
}
