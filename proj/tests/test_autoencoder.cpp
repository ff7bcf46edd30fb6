#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gtfs2vec/autoencoder.hpp"
#include "support/gradient_check.hpp"

using namespace gtfs2vec;

namespace {

matrix random_unit_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 rng{seed};
  std::uniform_real_distribution<double> u{0.0, 1.0};
  matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    m.data()[i] = u(rng);
  }
  return m;
}

}  // namespace

TEST(InitModel, DeterministicShapesAndZeroBiases) {
  auto const a = init_model(42);
  auto const b = init_model(42);
  EXPECT_EQ(a, b);
  EXPECT_NE(init_model(1).enc1.weights, init_model(2).enc1.weights);
  EXPECT_EQ(a.enc1.weights.rows(), 48);
  EXPECT_EQ(a.enc1.weights.cols(), 34);
  EXPECT_EQ(a.enc2.weights.rows(), 64);
  EXPECT_EQ(a.enc2.weights.cols(), 48);
  EXPECT_EQ(a.dec1.weights.rows(), 48);
  EXPECT_EQ(a.dec1.weights.cols(), 64);
  EXPECT_EQ(a.dec2.weights.rows(), 34);
  EXPECT_EQ(a.dec2.weights.cols(), 48);
  for (auto const* l : a.layers()) {
    EXPECT_TRUE(l->bias.isZero());
    auto const limit = std::sqrt(6.0 / static_cast<double>(l->in() + l->out()));
    EXPECT_LE(l->weights.cwiseAbs().maxCoeff(), limit);
    EXPECT_GT(l->weights.cwiseAbs().maxCoeff(), 0.5 * limit);
  }
  EXPECT_EQ(a.parameter_count(),
            34u * 48 + 48 + 48 * 64 + 64 + 64 * 48 + 48 + 48 * 34 + 34);
}

TEST(InitModel, FrozenFirstWeights) {
  // Pins the portable generator (mt19937_64, top 53 bits) so saved seeds
  // keep reproducing the same model across standard libraries.
  std::mt19937_64 rng{42};
  auto const limit = std::sqrt(6.0 / (34.0 + 48.0));
  auto const first = (2.0 * static_cast<double>(rng() >> 11) * 0x1.0p-53 - 1.0) * limit;
  EXPECT_EQ(init_model(42).enc1.weights.data()[0], first);
}

TEST(Forward, ZeroInputWithZeroBiasesGivesZero) {
  auto const m = init_model(7);
  auto const r = forward(m, vector::Zero(34));
  EXPECT_TRUE(r.embedding.isZero());
  EXPECT_TRUE(r.reconstruction.isZero());
  EXPECT_EQ(r.embedding.size(), 64);
  EXPECT_EQ(r.reconstruction.size(), 34);
}

TEST(Forward, HandComputedToyNetwork) {
  // 2 -> 3 -> 2 encoder, 2 -> 3 -> 2 decoder.
  architecture const arch{2, 3, 2};
  auto m = layer_set::zeros(arch);
  m.enc1.weights << 1, 0, 0, 1, 1, -1;
  m.enc1.bias << 0, 0, -1;
  m.enc2.weights << 1, 1, 1, 0, 0, 2;
  m.enc2.bias << 0.5, 0;
  m.dec1.weights << 1, 0, 0, 1, -1, -1;
  m.dec1.bias << 0, 0, 0;
  m.dec2.weights << 1, 0, 1, 0, 1, 1;
  m.dec2.bias << 0, -1;
  vector x(2);
  x << 2, 1;
  // enc1: (2, 1, 2-1-1=0) -> relu (2, 1, 0)
  // enc2: (2+1+0+0.5, 0+0) = (3.5, 0)
  // dec1: (3.5, 0, -3.5) -> relu (3.5, 0, 0)
  // dec2: (3.5 + 0, 0 + 0 - 1) = (3.5, -1)
  auto const r = forward(m, x);
  EXPECT_DOUBLE_EQ(r.embedding[0], 3.5);
  EXPECT_DOUBLE_EQ(r.embedding[1], 0.0);
  EXPECT_DOUBLE_EQ(r.reconstruction[0], 3.5);
  EXPECT_DOUBLE_EQ(r.reconstruction[1], -1.0);
}

TEST(Forward, ShapeMismatch) {
  EXPECT_THROW(forward(init_model(1), vector::Zero(33)), shape_mismatch);
  EXPECT_THROW(encode(init_model(1), matrix::Zero(2, 10)), shape_mismatch);
}

TEST(Loss, Definition) {
  matrix const x = random_unit_matrix(3, 34, 1);
  EXPECT_EQ(loss(x, x), 0.0);
  matrix a = matrix::Zero(1, 34), b = matrix::Zero(1, 34);
  b(0, 0) = 1.0;
  EXPECT_EQ(loss(a, b), 1.0);
  matrix c = matrix::Zero(2, 34), d = matrix::Zero(2, 34);
  d(0, 0) = 1.0;
  d(0, 1) = 1.0;  // row sum 2
  d(1, 0) = 2.0;  // row sum 4
  EXPECT_EQ(loss(c, d), 3.0);
  EXPECT_THROW(loss(c, a), shape_mismatch);
}

TEST(Gradients, MatchCentralFiniteDifferences) {
  auto const model = init_model(3);
  matrix const batch = random_unit_matrix(6, 34, 4);
  auto const report = testing_support::gradient_check(model, batch, 1e-5);
  EXPECT_LT(report.max_relative_error, 1e-4)
      << "worst parameter " << report.worst_index;
  EXPECT_EQ(report.checked, model.parameter_count());
}

TEST(Gradients, MatchOnToyArchitectureWithNonzeroBiases) {
  auto model = init_model(9, architecture{5, 4, 6});
  std::mt19937_64 rng{10};
  std::uniform_real_distribution<double> u{-0.3, 0.3};
  for (auto* l : model.layers()) {
    for (Eigen::Index i = 0; i < l->bias.size(); ++i) {
      l->bias[i] = u(rng);
    }
  }
  matrix const batch = random_unit_matrix(4, 5, 11);
  EXPECT_LT(testing_support::gradient_check(model, batch, 1e-5).max_relative_error,
            1e-4);
}

TEST(Gradients, ZeroAtPerfectReconstruction) {
  // A network whose output ignores its input: all weights zero, decoder
  // bias equal to the (single, repeated) row.
  auto m = layer_set::zeros(architecture{});
  matrix const row = random_unit_matrix(1, 34, 12);
  m.dec2.bias = row.row(0).transpose();
  matrix batch(3, 34);
  batch << row, row, row;
  auto const g = gradients(m, batch);
  EXPECT_EQ(g.loss, 0.0);
  for (auto const* l : g.grads.layers()) {
    EXPECT_TRUE(l->weights.isZero());
    EXPECT_TRUE(l->bias.isZero());
  }
}

TEST(Gradients, InvariantUnderRowDuplication) {
  auto const m = init_model(5);
  matrix const batch = random_unit_matrix(4, 34, 13);
  matrix doubled(8, 34);
  doubled << batch, batch;
  auto const g1 = gradients(m, batch);
  auto const g2 = gradients(m, doubled);
  EXPECT_NEAR(g1.loss, g2.loss, 1e-12);
  auto const l1 = g1.grads.layers();
  auto const l2 = g2.grads.layers();
  for (std::size_t i = 0; i < l1.size(); ++i) {
    EXPECT_LT((l1[i]->weights - l2[i]->weights).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((l1[i]->bias - l2[i]->bias).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Train, DeterministicAndDecreasing) {
  matrix const data = random_unit_matrix(40, 34, 14);
  train_config cfg;
  cfg.epochs = 30;
  auto const a = train(data, cfg);
  auto const b = train(data, cfg);
  EXPECT_EQ(a.loss_history, b.loss_history);
  EXPECT_EQ(a.model, b.model);
  ASSERT_EQ(a.loss_history.size(), 30u);
  EXPECT_LT(a.loss_history.back(), a.loss_history.front());
  EXPECT_TRUE(a.model.all_finite());
  cfg.seed = 43;
  EXPECT_NE(train(data, cfg).model, a.model);
}

TEST(Train, IdenticalRowsLearnAConstant) {
  // 256 identical rows: eight minibatches per epoch at the default batch
  // size of 32.
  matrix const row = random_unit_matrix(1, 34, 15);
  matrix const data = row.replicate(256, 1);
  auto const r = train(data, train_config{});
  EXPECT_LT(r.loss_history.back(), 1e-4);
}

TEST(Train, SgdAndNoShuffleWork) {
  matrix const data = random_unit_matrix(20, 34, 16);
  train_config cfg;
  cfg.epochs = 20;
  cfg.optimizer = optimizer_kind::sgd;
  cfg.learning_rate = 0.05;
  cfg.shuffle = false;
  auto const r = train(data, cfg);
  EXPECT_LT(r.loss_history.back(), r.loss_history.front());
}

TEST(Train, DivergenceIsReported) {
  matrix const data = random_unit_matrix(20, 34, 17);
  train_config cfg;
  cfg.optimizer = optimizer_kind::sgd;
  cfg.learning_rate = 1e6;
  cfg.epochs = 50;
  EXPECT_THROW(train(data, cfg), non_finite_loss);
}

TEST(Train, ConfigValidation) {
  matrix const data = random_unit_matrix(5, 34, 18);
  train_config cfg;
  cfg.epochs = 0;
  EXPECT_THROW(train(data, cfg), config_error);
  cfg = {};
  cfg.batch_size = 0;
  EXPECT_THROW(train(data, cfg), config_error);
  cfg = {};
  cfg.learning_rate = -1;
  EXPECT_THROW(train(data, cfg), config_error);
  EXPECT_THROW(train(matrix(0, 34), train_config{}), empty_matrix);
  EXPECT_THROW(parse_optimizer("rmsprop"), config_error);
}

TEST(Encode, ShapeOrderAndDistinctness) {
  matrix data = random_unit_matrix(12, 34, 19);
  data.row(5) = data.row(2);
  train_config cfg;
  cfg.epochs = 50;
  auto const model = train(data, cfg).model;
  std::vector<region_key> rows;
  for (int i = 0; i < 12; ++i) {
    rows.push_back({"c" + std::to_string(i), cell_id::parse("881e20408bfffff")});
  }
  auto const e = encode(model, rows, data);
  ASSERT_EQ(e.size(), 12u);
  EXPECT_EQ(e[3].region, rows[3]);
  EXPECT_EQ(e[3].values.size(), 64);
  EXPECT_EQ(e[2].values, e[5].values);
  for (int i = 0; i < 12; ++i) {
    for (int j = i + 1; j < 12; ++j) {
      if (!(i == 2 && j == 5)) {
        EXPECT_GT((e[static_cast<std::size_t>(i)].values -
                   e[static_cast<std::size_t>(j)].values)
                      .cwiseAbs()
                      .maxCoeff(),
                  0.0);
      }
    }
  }
  auto const z = encode(model, data);
  // Batched and single-row products may round differently.
  vector const single = forward(model, data.row(7).transpose()).embedding;
  EXPECT_LT((z.row(7).transpose() - single).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Persistence, ModelTextRoundTripIsExact) {
  matrix const data = random_unit_matrix(10, 34, 20);
  train_config cfg;
  cfg.epochs = 3;
  auto const model = train(data, cfg).model;
  auto const text = model_to_text(model);
  EXPECT_EQ(text.rfind("gtfs2vec-autoencoder 1", 0), 0u);
  EXPECT_EQ(model_from_text(text), model);
  EXPECT_THROW(model_from_text("gtfs2vec-autoencoder 2\n"), format_error);
  EXPECT_THROW(model_from_text(text.substr(0, text.size() / 2)), format_error);
}

TEST(Persistence, EmbeddingsCsvRoundTrip) {
  std::vector<embedding> rows;
  std::mt19937_64 rng{21};
  std::normal_distribution<double> n;
  for (int i = 0; i < 5; ++i) {
    vector v(64);
    for (auto& x : v) {
      x = n(rng);
    }
    rows.push_back({{"c", assign_cell(51.0 + 0.05 * i, 17.0)}, v});
  }
  auto const csv = embeddings_to_csv(rows);
  EXPECT_EQ(csv.substr(0, 20), "city_id,cell,z0,z1,z");
  auto const back = embeddings_from_csv(csv);
  ASSERT_EQ(back.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(back[i].region, rows[i].region);
    EXPECT_EQ(back[i].values, rows[i].values);
  }
}

TEST(Persistence, LossHistoryCsv) {
  EXPECT_EQ(loss_history_to_csv({0.5, 0.25}), "epoch,loss\n1,0.5\n2,0.25\n");
}
