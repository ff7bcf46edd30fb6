#pragma once

// Fully connected autoencoder: encoder input -> hidden (ReLU) -> embedding,
// decoder embedding -> hidden (ReLU) -> input. Default widths 34/48/64.
// Trained on the mean over rows of the per-row squared reconstruction error.

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "gtfs2vec/detail/io.hpp"
#include "gtfs2vec/error.hpp"
#include "gtfs2vec/features.hpp"
#include "gtfs2vec/matrix.hpp"
#include "gtfs2vec/regionizer.hpp"

namespace gtfs2vec {

inline constexpr int embedding_size = 64;
inline constexpr int hidden_size = 48;

struct architecture {
  int input = feature_count;
  int hidden = hidden_size;
  int embedding = embedding_size;

  friend bool operator==(architecture const&, architecture const&) = default;
};

struct dense_layer {
  matrix weights;  // out x in
  vector bias;     // out

  Eigen::Index in() const noexcept { return weights.cols(); }
  Eigen::Index out() const noexcept { return weights.rows(); }

  static dense_layer zeros(Eigen::Index in, Eigen::Index out) {
    return dense_layer{matrix::Zero(out, in), vector::Zero(out)};
  }

  bool all_finite() const { return weights.allFinite() && bias.allFinite(); }

  friend bool operator==(dense_layer const& a, dense_layer const& b) {
    return a.weights.rows() == b.weights.rows() &&
           a.weights.cols() == b.weights.cols() && a.weights == b.weights &&
           a.bias.size() == b.bias.size() && a.bias == b.bias;
  }
};

// The four layers in a fixed order; also used for gradients and optimizer
// moments, which share the parameter shapes.
struct layer_set {
  dense_layer enc1;
  dense_layer enc2;
  dense_layer dec1;
  dense_layer dec2;

  std::array<dense_layer*, 4> layers() { return {&enc1, &enc2, &dec1, &dec2}; }
  std::array<dense_layer const*, 4> layers() const {
    return {&enc1, &enc2, &dec1, &dec2};
  }

  static layer_set zeros(architecture const& a) {
    return layer_set{dense_layer::zeros(a.input, a.hidden),
                     dense_layer::zeros(a.hidden, a.embedding),
                     dense_layer::zeros(a.embedding, a.hidden),
                     dense_layer::zeros(a.hidden, a.input)};
  }

  architecture arch() const {
    return architecture{static_cast<int>(enc1.in()),
                        static_cast<int>(enc1.out()),
                        static_cast<int>(enc2.out())};
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (auto const* l : layers()) {
      n += static_cast<std::size_t>(l->weights.size() + l->bias.size());
    }
    return n;
  }

  // Visits every parameter in a fixed order: per layer, weights row-major
  // then bias.
  template <typename F>
  void for_each_parameter(F&& f) {
    for (auto* l : layers()) {
      for (Eigen::Index i = 0; i < l->weights.size(); ++i) {
        f(l->weights.data()[i]);
      }
      for (Eigen::Index i = 0; i < l->bias.size(); ++i) {
        f(l->bias[i]);
      }
    }
  }

  bool all_finite() const {
    for (auto const* l : layers()) {
      if (!l->all_finite()) {
        return false;
      }
    }
    return true;
  }

  friend bool operator==(layer_set const&, layer_set const&) = default;
};

struct autoencoder_model : layer_set {
  std::uint64_t seed{};

  friend bool operator==(autoencoder_model const&,
                         autoencoder_model const&) = default;
};

using model_gradients = layer_set;

enum class optimizer_kind { adam, sgd };

inline optimizer_kind parse_optimizer(std::string_view name) {
  if (name == "adam") {
    return optimizer_kind::adam;
  }
  if (name == "sgd") {
    return optimizer_kind::sgd;
  }
  throw config_error("unknown optimizer '" + std::string{name} +
                     "' (expected adam or sgd)");
}

inline std::string_view to_string(optimizer_kind k) {
  return k == optimizer_kind::adam ? "adam" : "sgd";
}

struct train_config {
  int epochs = 200;
  int batch_size = 32;
  double learning_rate = 1e-3;
  optimizer_kind optimizer = optimizer_kind::adam;
  std::uint64_t seed = 42;
  bool shuffle = true;
  // Adam decay constants.
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const {
    if (epochs < 1) {
      throw config_error("epochs must be >= 1");
    }
    if (batch_size < 1) {
      throw config_error("batch_size must be >= 1");
    }
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
      throw config_error("learning_rate must be > 0");
    }
  }
};

namespace detail {

// Uniform double in [0, 1) from the top 53 bits; unlike
// std::uniform_real_distribution this is identical on every standard
// library.
inline double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, n) by rejection sampling.
inline std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t n) {
  std::uint64_t const threshold = (0 - n) % n;
  while (true) {
    auto const r = rng();
    if (r >= threshold) {
      return r % n;
    }
  }
}

template <typename T>
void shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[bounded(rng, i)]);
  }
}

inline matrix relu(matrix const& m) { return m.cwiseMax(0.0); }

// ReLU derivative; the subgradient at exactly 0 is 0.
inline matrix relu_mask(matrix const& pre) {
  return (pre.array() > 0.0).cast<double>().matrix();
}

inline matrix affine(matrix const& x, dense_layer const& l) {
  matrix out = x * l.weights.transpose();
  out.rowwise() += l.bias.transpose();
  return out;
}

struct activations {
  matrix enc_pre;  // input -> hidden, before ReLU
  matrix enc_hidden;
  matrix embedding;
  matrix dec_pre;
  matrix dec_hidden;
  matrix reconstruction;
};

inline activations forward_batch(layer_set const& m, matrix const& x) {
  if (x.cols() != m.enc1.in()) {
    throw shape_mismatch("input has " + std::to_string(x.cols()) +
                         " columns, model expects " +
                         std::to_string(m.enc1.in()));
  }
  activations a;
  a.enc_pre = affine(x, m.enc1);
  a.enc_hidden = relu(a.enc_pre);
  a.embedding = affine(a.enc_hidden, m.enc2);
  a.dec_pre = affine(a.embedding, m.dec1);
  a.dec_hidden = relu(a.dec_pre);
  a.reconstruction = affine(a.dec_hidden, m.dec2);
  return a;
}

}  // namespace detail

// Glorot-uniform weights, zero biases.
inline autoencoder_model init_model(std::uint64_t seed,
                                    architecture const& arch = {}) {
  autoencoder_model model;
  static_cast<layer_set&>(model) = layer_set::zeros(arch);
  model.seed = seed;
  std::mt19937_64 rng{seed};
  for (auto* l : model.layers()) {
    auto const limit =
        std::sqrt(6.0 / static_cast<double>(l->in() + l->out()));
    for (Eigen::Index i = 0; i < l->weights.size(); ++i) {
      l->weights.data()[i] = (2.0 * detail::unit_uniform(rng) - 1.0) * limit;
    }
  }
  return model;
}

struct forward_result {
  vector embedding;
  vector reconstruction;
};

inline forward_result forward(layer_set const& model, vector const& x) {
  if (x.size() != model.enc1.in()) {
    throw shape_mismatch("input has " + std::to_string(x.size()) +
                         " values, model expects " +
                         std::to_string(model.enc1.in()));
  }
  auto const a = detail::forward_batch(model, x.transpose());
  return forward_result{a.embedding.row(0).transpose(),
                        a.reconstruction.row(0).transpose()};
}

// (1/N) * sum over rows of the squared error summed over components.
inline double loss(matrix const& batch, matrix const& reconstructions) {
  if (batch.rows() != reconstructions.rows() ||
      batch.cols() != reconstructions.cols()) {
    throw shape_mismatch("loss: batch and reconstruction shapes differ");
  }
  if (batch.rows() == 0) {
    throw shape_mismatch("loss: empty batch");
  }
  return (batch - reconstructions).squaredNorm() /
         static_cast<double>(batch.rows());
}

struct gradient_result {
  model_gradients grads;
  double loss{};
};

// Exact gradients of `loss` with respect to every weight and bias.
inline gradient_result gradients(layer_set const& m, matrix const& batch) {
  auto const a = detail::forward_batch(m, batch);
  auto const n = static_cast<double>(batch.rows());
  gradient_result out;
  out.loss = loss(batch, a.reconstruction);

  matrix const d_rec = (2.0 / n) * (a.reconstruction - batch);
  out.grads.dec2.weights = d_rec.transpose() * a.dec_hidden;
  out.grads.dec2.bias = d_rec.colwise().sum().transpose();

  matrix const d_dec_pre =
      (d_rec * m.dec2.weights).cwiseProduct(detail::relu_mask(a.dec_pre));
  out.grads.dec1.weights = d_dec_pre.transpose() * a.embedding;
  out.grads.dec1.bias = d_dec_pre.colwise().sum().transpose();

  matrix const d_emb = d_dec_pre * m.dec1.weights;
  out.grads.enc2.weights = d_emb.transpose() * a.enc_hidden;
  out.grads.enc2.bias = d_emb.colwise().sum().transpose();

  matrix const d_enc_pre =
      (d_emb * m.enc2.weights).cwiseProduct(detail::relu_mask(a.enc_pre));
  out.grads.enc1.weights = d_enc_pre.transpose() * batch;
  out.grads.enc1.bias = d_enc_pre.colwise().sum().transpose();
  return out;
}

struct training_result {
  autoencoder_model model;
  std::vector<double> loss_history;  // mean training loss per epoch
};

namespace detail {

class optimizer {
public:
  optimizer(train_config const& cfg, architecture const& arch)
      : cfg_{cfg},
        m_{layer_set::zeros(arch)},
        v_{layer_set::zeros(arch)} {}

  void step(layer_set& params, model_gradients const& g) {
    ++t_;
    auto const p = params.layers();
    auto const gl = g.layers();
    auto const ml = m_.layers();
    auto const vl = v_.layers();
    for (std::size_t i = 0; i < p.size(); ++i) {
      update(p[i]->weights, gl[i]->weights, ml[i]->weights, vl[i]->weights);
      update(p[i]->bias, gl[i]->bias, ml[i]->bias, vl[i]->bias);
    }
  }

private:
  template <typename T>
  void update(T& param, T const& grad, T& m, T& v) const {
    if (cfg_.optimizer == optimizer_kind::sgd) {
      param -= cfg_.learning_rate * grad;
      return;
    }
    m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * grad;
    v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * grad.cwiseProduct(grad);
    auto const c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    auto const c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    param.array() -= cfg_.learning_rate * (m.array() / c1) /
                     ((v.array() / c2).sqrt() + cfg_.epsilon);
  }

  train_config cfg_;
  layer_set m_;
  layer_set v_;
  std::int64_t t_{0};
};

}  // namespace detail

inline training_result train(matrix const& data, train_config const& cfg,
                             architecture const& arch = {}) {
  cfg.validate();
  if (data.rows() == 0) {
    throw empty_matrix("cannot train on an empty matrix");
  }
  if (data.cols() != arch.input) {
    throw shape_mismatch("training data has " + std::to_string(data.cols()) +
                         " columns, architecture expects " +
                         std::to_string(arch.input));
  }
  training_result result;
  result.model = init_model(cfg.seed, arch);
  detail::optimizer opt{cfg, arch};
  // Separate stream from the one used for initialization.
  std::mt19937_64 rng{cfg.seed ^ 0x9E3779B97F4A7C15ull};

  auto const n = static_cast<std::size_t>(data.rows());
  auto const batch = static_cast<std::size_t>(cfg.batch_size);
  std::vector<Eigen::Index> order(n);
  for (std::size_t i = 0; i < n; ++i) {
    order[i] = static_cast<Eigen::Index>(i);
  }
  matrix x;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.shuffle) {
      detail::shuffle(order, rng);
    }
    double total = 0.0;
    for (std::size_t start = 0; start < n; start += batch) {
      auto const rows = std::min(batch, n - start);
      x.resize(static_cast<Eigen::Index>(rows), data.cols());
      for (std::size_t i = 0; i < rows; ++i) {
        x.row(static_cast<Eigen::Index>(i)) = data.row(order[start + i]);
      }
      auto const g = gradients(result.model, x);
      if (!std::isfinite(g.loss)) {
        throw non_finite_loss("training diverged in epoch " +
                              std::to_string(epoch + 1) +
                              "; lower the learning rate");
      }
      total += g.loss * static_cast<double>(rows);
      opt.step(result.model, g.grads);
    }
    if (!result.model.all_finite()) {
      throw non_finite_loss("non-finite parameters after epoch " +
                            std::to_string(epoch + 1));
    }
    result.loss_history.push_back(total / static_cast<double>(n));
  }
  return result;
}

// Encoder only: one embedding row per input row.
inline matrix encode(layer_set const& model, matrix const& normalized) {
  if (normalized.cols() != model.enc1.in()) {
    throw shape_mismatch("input has " + std::to_string(normalized.cols()) +
                         " columns, model expects " +
                         std::to_string(model.enc1.in()));
  }
  return detail::affine(detail::relu(detail::affine(normalized, model.enc1)),
                        model.enc2);
}

struct embedding {
  region_key region;
  vector values;
};

inline std::vector<embedding> encode(layer_set const& model,
                                     std::vector<region_key> const& rows,
                                     matrix const& normalized) {
  if (rows.size() != static_cast<std::size_t>(normalized.rows())) {
    throw shape_mismatch("row keys and matrix rows differ in count");
  }
  auto const z = encode(model, normalized);
  std::vector<embedding> out;
  out.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.push_back(
        embedding{rows[i], z.row(static_cast<Eigen::Index>(i)).transpose()});
  }
  return out;
}

// --- persistence ---

inline constexpr std::string_view model_magic = "gtfs2vec-autoencoder";
inline constexpr int model_format_version = 1;

inline std::string model_to_text(autoencoder_model const& m) {
  auto const arch = m.arch();
  std::string out;
  out += model_magic;
  out += ' ' + std::to_string(model_format_version) + '\n';
  out += "seed " + std::to_string(m.seed) + '\n';
  out += "architecture " + std::to_string(arch.input) + ' ' +
         std::to_string(arch.hidden) + ' ' + std::to_string(arch.embedding) +
         '\n';
  static constexpr std::array<std::string_view, 4> names = {"enc1", "enc2",
                                                            "dec1", "dec2"};
  auto const layers = m.layers();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    auto const& l = *layers[i];
    out += "layer ";
    out += names[i];
    out += ' ' + std::to_string(l.out()) + ' ' + std::to_string(l.in()) + '\n';
    for (Eigen::Index r = 0; r < l.out(); ++r) {
      for (Eigen::Index c = 0; c < l.in(); ++c) {
        if (c != 0) {
          out += ' ';
        }
        detail::append_double(out, l.weights(r, c));
      }
      out += '\n';
    }
    for (Eigen::Index r = 0; r < l.out(); ++r) {
      if (r != 0) {
        out += ' ';
      }
      detail::append_double(out, l.bias[r]);
    }
    out += '\n';
  }
  return out;
}

inline autoencoder_model model_from_text(std::string_view text) {
  std::vector<std::string_view> tokens;
  std::size_t p = 0;
  while (p < text.size()) {
    while (p < text.size() && std::isspace(static_cast<unsigned char>(text[p]))) {
      ++p;
    }
    auto const b = p;
    while (p < text.size() && !std::isspace(static_cast<unsigned char>(text[p]))) {
      ++p;
    }
    if (p > b) {
      tokens.push_back(text.substr(b, p - b));
    }
  }
  std::size_t t = 0;
  auto next = [&]() -> std::string_view {
    if (t >= tokens.size()) {
      throw format_error("model file truncated");
    }
    return tokens[t++];
  };
  auto expect = [&](std::string_view word) {
    auto const got = next();
    if (got != word) {
      throw format_error("model file: expected '" + std::string{word} +
                         "', got '" + std::string{got} + "'");
    }
  };
  auto integer = [&](std::string_view what) {
    return detail::parse_number_or_throw<long long>(next(), what);
  };

  expect(model_magic);
  if (integer("format version") != model_format_version) {
    throw format_error("unsupported model format version");
  }
  autoencoder_model m;
  expect("seed");
  m.seed = detail::parse_number_or_throw<std::uint64_t>(next(), "seed");
  expect("architecture");
  architecture arch;
  arch.input = static_cast<int>(integer("input width"));
  arch.hidden = static_cast<int>(integer("hidden width"));
  arch.embedding = static_cast<int>(integer("embedding width"));
  if (arch.input < 1 || arch.hidden < 1 || arch.embedding < 1) {
    throw format_error("model file: invalid architecture");
  }
  static_cast<layer_set&>(m) = layer_set::zeros(arch);
  static constexpr std::array<std::string_view, 4> names = {"enc1", "enc2",
                                                            "dec1", "dec2"};
  auto const layers = m.layers();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    auto& l = *layers[i];
    expect("layer");
    expect(names[i]);
    if (integer("rows") != l.out() || integer("cols") != l.in()) {
      throw format_error("model file: layer " + std::string{names[i]} +
                         " shape does not match architecture");
    }
    for (Eigen::Index k = 0; k < l.weights.size(); ++k) {
      l.weights.data()[k] = detail::parse_number_or_throw<double>(next(), "weight");
    }
    for (Eigen::Index k = 0; k < l.bias.size(); ++k) {
      l.bias[k] = detail::parse_number_or_throw<double>(next(), "bias");
    }
  }
  if (t != tokens.size()) {
    throw format_error("model file: trailing data");
  }
  if (!m.all_finite()) {
    throw format_error("model file: non-finite parameter");
  }
  return m;
}

inline std::string loss_history_to_csv(std::vector<double> const& history) {
  std::string out = "epoch,loss\n";
  for (std::size_t i = 0; i < history.size(); ++i) {
    out += std::to_string(i + 1);
    out += ',';
    detail::append_double(out, history[i]);
    out += '\n';
  }
  return out;
}

inline std::string embeddings_to_csv(std::vector<embedding> const& rows) {
  std::string out = "city_id,cell";
  auto const width = rows.empty() ? embedding_size : rows.front().values.size();
  for (Eigen::Index i = 0; i < width; ++i) {
    out += ",z" + std::to_string(i);
  }
  out += '\n';
  for (auto const& e : rows) {
    detail::append_csv_field(out, e.region.city_id);
    out += ',';
    out += e.region.cell.str();
    for (Eigen::Index i = 0; i < e.values.size(); ++i) {
      out += ',';
      detail::append_double(out, e.values[i]);
    }
    out += '\n';
  }
  return out;
}

inline std::vector<embedding> embeddings_from_csv(std::string_view text) {
  detail::csv_reader r{text, "embeddings"};
  auto const city = r.required_column("city_id");
  auto const cell = r.required_column("cell");
  std::vector<std::size_t> cols;
  for (std::size_t i = 0;; ++i) {
    auto const c = r.column("z" + std::to_string(i));
    if (!c) {
      break;
    }
    cols.push_back(*c);
  }
  if (cols.empty()) {
    throw format_error("embeddings file has no z0.. columns");
  }
  std::vector<embedding> out;
  detail::csv_row row;
  while (r.next(row)) {
    try {
      embedding e{region_key{row.fields[city], cell_id::parse(row.fields[cell])},
                  vector(static_cast<Eigen::Index>(cols.size()))};
      for (std::size_t i = 0; i < cols.size(); ++i) {
        e.values[static_cast<Eigen::Index>(i)] =
            detail::parse_number_or_throw<double>(row.fields[cols[i]], "value");
      }
      out.push_back(std::move(e));
    } catch (error const& e) {
      throw malformed_row("embeddings", row.line, e.what());
    }
  }
  return out;
}

}  // namespace gtfs2vec
