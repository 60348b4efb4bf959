#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "cfaudit/common/error.hpp"
#include "cfaudit/common/random.hpp"
#include "cfaudit/model/learners.hpp"

namespace cfaudit::model {

MlpParams MlpParams::from_json(const nlohmann::ordered_json& j) {
  MlpParams p;
  if (j.contains("hidden")) {
    const auto& h = j.at("hidden");
    p.hidden = h.is_array() ? h.get<std::vector<int>>() : std::vector<int>{h.get<int>()};
  }
  p.alpha = j.value("alpha", p.alpha);
  p.learning_rate = j.value("learning_rate", p.learning_rate);
  p.epochs = j.value("epochs", p.epochs);
  p.batch_size = j.value("batch_size", p.batch_size);
  if (p.hidden.empty() || p.hidden.size() > 2 ||
      std::any_of(p.hidden.begin(), p.hidden.end(), [](int h) { return h < 1; })) {
    throw ValidationError("mlp needs one or two hidden layers of positive width");
  }
  if (p.alpha < 0 || p.learning_rate <= 0 || p.epochs < 1 || p.batch_size < 1) {
    throw ValidationError("invalid mlp parameters");
  }
  return p;
}

nlohmann::ordered_json MlpParams::to_json() const {
  return {{"hidden", hidden},
          {"alpha", alpha},
          {"learning_rate", learning_rate},
          {"epochs", epochs},
          {"batch_size", batch_size}};
}

std::size_t MlpWeights::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.size();
  return n;
}

std::vector<double> MlpWeights::flatten() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  for (const auto& l : layers) flat.insert(flat.end(), l.begin(), l.end());
  return flat;
}

void MlpWeights::assign(std::span<const double> flat) {
  if (flat.size() != parameter_count()) throw ValidationError("mlp parameter size mismatch");
  std::size_t o = 0;
  for (auto& l : layers) {
    std::copy(flat.begin() + static_cast<std::ptrdiff_t>(o),
              flat.begin() + static_cast<std::ptrdiff_t>(o + l.size()), l.begin());
    o += l.size();
  }
}

MlpWeights MlpWeights::init(std::vector<int> sizes, std::uint64_t seed) {
  MlpWeights w;
  w.sizes = std::move(sizes);
  Rng rng(seed);
  for (std::size_t k = 0; k + 1 < w.sizes.size(); ++k) {
    const auto in = static_cast<std::size_t>(w.sizes[k]);
    const auto out = static_cast<std::size_t>(w.sizes[k + 1]);
    const bool output_layer = k + 2 == w.sizes.size();
    // He for ReLU layers, Glorot for the logistic output.
    const double sd = output_layer ? std::sqrt(2.0 / static_cast<double>(in + out))
                                   : std::sqrt(2.0 / static_cast<double>(std::max<std::size_t>(in, 1)));
    std::normal_distribution<double> normal(0.0, sd);
    std::vector<double> layer(out * in + out, 0.0);
    for (std::size_t i = 0; i < out * in; ++i) layer[i] = normal(rng);
    w.layers.push_back(std::move(layer));
  }
  return w;
}

namespace {

// Forward pass keeping every layer's activations (index 0 = input).
double forward(const MlpWeights& w, std::span<const double> input, std::vector<std::vector<double>>& acts) {
  const std::size_t n_layers = w.layers.size();
  acts.resize(n_layers + 1);
  acts[0].assign(input.begin(), input.end());
  double z_out = 0.0;
  for (std::size_t k = 0; k < n_layers; ++k) {
    const auto in = static_cast<std::size_t>(w.sizes[k]);
    const auto out = static_cast<std::size_t>(w.sizes[k + 1]);
    const auto& layer = w.layers[k];
    auto& next = acts[k + 1];
    next.resize(out);
    const bool last = k + 1 == n_layers;
    for (std::size_t o = 0; o < out; ++o) {
      double z = layer[out * in + o];
      const double* row = layer.data() + o * in;
      for (std::size_t i = 0; i < in; ++i) z += row[i] * acts[k][i];
      if (last) {
        z_out = z;
        next[o] = sigmoid(z);
      } else {
        next[o] = z > 0.0 ? z : 0.0;
      }
    }
  }
  return z_out;
}

double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

// Accumulates the unregularised gradient of one sample into `grad` (layer
// layout) and returns its log-loss.
double backprop_sample(const MlpWeights& w, std::span<const double> input, int label,
                       std::vector<std::vector<double>>& acts, std::vector<std::vector<double>>& deltas,
                       std::vector<std::vector<double>>& grad) {
  const double z = forward(w, input, acts);
  const std::size_t n_layers = w.layers.size();
  deltas.resize(n_layers);
  deltas[n_layers - 1].assign(1, acts[n_layers][0] - label);
  for (std::size_t k = n_layers; k-- > 0;) {
    const auto in = static_cast<std::size_t>(w.sizes[k]);
    const auto out = static_cast<std::size_t>(w.sizes[k + 1]);
    const auto& delta = deltas[k];
    auto& g = grad[k];
    for (std::size_t o = 0; o < out; ++o) {
      const double d = delta[o];
      if (d == 0.0) continue;
      double* row = g.data() + o * in;
      for (std::size_t i = 0; i < in; ++i) row[i] += d * acts[k][i];
      g[out * in + o] += d;
    }
    if (k > 0) {
      auto& prev = deltas[k - 1];
      prev.assign(in, 0.0);
      const auto& layer = w.layers[k];
      for (std::size_t o = 0; o < out; ++o) {
        const double d = delta[o];
        if (d == 0.0) continue;
        const double* row = layer.data() + o * in;
        for (std::size_t i = 0; i < in; ++i) prev[i] += d * row[i];
      }
      for (std::size_t i = 0; i < in; ++i) {
        if (acts[k][i] <= 0.0) prev[i] = 0.0;  // ReLU derivative
      }
    }
  }
  return softplus(z) - label * z;
}

}  // namespace

double mlp_forward(const MlpWeights& weights, std::span<const double> input, std::vector<double>& scratch) {
  // Two ping-pong buffers packed into scratch.
  std::size_t widest = 0;
  for (int s : weights.sizes) widest = std::max(widest, static_cast<std::size_t>(s));
  scratch.resize(2 * widest);
  double* cur = scratch.data();
  double* nxt = scratch.data() + widest;
  std::copy(input.begin(), input.end(), cur);
  const std::size_t n_layers = weights.layers.size();
  for (std::size_t k = 0; k < n_layers; ++k) {
    const auto in = static_cast<std::size_t>(weights.sizes[k]);
    const auto out = static_cast<std::size_t>(weights.sizes[k + 1]);
    const auto& layer = weights.layers[k];
    const bool last = k + 1 == n_layers;
    for (std::size_t o = 0; o < out; ++o) {
      double z = layer[out * in + o];
      const double* row = layer.data() + o * in;
      for (std::size_t i = 0; i < in; ++i) z += row[i] * cur[i];
      nxt[o] = last ? sigmoid(z) : (z > 0.0 ? z : 0.0);
    }
    std::swap(cur, nxt);
  }
  return cur[0];
}

double mlp_loss_and_gradient(const MlpWeights& weights, const Matrix& x, std::span<const int> labels,
                             double alpha, std::span<double> gradient) {
  std::vector<std::vector<double>> grad(weights.layers.size());
  for (std::size_t k = 0; k < weights.layers.size(); ++k) grad[k].assign(weights.layers[k].size(), 0.0);
  std::vector<std::vector<double>> acts, deltas;
  double loss = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    loss += backprop_sample(weights, x.row(i), labels[i], acts, deltas, grad);
  }
  const double inv_n = 1.0 / static_cast<double>(x.rows());
  loss *= inv_n;
  double reg = 0.0;
  std::size_t o = 0;
  for (std::size_t k = 0; k < weights.layers.size(); ++k) {
    const auto n_w = static_cast<std::size_t>(weights.sizes[k]) * static_cast<std::size_t>(weights.sizes[k + 1]);
    const auto& layer = weights.layers[k];
    for (std::size_t i = 0; i < layer.size(); ++i) {
      double g = grad[k][i] * inv_n;
      if (i < n_w) {
        g += alpha * layer[i];
        reg += layer[i] * layer[i];
      }
      if (!gradient.empty()) gradient[o + i] = g;
    }
    o += layer.size();
  }
  return loss + 0.5 * alpha * reg;
}

Mlp::Mlp(MlpParams params, Standardizer scaler, MlpWeights weights)
    : params_(std::move(params)), scaler_(std::move(scaler)), weights_(std::move(weights)) {
  if (weights_.sizes.empty() || weights_.sizes.back() != 1 ||
      weights_.layers.size() + 1 != weights_.sizes.size()) {
    throw ValidationError("malformed mlp weights");
  }
}

std::shared_ptr<const Mlp> Mlp::train(const MlpParams& params, const Matrix& x, std::span<const int> labels,
                                      std::uint64_t seed) {
  auto scaler = Standardizer::fit(x);
  const Matrix xs = scaler.apply(x);
  std::vector<int> sizes{static_cast<int>(x.cols())};
  sizes.insert(sizes.end(), params.hidden.begin(), params.hidden.end());
  sizes.push_back(1);
  auto w = MlpWeights::init(sizes, derive_seed(seed, 0));

  const std::size_t n = x.rows();
  const std::size_t n_layers = w.layers.size();
  std::vector<std::vector<double>> grad(n_layers), m(n_layers), v(n_layers);
  for (std::size_t k = 0; k < n_layers; ++k) {
    grad[k].assign(w.layers[k].size(), 0.0);
    m[k].assign(w.layers[k].size(), 0.0);
    v[k].assign(w.layers[k].size(), 0.0);
  }
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  double b1t = 1.0, b2t = 1.0;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, 1));
  std::vector<std::vector<double>> acts, deltas;
  const auto batch = static_cast<std::size_t>(params.batch_size);

  for (int epoch = 0; epoch < params.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t stop = std::min(n, start + batch);
      for (auto& g : grad) std::fill(g.begin(), g.end(), 0.0);
      for (std::size_t t = start; t < stop; ++t) {
        backprop_sample(w, xs.row(order[t]), labels[order[t]], acts, deltas, grad);
      }
      const double inv_b = 1.0 / static_cast<double>(stop - start);
      b1t *= beta1;
      b2t *= beta2;
      for (std::size_t k = 0; k < n_layers; ++k) {
        const auto n_w = static_cast<std::size_t>(w.sizes[k]) * static_cast<std::size_t>(w.sizes[k + 1]);
        auto& layer = w.layers[k];
        for (std::size_t i = 0; i < layer.size(); ++i) {
          double g = grad[k][i] * inv_b;
          if (i < n_w) g += params.alpha * layer[i];
          m[k][i] = beta1 * m[k][i] + (1 - beta1) * g;
          v[k][i] = beta2 * v[k][i] + (1 - beta2) * g * g;
          const double mh = m[k][i] / (1 - b1t);
          const double vh = v[k][i] / (1 - b2t);
          layer[i] -= params.learning_rate * mh / (std::sqrt(vh) + eps);
        }
      }
    }
  }
  return std::make_shared<Mlp>(params, std::move(scaler), std::move(w));
}

void Mlp::predict_proba(const Matrix& rows, std::span<double> out) const {
  if (rows.cols() != scaler_.mean.size()) throw ValidationError("mlp: input width mismatch");
  std::vector<double> scaled(rows.cols()), scratch;
  for (std::size_t i = 0; i < rows.rows(); ++i) {
    scaler_.apply(rows.row(i), scaled);
    out[i] = mlp_forward(weights_, scaled, scratch);
  }
}

nlohmann::ordered_json Mlp::parameters() const {
  return {{"scaler", scaler_.to_json()}, {"sizes", weights_.sizes}, {"layers", weights_.layers}};
}

std::shared_ptr<const Mlp> Mlp::from_json(const nlohmann::ordered_json& hyper, const nlohmann::ordered_json& params) {
  MlpWeights w;
  w.sizes = params.at("sizes").get<std::vector<int>>();
  w.layers = params.at("layers").get<std::vector<std::vector<double>>>();
  for (std::size_t k = 0; k < w.layers.size(); ++k) {
    const auto expected = static_cast<std::size_t>(w.sizes.at(k)) * static_cast<std::size_t>(w.sizes.at(k + 1)) +
                          static_cast<std::size_t>(w.sizes.at(k + 1));
    if (w.layers[k].size() != expected) throw ValidationError("mlp layer size mismatch");
  }
  return std::make_shared<Mlp>(MlpParams::from_json(hyper), Standardizer::from_json(params.at("scaler")),
                               std::move(w));
}

}  // namespace cfaudit::model
