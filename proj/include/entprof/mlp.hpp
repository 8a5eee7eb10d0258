#pragma once

// Small fully connected binary classifier: ReLU hidden layers, sigmoid
// output, L2-penalized log loss, Adam on shuffled mini-batches, and early
// stopping on a stratified validation split.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "entprof/error.hpp"
#include "entprof/logreg.hpp"
#include "entprof/matrix.hpp"
#include "entprof/rng.hpp"

namespace entprof {

struct DenseLayer {
  std::size_t inputs = 0;
  std::size_t outputs = 0;
  std::vector<double> weights;  // outputs x inputs, row-major
  std::vector<double> bias;     // outputs

  bool operator==(const DenseLayer&) const = default;
};

struct MlpModel {
  std::vector<DenseLayer> layers;  // last layer has a single output

  double predict(std::span<const double> x) const;
  bool operator==(const MlpModel&) const = default;
};

struct MlpParams {
  std::vector<int> hidden = {10};
  double alpha = 1e-3;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t batch_size = 200;
  int max_epochs = 200;
  int patience = 10;
  double tolerance = 1e-4;
  double validation_fraction = 0.1;
  bool balance = false;  // random oversampling of the minority class
};

struct MlpFit {
  MlpModel model;
  std::vector<double> train_loss;        // per epoch
  std::vector<double> validation_score;  // per epoch (accuracy)
  int best_epoch = 0;
};

namespace detail {

// Forward pass keeping every hidden layer's activations (act[l] is the
// input of layer l; act[0] is unused, the row is read in place). Returns
// the output logit.
inline double mlp_forward(const MlpModel& m, std::span<const double> x, std::vector<std::vector<double>>& act) {
  act.resize(m.layers.size());
  const double* in = x.data();
  double logit = 0.0;
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    const auto& L = m.layers[l];
    bool last = l + 1 == m.layers.size();
    double* out = nullptr;
    if (!last) {
      act[l + 1].resize(L.outputs);
      out = act[l + 1].data();
    }
    for (std::size_t o = 0; o < L.outputs; ++o) {
      const double* w = L.weights.data() + o * L.inputs;
      double z = L.bias[o];
      for (std::size_t i = 0; i < L.inputs; ++i) z += w[i] * in[i];
      if (last) {
        logit = z;
      } else {
        out[o] = z > 0.0 ? z : 0.0;
      }
    }
    in = out;
  }
  return logit;
}

}  // namespace detail

inline double MlpModel::predict(std::span<const double> x) const {
  thread_local std::vector<std::vector<double>> act;
  return sigmoid(detail::mlp_forward(*this, x, act));
}

inline MlpModel zeros_like(const MlpModel& m) {
  MlpModel g = m;
  for (auto& L : g.layers) {
    std::fill(L.weights.begin(), L.weights.end(), 0.0);
    std::fill(L.bias.begin(), L.bias.end(), 0.0);
  }
  return g;
}

/// Mean log loss over the given rows plus alpha/(2n) * sum of squared
/// weights (biases unpenalized). Accumulates the gradient into grad.
inline double mlp_loss_and_gradient(const MlpModel& m, const Matrix& x, std::span<const int> y,
                                    std::span<const std::size_t> rows, double alpha, MlpModel& grad) {
  if (grad.layers.size() != m.layers.size()) {
    grad = zeros_like(m);
  } else {
    for (auto& L : grad.layers) {
      std::fill(L.weights.begin(), L.weights.end(), 0.0);
      std::fill(L.bias.begin(), L.bias.end(), 0.0);
    }
  }
  const auto n = static_cast<double>(rows.size());
  thread_local std::vector<std::vector<double>> act;
  thread_local std::vector<std::vector<double>> delta;
  delta.resize(m.layers.size());
  double loss = 0.0;
  for (std::size_t r : rows) {
    auto xr = x.row(r);
    double logit = detail::mlp_forward(m, xr, act);
    loss += logistic_loss(logit, y[r]);
    // Backpropagate d(loss)/d(pre-activation).
    std::size_t top = m.layers.size() - 1;
    delta[top].assign(1, sigmoid(logit) - y[r]);
    for (std::size_t l = top + 1; l-- > 0;) {
      const auto& L = m.layers[l];
      auto& G = grad.layers[l];
      const double* in = l == 0 ? xr.data() : act[l].data();
      for (std::size_t o = 0; o < L.outputs; ++o) {
        double dz = delta[l][o];
        if (dz == 0.0) continue;
        double* gw = G.weights.data() + o * L.inputs;
        for (std::size_t i = 0; i < L.inputs; ++i) gw[i] += dz * in[i];
        G.bias[o] += dz;
      }
      if (l == 0) break;
      auto& prev = delta[l - 1];
      prev.assign(L.inputs, 0.0);
      for (std::size_t o = 0; o < L.outputs; ++o) {
        double dz = delta[l][o];
        if (dz == 0.0) continue;
        const double* w = L.weights.data() + o * L.inputs;
        for (std::size_t i = 0; i < L.inputs; ++i) prev[i] += dz * w[i];
      }
      for (std::size_t i = 0; i < L.inputs; ++i) {
        if (act[l][i] <= 0.0) prev[i] = 0.0;  // ReLU derivative
      }
    }
  }
  double penalty = 0.0;
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    const auto& L = m.layers[l];
    auto& G = grad.layers[l];
    for (std::size_t k = 0; k < L.weights.size(); ++k) {
      penalty += L.weights[k] * L.weights[k];
      G.weights[k] = G.weights[k] / n + alpha * L.weights[k] / n;
    }
    for (auto& b : G.bias) b /= n;
  }
  return loss / n + 0.5 * alpha * penalty / n;
}

/// Glorot-uniform weights; hidden biases start at zero and the output bias
/// at the log-odds of the training base rate.
inline MlpModel init_mlp(std::size_t inputs, std::span<const int> hidden, double base_rate, Rng& rng) {
  MlpModel m;
  std::size_t fan_in = inputs;
  std::vector<std::size_t> sizes;
  for (int h : hidden) {
    if (h < 1) fail(ErrorCode::kInvalidConfig, "hidden layer sizes must be positive");
    sizes.push_back(static_cast<std::size_t>(h));
  }
  sizes.push_back(1);
  for (std::size_t l = 0; l < sizes.size(); ++l) {
    DenseLayer L;
    L.inputs = fan_in;
    L.outputs = sizes[l];
    bool last = l + 1 == sizes.size();
    double factor = last ? 2.0 : 6.0;
    double bound = std::sqrt(factor / static_cast<double>(L.inputs + L.outputs));
    L.weights.resize(L.inputs * L.outputs);
    for (auto& w : L.weights) w = (2.0 * uniform01(rng) - 1.0) * bound;
    L.bias.assign(L.outputs, 0.0);
    if (last) {
      double p = std::clamp(base_rate, 1e-6, 1.0 - 1e-6);
      L.bias[0] = std::log(p / (1.0 - p));
    }
    m.layers.push_back(std::move(L));
    fan_in = sizes[l];
  }
  return m;
}

/// Row indices after random oversampling of the minority class to parity
/// (originals first, then the drawn duplicates).
inline std::vector<std::size_t> oversample_indices(std::span<const int> y, Rng& rng) {
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < y.size(); ++i) (y[i] ? pos : neg).push_back(i);
  std::vector<std::size_t> out(y.size());
  std::iota(out.begin(), out.end(), 0);
  auto& minority = pos.size() < neg.size() ? pos : neg;
  std::size_t deficit = std::max(pos.size(), neg.size()) - minority.size();
  if (minority.empty()) return out;
  for (std::size_t k = 0; k < deficit; ++k) out.push_back(minority[uniform_index(rng, minority.size())]);
  return out;
}

inline MlpFit fit_mlp(const Matrix& x_in, std::span<const int> y_in, const MlpParams& p, std::uint64_t seed) {
  if (x_in.rows() != y_in.size()) fail(ErrorCode::kDimensionMismatch, "X and y differ in length");
  require_both_classes(y_in);
  if (x_in.rows() < 10) fail(ErrorCode::kTooFewRows, "MLP training needs at least 10 rows");
  Rng rng(seed);

  // Optional oversampling, then a stratified validation split.
  std::vector<std::size_t> rows(x_in.rows());
  std::iota(rows.begin(), rows.end(), 0);
  if (p.balance) rows = oversample_indices(y_in, rng);
  Matrix x = select_rows(x_in, rows);
  std::vector<int> y;
  for (auto r : rows) y.push_back(y_in[r]);

  std::vector<std::size_t> train, valid;
  for (int cls = 0; cls < 2; ++cls) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (y[i] == cls) idx.push_back(i);
    }
    shuffle(idx.begin(), idx.end(), rng);
    std::size_t n_val = idx.size() >= 2
                            ? std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(p.validation_fraction *
                                                                                           static_cast<double>(idx.size()))))
                            : 0;
    valid.insert(valid.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_val));
    train.insert(train.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_val), idx.end());
  }
  std::sort(train.begin(), train.end());
  std::sort(valid.begin(), valid.end());

  double base = 0.0;
  for (auto i : train) base += y[i];
  base /= static_cast<double>(train.size());

  MlpFit fit;
  fit.model = init_mlp(x.cols(), p.hidden, base, rng);
  MlpModel best = fit.model;
  MlpModel grad;
  MlpModel m1 = zeros_like(fit.model), m2 = zeros_like(fit.model);

  const std::size_t batch = std::min(p.batch_size, train.size());
  double best_score = -1.0;
  int stale = 0;
  std::int64_t step = 0;
  std::vector<std::size_t> batch_rows;

  for (int epoch = 0; epoch < p.max_epochs; ++epoch) {
    shuffle(train.begin(), train.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < train.size(); start += batch) {
      std::size_t end = std::min(train.size(), start + batch);
      batch_rows.assign(train.begin() + static_cast<std::ptrdiff_t>(start),
                        train.begin() + static_cast<std::ptrdiff_t>(end));
      double loss = mlp_loss_and_gradient(fit.model, x, y, batch_rows, p.alpha, grad);
      epoch_loss += loss * static_cast<double>(end - start);
      ++step;
      double c1 = 1.0 - std::pow(p.beta1, static_cast<double>(step));
      double c2 = 1.0 - std::pow(p.beta2, static_cast<double>(step));
      double lr = p.learning_rate * std::sqrt(c2) / c1;
      auto update = [&](std::vector<double>& param, const std::vector<double>& g, std::vector<double>& mom1,
                        std::vector<double>& mom2) {
        for (std::size_t k = 0; k < param.size(); ++k) {
          mom1[k] = p.beta1 * mom1[k] + (1.0 - p.beta1) * g[k];
          mom2[k] = p.beta2 * mom2[k] + (1.0 - p.beta2) * g[k] * g[k];
          param[k] -= lr * mom1[k] / (std::sqrt(mom2[k]) + p.epsilon);
        }
      };
      for (std::size_t l = 0; l < fit.model.layers.size(); ++l) {
        update(fit.model.layers[l].weights, grad.layers[l].weights, m1.layers[l].weights, m2.layers[l].weights);
        update(fit.model.layers[l].bias, grad.layers[l].bias, m1.layers[l].bias, m2.layers[l].bias);
      }
    }
    fit.train_loss.push_back(epoch_loss / static_cast<double>(train.size()));

    std::size_t hits = 0;
    for (auto i : valid) hits += (fit.model.predict(x.row(i)) >= 0.5) == (y[i] == 1);
    double score = valid.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(valid.size());
    fit.validation_score.push_back(score);
    if (score > best_score + p.tolerance) {
      best_score = score;
      best = fit.model;
      fit.best_epoch = epoch;
      stale = 0;
    } else if (++stale >= p.patience) {
      break;
    }
  }
  fit.model = std::move(best);
  return fit;
}

inline MlpModel train_mlp(const Matrix& x, std::span<const int> y, const MlpParams& p, std::uint64_t seed) {
  return fit_mlp(x, y, p, seed).model;
}

}  // namespace entprof
