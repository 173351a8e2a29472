/*
 * Copyright 2026 The RLAD Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

// Single-layer LSTM Q-network with a linear two-action head. Gradients are
// derived by hand (backpropagation through time) for this architecture only.
//
// Gate rows are stacked in the order input, forget, cell, output: row block
// g of `w_in`, `w_rec` and `bias` belongs to gate g.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "rlad/common.hpp"

namespace rlad {

enum class Gate : int { kInput = 0, kForget = 1, kCell = 2, kOutput = 3 };

template <typename Scalar>
struct QNetParams {
  Index hidden = 0;
  VectorX<Scalar> w_in;   // 4h x 1 (one scalar input per step)
  MatrixX<Scalar> w_rec;  // 4h x h
  VectorX<Scalar> bias;   // 4h
  MatrixX<Scalar> w_out;  // 2 x h
  VectorX<Scalar> b_out;  // 2

  static QNetParams zeros(Index hidden_size) {
    QNetParams p;
    p.hidden = hidden_size;
    p.w_in = VectorX<Scalar>::Zero(4 * hidden_size);
    p.w_rec = MatrixX<Scalar>::Zero(4 * hidden_size, hidden_size);
    p.bias = VectorX<Scalar>::Zero(4 * hidden_size);
    p.w_out = MatrixX<Scalar>::Zero(2, hidden_size);
    p.b_out = VectorX<Scalar>::Zero(2);
    return p;
  }

  auto gate_input_weights(Gate g) { return w_in.segment(static_cast<int>(g) * hidden, hidden); }
  auto gate_input_weights(Gate g) const { return w_in.segment(static_cast<int>(g) * hidden, hidden); }
  auto gate_recurrent_weights(Gate g) { return w_rec.middleRows(static_cast<int>(g) * hidden, hidden); }
  auto gate_recurrent_weights(Gate g) const { return w_rec.middleRows(static_cast<int>(g) * hidden, hidden); }
  auto gate_bias(Gate g) { return bias.segment(static_cast<int>(g) * hidden, hidden); }
  auto gate_bias(Gate g) const { return bias.segment(static_cast<int>(g) * hidden, hidden); }

  Index num_parameters() const {
    return w_in.size() + w_rec.size() + bias.size() + w_out.size() + b_out.size();
  }

  bool all_finite() const {
    return w_in.allFinite() && w_rec.allFinite() && bias.allFinite() &&
           w_out.allFinite() && b_out.allFinite();
  }

  bool same_shape(const QNetParams& o) const {
    return hidden == o.hidden && w_in.size() == o.w_in.size() &&
           w_rec.rows() == o.w_rec.rows() && w_rec.cols() == o.w_rec.cols() &&
           bias.size() == o.bias.size() && w_out.rows() == o.w_out.rows() &&
           w_out.cols() == o.w_out.cols() && b_out.size() == o.b_out.size();
  }

  // Visits the five arrays of this and `other` pairwise, in a fixed order.
  template <typename Other, typename Fn>
  void zip(Other& other, Fn&& fn) {
    fn(w_in, other.w_in);
    fn(w_rec, other.w_rec);
    fn(bias, other.bias);
    fn(w_out, other.w_out);
    fn(b_out, other.b_out);
  }

  template <typename Fn>
  void for_each(Fn&& fn) {
    fn(w_in);
    fn(w_rec);
    fn(bias);
    fn(w_out);
    fn(b_out);
  }
  template <typename Fn>
  void for_each(Fn&& fn) const {
    fn(w_in);
    fn(w_rec);
    fn(bias);
    fn(w_out);
    fn(b_out);
  }

  VectorX<Scalar> flatten() const {
    VectorX<Scalar> out(num_parameters());
    Index at = 0;
    for_each([&](const auto& a) {
      out.segment(at, a.size()) = a.reshaped();
      at += a.size();
    });
    return out;
  }

  void unflatten(const Eigen::Ref<const VectorX<Scalar>>& flat) {
    if (flat.size() != num_parameters()) throw ShapeError("flat parameter size mismatch");
    Index at = 0;
    for_each([&](auto& a) {
      a.reshaped() = flat.segment(at, a.size());
      at += a.size();
    });
  }

  Scalar squared_norm() const {
    Scalar s = 0;
    for_each([&](const auto& a) { s += a.squaredNorm(); });
    return s;
  }

  bool operator==(const QNetParams& o) const {
    return same_shape(o) && w_in == o.w_in && w_rec == o.w_rec &&
           bias == o.bias && w_out == o.w_out && b_out == o.b_out;
  }
};

using QNet = QNetParams<double>;

// Weights uniform in [-1/sqrt(h), 1/sqrt(h)], forget-gate bias 1, other
// biases 0.
template <typename Scalar>
QNetParams<Scalar> qnet_init(Index hidden_size, std::uint64_t seed) {
  if (hidden_size < 1) throw ParameterError("hidden size must be >= 1");
  auto p = QNetParams<Scalar>::zeros(hidden_size);
  std::mt19937_64 rng(seed);
  const double k = 1.0 / std::sqrt(static_cast<double>(hidden_size));
  std::uniform_real_distribution<double> dist(-k, k);
  auto fill = [&](auto& a) {
    for (Index i = 0; i < a.size(); ++i) a.data()[i] = static_cast<Scalar>(dist(rng));
  };
  fill(p.w_in);
  fill(p.w_rec);
  fill(p.w_out);
  p.gate_bias(Gate::kForget).setOnes();
  return p;
}

// Activations of one forward pass over a batch of windows (columns).
template <typename Scalar>
struct ForwardCache {
  MatrixX<Scalar> inputs;               // omega x B
  std::vector<MatrixX<Scalar>> gates;   // per step, 4h x B, post-activation
  std::vector<MatrixX<Scalar>> cells;   // per step, h x B
  std::vector<MatrixX<Scalar>> hiddens; // per step, h x B
  MatrixX<Scalar> q;                    // 2 x B

  Index steps() const { return static_cast<Index>(hiddens.size()); }
};

namespace detail {

template <typename Derived>
auto sigmoid(const Eigen::ArrayBase<Derived>& x) {
  using S = typename Derived::Scalar;
  return (S(1) + (-x).exp()).inverse();
}

}  // namespace detail

// Batched forward pass; windows are the columns of `windows`. Initial
// hidden and cell states are zero.
template <typename Scalar>
ForwardCache<Scalar> qnet_forward_batch(const QNetParams<Scalar>& p,
                                        const MatrixX<Scalar>& windows) {
  if (!windows.allFinite()) throw NumericError("non-finite network input");
  const Index h = p.hidden;
  const Index batch = windows.cols();
  const Index steps = windows.rows();

  ForwardCache<Scalar> c;
  c.inputs = windows;
  c.gates.reserve(static_cast<std::size_t>(steps));
  c.cells.reserve(static_cast<std::size_t>(steps));
  c.hiddens.reserve(static_cast<std::size_t>(steps));

  MatrixX<Scalar> h_prev = MatrixX<Scalar>::Zero(h, batch);
  MatrixX<Scalar> c_prev = MatrixX<Scalar>::Zero(h, batch);
  MatrixX<Scalar> z(4 * h, batch);
  for (Index t = 0; t < steps; ++t) {
    z.noalias() = p.w_in * windows.row(t);
    z.noalias() += p.w_rec * h_prev;
    z.colwise() += p.bias;

    MatrixX<Scalar> a(4 * h, batch);
    a.topRows(2 * h) = detail::sigmoid(z.topRows(2 * h).array()).matrix();
    a.middleRows(2 * h, h) = z.middleRows(2 * h, h).array().tanh().matrix();
    a.bottomRows(h) = detail::sigmoid(z.bottomRows(h).array()).matrix();

    const auto i = a.topRows(h).array();
    const auto f = a.middleRows(h, h).array();
    const auto g = a.middleRows(2 * h, h).array();
    const auto o = a.bottomRows(h).array();
    MatrixX<Scalar> cell = (f * c_prev.array() + i * g).matrix();
    MatrixX<Scalar> hid = (o * cell.array().tanh()).matrix();

    c.gates.push_back(std::move(a));
    c.cells.push_back(cell);
    c.hiddens.push_back(hid);
    c_prev = std::move(cell);
    h_prev = std::move(hid);
  }
  c.q = p.w_out * h_prev;
  c.q.colwise() += p.b_out;
  return c;
}

// Q-values only, 2 x B. Evaluated in column chunks so large pools do not
// materialize a full activation cache.
template <typename Scalar>
MatrixX<Scalar> qnet_q_values(const QNetParams<Scalar>& p,
                              const MatrixX<Scalar>& windows) {
  constexpr Index kChunk = 256;
  if (windows.cols() <= kChunk) return qnet_forward_batch(p, windows).q;
  MatrixX<Scalar> q(2, windows.cols());
  for (Index start = 0; start < windows.cols(); start += kChunk) {
    const Index len = std::min(kChunk, windows.cols() - start);
    q.middleCols(start, len) =
        qnet_forward_batch(p, MatrixX<Scalar>(windows.middleCols(start, len))).q;
  }
  return q;
}

template <typename Scalar>
struct QValues {
  Scalar q0;
  Scalar q1;
};

template <typename Scalar>
struct ForwardResult {
  Scalar q0;
  Scalar q1;
  ForwardCache<Scalar> cache;
};

template <typename Scalar>
ForwardResult<Scalar> qnet_forward(const QNetParams<Scalar>& p,
                                   const VectorX<Scalar>& window) {
  auto cache = qnet_forward_batch(p, MatrixX<Scalar>(window));
  const Scalar q0 = cache.q(0, 0);
  const Scalar q1 = cache.q(1, 0);
  return {q0, q1, std::move(cache)};
}

// A minibatch for the squared TD loss: windows as columns, chosen action
// and regression target per column.
template <typename Scalar>
struct TrainingBatch {
  MatrixX<Scalar> windows;
  std::vector<int> actions;
  VectorX<Scalar> targets;

  Index size() const { return windows.cols(); }
};

template <typename Scalar>
struct LossGrad {
  Scalar loss;
  QNetParams<Scalar> grads;
};

// loss = mean_b (Q(s_b, a_b) - target_b)^2 and its exact gradient.
template <typename Scalar>
LossGrad<Scalar> qnet_loss_grad(const QNetParams<Scalar>& p,
                                const TrainingBatch<Scalar>& batch) {
  const Index n = batch.size();
  if (n == 0) throw SizeError("empty training batch");
  if (static_cast<Index>(batch.actions.size()) != n || batch.targets.size() != n) {
    throw ShapeError("training batch columns disagree");
  }
  const Index h = p.hidden;
  const auto cache = qnet_forward_batch(p, batch.windows);

  // dL/dq: only the chosen action's output carries error.
  MatrixX<Scalar> dq = MatrixX<Scalar>::Zero(2, n);
  Scalar loss = 0;
  for (Index b = 0; b < n; ++b) {
    const int a = batch.actions[static_cast<std::size_t>(b)];
    if (a != 0 && a != 1) throw ParameterError("action must be 0 or 1");
    const Scalar err = cache.q(a, b) - batch.targets(b);
    loss += err * err;
    dq(a, b) = Scalar(2) * err / static_cast<Scalar>(n);
  }
  loss /= static_cast<Scalar>(n);

  auto g = QNetParams<Scalar>::zeros(h);
  const Index steps = cache.steps();
  g.w_out.noalias() = dq * cache.hiddens.back().transpose();
  g.b_out = dq.rowwise().sum();

  MatrixX<Scalar> dh = p.w_out.transpose() * dq;
  MatrixX<Scalar> dc = MatrixX<Scalar>::Zero(h, n);
  MatrixX<Scalar> dz(4 * h, n);
  for (Index t = steps - 1; t >= 0; --t) {
    const auto& a = cache.gates[static_cast<std::size_t>(t)];
    const auto i = a.topRows(h).array();
    const auto f = a.middleRows(h, h).array();
    const auto gg = a.middleRows(2 * h, h).array();
    const auto o = a.bottomRows(h).array();
    const auto tanh_c = cache.cells[static_cast<std::size_t>(t)].array().tanh();
    const MatrixX<Scalar> c_prev =
        t > 0 ? cache.cells[static_cast<std::size_t>(t - 1)]
              : MatrixX<Scalar>::Zero(h, n);

    dc.array() += dh.array() * o * (Scalar(1) - tanh_c.square());
    dz.topRows(h) = (dc.array() * gg * i * (Scalar(1) - i)).matrix();
    dz.middleRows(h, h) = (dc.array() * c_prev.array() * f * (Scalar(1) - f)).matrix();
    dz.middleRows(2 * h, h) = (dc.array() * i * (Scalar(1) - gg.square())).matrix();
    dz.bottomRows(h) = (dh.array() * tanh_c * o * (Scalar(1) - o)).matrix();

    g.w_in.noalias() += dz * cache.inputs.row(t).transpose();
    if (t > 0) {
      g.w_rec.noalias() += dz * cache.hiddens[static_cast<std::size_t>(t - 1)].transpose();
    }
    g.bias += dz.rowwise().sum();

    dh.noalias() = p.w_rec.transpose() * dz;
    dc.array() *= f;
  }
  return {loss, std::move(g)};
}

template <typename Scalar>
Scalar qnet_loss(const QNetParams<Scalar>& p, const TrainingBatch<Scalar>& batch) {
  const auto q = qnet_q_values(p, batch.windows);
  Scalar loss = 0;
  for (Index b = 0; b < batch.size(); ++b) {
    const Scalar err = q(batch.actions[static_cast<std::size_t>(b)], b) - batch.targets(b);
    loss += err * err;
  }
  return loss / static_cast<Scalar>(batch.size());
}

template <typename Scalar>
struct AdamState {
  QNetParams<Scalar> m;
  QNetParams<Scalar> v;
  std::int64_t step = 0;
  Scalar beta1 = Scalar(0.9);
  Scalar beta2 = Scalar(0.999);
  Scalar epsilon = Scalar(1e-8);

  static AdamState like(const QNetParams<Scalar>& p) {
    AdamState s;
    s.m = QNetParams<Scalar>::zeros(p.hidden);
    s.v = QNetParams<Scalar>::zeros(p.hidden);
    return s;
  }

  bool all_finite() const { return m.all_finite() && v.all_finite(); }
};

// Rescales `grads` so its global L2 norm is at most max_norm. Returns the
// norm before clipping.
template <typename Scalar>
Scalar clip_grad_norm(QNetParams<Scalar>& grads, Scalar max_norm) {
  const Scalar norm = std::sqrt(grads.squared_norm());
  if (norm > max_norm && norm > Scalar(0)) {
    const Scalar scale = max_norm / norm;
    grads.for_each([&](auto& a) { a *= scale; });
  }
  return norm;
}

// One bias-corrected adaptive-moment update, in place.
template <typename Scalar>
void adam_step(QNetParams<Scalar>& params, const QNetParams<Scalar>& grads,
               AdamState<Scalar>& state, Scalar lr) {
  if (!params.same_shape(grads) || !params.same_shape(state.m)) {
    throw ShapeError("optimizer shapes do not match parameters");
  }
  ++state.step;
  const Scalar bc1 = Scalar(1) - std::pow(state.beta1, static_cast<Scalar>(state.step));
  const Scalar bc2 = Scalar(1) - std::pow(state.beta2, static_cast<Scalar>(state.step));
  const Scalar b1 = state.beta1;
  const Scalar b2 = state.beta2;
  const Scalar eps = state.epsilon;

  auto update = [&](auto& w, const auto& g, auto& m, auto& v) {
    m = b1 * m + (Scalar(1) - b1) * g;
    v = b2 * v + (Scalar(1) - b2) * g.cwiseAbs2();
    w.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + eps);
  };
  update(params.w_in, grads.w_in, state.m.w_in, state.v.w_in);
  update(params.w_rec, grads.w_rec, state.m.w_rec, state.v.w_rec);
  update(params.bias, grads.bias, state.m.bias, state.v.bias);
  update(params.w_out, grads.w_out, state.m.w_out, state.v.w_out);
  update(params.b_out, grads.b_out, state.m.b_out, state.v.b_out);
}

// Target-network copy. Parameters are value types, so this is a deep copy.
template <typename Scalar>
QNetParams<Scalar> target_sync(const QNetParams<Scalar>& eval_params) {
  return eval_params;
}

}  // namespace rlad
