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

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "rlad/qnet.hpp"
#include "support.hpp"

namespace rlad {
namespace {

using testing::random_window;
using testing::reference_q;
using testing::max_gradient_error;
using testing::random_batch;
using testing::to_std;

TEST(Init, DeterministicWithForgetBiasOne) {
  const auto a = qnet_init<double>(64, 3);
  const auto b = qnet_init<double>(64, 3);
  EXPECT_TRUE(a == b);
  EXPECT_TRUE(a.all_finite());
  EXPECT_TRUE((a.gate_bias(Gate::kForget).array() == 1.0).all());
  EXPECT_TRUE((a.gate_bias(Gate::kInput).array() == 0.0).all());
  EXPECT_FALSE(a == qnet_init<double>(64, 4));
  const double bound = 1.0 / 8.0;
  EXPECT_LE(a.w_rec.cwiseAbs().maxCoeff(), bound);
}

TEST(Init, ParameterCount) {
  EXPECT_EQ(qnet_init<double>(1, 0).num_parameters(), 16);
  EXPECT_EQ(qnet_init<double>(4, 0).num_parameters(), 4 * 4 * (1 + 4 + 1) + 2 * 4 + 2);
  EXPECT_THROW(qnet_init<double>(0, 0), ParameterError);
}

TEST(Forward, ZeroWeightsGiveOutputBias) {
  auto p = QNet::zeros(3);
  p.b_out << 0.3, -0.2;
  std::mt19937_64 rng(1);
  for (int i = 0; i < 5; ++i) {
    const auto r = qnet_forward(p, random_window(7, rng));
    EXPECT_EQ(r.q0, 0.3);
    EXPECT_EQ(r.q1, -0.2);
  }
}

TEST(Forward, MatchesStepByStepRecurrence) {
  std::mt19937_64 rng(5);
  auto p = qnet_init<double>(2, 9);
  p.bias.setRandom();
  p.b_out.setRandom();
  const VectorXd zeros = VectorXd::Zero(10);
  const auto r = qnet_forward(p, zeros);
  const auto [q0, q1] = reference_q(p, to_std(zeros));
  EXPECT_NEAR(r.q0, q0, 1e-14);
  EXPECT_NEAR(r.q1, q1, 1e-14);

  for (Index h : {1, 3, 8}) {
    const auto params = qnet_init<double>(h, static_cast<std::uint64_t>(h));
    for (int k = 0; k < 5; ++k) {
      const auto w = random_window(12, rng);
      const auto got = qnet_forward(params, w);
      const auto want = reference_q(params, to_std(w));
      EXPECT_NEAR(got.q0, want.first, 1e-12);
      EXPECT_NEAR(got.q1, want.second, 1e-12);
    }
  }
}

TEST(Forward, PureAndBatchConsistent) {
  std::mt19937_64 rng(8);
  const auto p = qnet_init<double>(6, 1);
  MatrixXd windows(9, 600);
  for (Index j = 0; j < windows.cols(); ++j) windows.col(j) = random_window(9, rng);
  const MatrixXd q = qnet_q_values(p, windows);  // crosses the chunk boundary
  for (Index j : {0, 255, 256, 599}) {
    const VectorXd w = windows.col(j);
    const auto a = qnet_forward(p, w);
    const auto b = qnet_forward(p, w);
    EXPECT_EQ(a.q0, b.q0);
    EXPECT_EQ(a.q1, b.q1);
    EXPECT_NEAR(q(0, j), a.q0, 1e-13);
    EXPECT_NEAR(q(1, j), a.q1, 1e-13);
  }
}

TEST(Forward, RejectsNonFinite) {
  VectorXd w = VectorXd::Zero(4);
  w(2) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(qnet_forward(qnet_init<double>(2, 0), w), NumericError);
}

TEST(LossGrad, MatchesFiniteDifferences) {
  std::mt19937_64 rng(77);
  const auto p = qnet_init<double>(4, 11);
  const auto batch = random_batch(6, 3, rng);
  EXPECT_LT(max_gradient_error(p, batch), 1e-4);
}

TEST(LossGrad, MatchesFiniteDifferencesAcrossShapes) {
  std::mt19937_64 rng(2024);
  int configs = 0;
  for (Index h : {2, 4, 8}) {
    for (std::size_t omega : {3u, 6u, 10u}) {
      auto p = qnet_init<double>(h, rng());
      p.bias.setRandom();
      p.b_out.setRandom();
      const auto batch = random_batch(omega, 4, rng);
      EXPECT_LT(max_gradient_error(p, batch), 1e-4) << "h=" << h << " omega=" << omega;
      ++configs;
    }
  }
  EXPECT_EQ(configs, 9);
}

TEST(LossGrad, ZeroAtTarget) {
  std::mt19937_64 rng(3);
  const auto p = qnet_init<double>(3, 2);
  auto batch = random_batch(5, 4, rng);
  const MatrixXd q = qnet_q_values(p, batch.windows);
  for (Index j = 0; j < batch.size(); ++j) batch.targets(j) = q(batch.actions[j], j);
  const auto lg = qnet_loss_grad(p, batch);
  EXPECT_EQ(lg.loss, 0.0);
  EXPECT_EQ(lg.grads.squared_norm(), 0.0);
}

TEST(LossGrad, DuplicatingBatchChangesNothing) {
  std::mt19937_64 rng(4);
  const auto p = qnet_init<double>(3, 5);
  const auto batch = random_batch(5, 3, rng);
  TrainingBatch<double> twice;
  twice.windows.resize(5, 6);
  twice.windows << batch.windows, batch.windows;
  twice.actions = batch.actions;
  twice.actions.insert(twice.actions.end(), batch.actions.begin(), batch.actions.end());
  twice.targets.resize(6);
  twice.targets << batch.targets, batch.targets;
  const auto a = qnet_loss_grad(p, batch);
  const auto b = qnet_loss_grad(p, twice);
  EXPECT_NEAR(a.loss, b.loss, 1e-14);
  EXPECT_LT((a.grads.flatten() - b.grads.flatten()).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_GE(a.loss, 0.0);
}

TEST(LossGrad, BatchErrors) {
  TrainingBatch<double> empty;
  empty.windows.resize(3, 0);
  EXPECT_THROW(qnet_loss_grad(qnet_init<double>(2, 0), empty), SizeError);
  std::mt19937_64 rng(1);
  auto bad = random_batch(3, 2, rng);
  bad.actions[0] = 2;
  EXPECT_THROW(qnet_loss_grad(qnet_init<double>(2, 0), bad), ParameterError);
  bad.actions.pop_back();
  EXPECT_THROW(qnet_loss_grad(qnet_init<double>(2, 0), bad), ShapeError);
}

TEST(Adam, ZeroGradientAndZeroRate) {
  auto p = qnet_init<double>(3, 1);
  const auto before = p;
  auto state = AdamState<double>::like(p);
  adam_step(p, QNet::zeros(3), state, 1e-3);
  EXPECT_TRUE(p == before);
  EXPECT_EQ(state.step, 1);

  std::mt19937_64 rng(2);
  const auto batch = random_batch(4, 3, rng);
  adam_step(p, qnet_loss_grad(p, batch).grads, state, 0.0);
  EXPECT_TRUE(p == before);
}

TEST(Adam, FirstStepSizeIsLearningRate) {
  // m1 = 0.1 g, v1 = 0.001 g^2; bias-corrected m/sqrt(v) = sign(g), so the
  // first move is lr * 1 / (1 + eps / |g|).
  auto p = QNet::zeros(1);
  auto g = QNet::zeros(1);
  g.for_each([](auto& a) { a.setOnes(); });
  auto state = AdamState<double>::like(p);
  adam_step(p, g, state, 0.01);
  const double expected = -0.01 / (1.0 + 1e-8);
  p.for_each([&](auto& a) {
    for (Index i = 0; i < a.size(); ++i) EXPECT_NEAR(a.data()[i], expected, 1e-15);
  });
  adam_step(p, g, state, 0.01);
  p.for_each([&](auto& a) { EXPECT_NEAR(a.data()[0], 2 * expected, 1e-12); });
}

TEST(Adam, SmallStepDoesNotIncreaseLoss) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    auto p = qnet_init<double>(4, rng());
    const auto batch = random_batch(6, 8, rng);
    auto state = AdamState<double>::like(p);
    const auto lg = qnet_loss_grad(p, batch);
    adam_step(p, lg.grads, state, 1e-4);
    EXPECT_LE(qnet_loss(p, batch), lg.loss);
  }
}

TEST(Adam, ShapeMismatch) {
  auto p = qnet_init<double>(3, 1);
  auto state = AdamState<double>::like(p);
  EXPECT_THROW(adam_step(p, QNet::zeros(2), state, 1e-3), ShapeError);
}

TEST(ClipGradNorm, RescalesOnlyAboveThreshold) {
  auto g = QNet::zeros(2);
  g.b_out << 3.0, 4.0;
  EXPECT_DOUBLE_EQ(clip_grad_norm(g, 10.0), 5.0);
  EXPECT_EQ(g.b_out(1), 4.0);
  clip_grad_norm(g, 1.0);
  EXPECT_NEAR(std::sqrt(g.squared_norm()), 1.0, 1e-15);
}

TEST(TargetSync, CopySemantics) {
  auto eval = qnet_init<double>(4, 6);
  const auto target = target_sync(eval);
  EXPECT_TRUE(target == eval);
  EXPECT_TRUE(target_sync(eval) == target);
  std::mt19937_64 rng(1);
  const auto w = random_window(5, rng);
  EXPECT_EQ(qnet_forward(target, w).q1, qnet_forward(eval, w).q1);
  eval.w_out.setZero();
  EXPECT_FALSE(target == eval);
  EXPECT_NE(target.w_out.norm(), 0.0);
}

TEST(Flatten, RoundTrip) {
  const auto p = qnet_init<double>(5, 2);
  auto q = QNet::zeros(5);
  q.unflatten(p.flatten());
  EXPECT_TRUE(p == q);
  EXPECT_EQ(p.flatten().size(), p.num_parameters());
}

TEST(Scalar, FloatInstantiation) {
  const auto pf = qnet_init<float>(3, 1);
  const auto pd = qnet_init<double>(3, 1);
  VectorX<float> wf = VectorX<float>::Constant(5, 0.25f);
  const auto rf = qnet_forward(pf, wf);
  const auto rd = qnet_forward(pd, VectorXd(VectorXd::Constant(5, 0.25)));
  EXPECT_NEAR(rf.q0, rd.q0, 1e-5);
}

}  // namespace
}  // namespace rlad
