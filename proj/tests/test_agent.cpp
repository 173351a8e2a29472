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

#include <array>
#include <random>
#include <set>

#include "rlad/agent.hpp"
#include "support.hpp"

namespace rlad {
namespace {

// Upper 1% point of the chi-square distribution with 9 degrees of freedom.
constexpr double kChiSquare9At001 = 21.666;

WindowState labeled_window(std::size_t omega, double fill, Label label, std::size_t end) {
  WindowState w;
  w.values = VectorXd::Constant(static_cast<Index>(omega), fill);
  w.end_index = end;
  w.label = label;
  w.label_source = LabelSource::kHuman;
  return w;
}

Transition tagged(std::size_t tag) {
  Transition t;
  t.state = labeled_window(2, 0.0, Label::kNormal, tag);
  return t;
}

TEST(Reward, TruthTable) {
  EXPECT_EQ(reward(1, 1, 5, 1), 5.0);
  EXPECT_EQ(reward(0, 0, 5, 1), 1.0);
  EXPECT_EQ(reward(0, 1, 5, 1), -5.0);
  EXPECT_EQ(reward(1, 0, 5, 1), -1.0);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.01, 100.0);
  for (int i = 0; i < 100; ++i) {
    const double r1 = u(rng), r2 = u(rng);
    EXPECT_EQ(reward(1, 1, r1, r2), r1);
    EXPECT_EQ(reward(0, 0, r1, r2), r2);
    EXPECT_EQ(reward(0, 1, r1, r2), -r1);
    EXPECT_EQ(reward(1, 0, r1, r2), -r2);
  }
}

TEST(SelectAction, GreedyAndTies) {
  EXPECT_EQ(greedy_action(0.2, 0.9), 1);
  EXPECT_EQ(greedy_action(0.4, 0.4), 0);
  EXPECT_EQ(greedy_action(0.9, 0.2), 0);

  auto p = QNet::zeros(2);
  Rng rng(1);
  const auto w = labeled_window(4, 0.3, Label::kNormal, 0);
  p.b_out << 0.2, 0.9;
  EXPECT_EQ(select_action(p, w, 0.0, rng), 1);
  p.b_out << 0.4, 0.4;
  EXPECT_EQ(select_action(p, w, 0.0, rng), 0);
  EXPECT_THROW(select_action(p, w, 1.5, rng), ParameterError);
}

TEST(SelectAction, FullExplorationIsFair) {
  auto p = QNet::zeros(2);
  p.b_out << 10.0, -10.0;
  Rng rng(12345);
  const auto w = labeled_window(4, 0.3, Label::kNormal, 0);
  int ones = 0;
  for (int i = 0; i < 10000; ++i) ones += select_action(p, w, 1.0, rng);
  EXPECT_GE(ones, 4700);
  EXPECT_LE(ones, 5300);
}

TEST(SelectAction, GreedyIsPure) {
  const auto p = qnet_init<double>(4, 2);
  Rng a(1), b(999);
  std::mt19937_64 gen(3);
  for (int i = 0; i < 20; ++i) {
    WindowState w = labeled_window(6, 0.0, Label::kNormal, 0);
    w.values = testing::random_window(6, gen);
    EXPECT_EQ(select_action(p, w, 0.0, a), select_action(p, w, 0.0, b));
  }
}

TEST(EpsilonSchedule, MonotoneAndFloored) {
  EpsilonSchedule s{1.0, 0.001, 0.05, 0};
  EXPECT_EQ(s.value(), 1.0);
  double prev = s.value();
  for (int i = 0; i < 2000; ++i) {
    s.advance();
    ASSERT_LE(s.value(), prev);
    ASSERT_GE(s.value(), 0.05);
    prev = s.value();
  }
  EXPECT_EQ(s.value(), 0.05);
}

TEST(Replay, FifoEviction) {
  ReplayMemory m(1000);
  replay_push(m, tagged(0));
  EXPECT_EQ(m.size(), 1u);
  for (std::size_t k = 1; k <= 1000; ++k) replay_push(m, tagged(k));
  EXPECT_EQ(m.size(), 1000u);
  EXPECT_EQ(m.at(0).state.end_index, 1u);  // tag 0 is gone
  EXPECT_EQ(m.at(999).state.end_index, 1000u);
}

TEST(Replay, FifoLawOverManyCapacities) {
  for (std::size_t n : {1u, 3u, 10u, 64u}) {
    for (std::size_t k : {0u, 1u, 5u, 130u}) {
      ReplayMemory m(n);
      for (std::size_t tag = 1; tag <= n + k; ++tag) m.push(tagged(tag));
      ASSERT_EQ(m.size(), n);
      for (std::size_t i = 0; i < n; ++i) ASSERT_EQ(m.at(i).state.end_index, k + 1 + i);
    }
  }
}

TEST(Replay, PartialFillKeepsInsertionOrder) {
  ReplayMemory m(10);
  for (std::size_t tag = 0; tag < 7; ++tag) m.push(tagged(tag));
  for (std::size_t i = 0; i < 7; ++i) EXPECT_EQ(m.at(i).state.end_index, i);
  EXPECT_THROW(m.at(7), SizeError);
}

TEST(Replay, SamplingModes) {
  Rng rng(5);
  ReplayMemory big(1000);
  for (std::size_t tag = 0; tag < 1000; ++tag) big.push(tagged(tag));
  const auto idx = big.sample_indices(32, rng);
  EXPECT_EQ(idx.size(), 32u);
  EXPECT_EQ(std::set<std::size_t>(idx.begin(), idx.end()).size(), 32u);

  ReplayMemory small(10);
  for (std::size_t tag = 0; tag < 3; ++tag) small.push(tagged(tag));
  const auto drawn = replay_sample(small, 32, rng);
  EXPECT_EQ(drawn.size(), 32u);
  for (const auto& t : drawn) EXPECT_LT(t.state.end_index, 3u);

  ReplayMemory none(4);
  EXPECT_THROW(none.sample_indices(1, rng), StateError);
}

TEST(Replay, UniformityChiSquare) {
  ReplayMemory m(10);
  for (std::size_t tag = 0; tag < 10; ++tag) m.push(tagged(tag));
  for (std::size_t batch : {1u, 32u}) {
    Rng rng(2718);
    std::array<double, 10> counts{};
    const int draws = 100000;
    int total = 0;
    while (total < draws) {
      for (auto i : m.sample_indices(batch, rng)) {
        if (total == draws) break;
        counts[i] += 1;
        ++total;
      }
    }
    double chi2 = 0.0;
    for (double c : counts) chi2 += (c - draws / 10.0) * (c - draws / 10.0) / (draws / 10.0);
    EXPECT_LT(chi2, kChiSquare9At001) << "batch " << batch;
  }
}

TEST(ComputeTarget, TerminalAndBootstrap) {
  AgentConfig cfg;
  auto target = QNet::zeros(2);
  target.b_out << 0.5, 2.0;

  Transition t;
  t.state = labeled_window(3, 0.1, Label::kAnomaly, 0);
  t.reward = 5.0;
  EXPECT_EQ(compute_target(cfg, target, t), 5.0);

  t.reward = 1.0;
  t.next_state = labeled_window(3, 0.2, Label::kNormal, 1);
  EXPECT_DOUBLE_EQ(compute_target(cfg, target, t), 2.6);

  cfg.gamma = 0.0;
  EXPECT_EQ(compute_target(cfg, target, t), 1.0);
}

TEST(ComputeTarget, StaleBetweenSyncs) {
  DqnAgent agent(qnet_init<double>(4, 1), AgentConfig{}, 100, EpsilonSchedule{}, 3);
  Transition t;
  t.state = labeled_window(5, 0.1, Label::kNormal, 0);
  t.reward = 1.0;
  t.next_state = labeled_window(5, 0.7, Label::kNormal, 1);
  const double before = compute_target(agent.config, agent.target, t);
  agent.eval.w_out.setRandom();
  EXPECT_EQ(compute_target(agent.config, agent.target, t), before);
}

TEST(TrainEpoch, SingleWindow) {
  DqnAgent agent(qnet_init<double>(4, 1), AgentConfig{}, 100, EpsilonSchedule{}, 3);
  const std::vector<WindowState> stream{labeled_window(5, 0.5, Label::kNormal, 4)};
  const auto m = dqn_train_epoch(agent, stream);
  EXPECT_EQ(m.steps, 1u);
  EXPECT_EQ(agent.memory.size(), 1u);
  EXPECT_TRUE(agent.memory.at(0).terminal());
  EXPECT_EQ(agent.optimizer.step, 1);
  EXPECT_EQ(agent.schedule.t, 1);
}

TEST(TrainEpoch, SyncCadence) {
  AgentConfig cfg;
  cfg.sync_every = 100;
  DqnAgent agent(qnet_init<double>(2, 1), cfg, 1000, EpsilonSchedule{}, 3);
  std::vector<WindowState> stream;
  for (std::size_t k = 0; k < 250; ++k) {
    stream.push_back(labeled_window(3, 0.01 * static_cast<double>(k % 50),
                                    k % 10 == 0 ? Label::kAnomaly : Label::kNormal, k));
  }
  const auto m = dqn_train_epoch(agent, stream);
  EXPECT_EQ(m.steps, 250u);
  EXPECT_EQ(m.syncs, 2u);
  EXPECT_EQ(agent.syncs, 2);
  EXPECT_EQ(agent.memory.size(), 250u);
  EXPECT_TRUE(agent.memory.at(249).terminal());
  EXPECT_FALSE(agent.memory.at(0).terminal());
  EXPECT_EQ(agent.memory.at(0).next_state->end_index, 1u);
}

TEST(TrainEpoch, RejectsUnlabeledAndSkipsEmpty) {
  DqnAgent agent(qnet_init<double>(2, 1), AgentConfig{}, 10, EpsilonSchedule{}, 3);
  EXPECT_EQ(dqn_train_epoch(agent, std::vector<WindowState>{}).steps, 0u);
  WindowState w = labeled_window(3, 0.1, Label::kUnknown, 0);
  w.label_source = LabelSource::kNone;
  EXPECT_THROW(dqn_train_epoch(agent, std::vector<WindowState>{w}), PreconditionError);
}

TEST(TrainEpoch, LearnsAllNormalStream) {
  std::mt19937_64 gen(8);
  std::vector<WindowState> stream;
  for (std::size_t k = 0; k < 200; ++k) {
    WindowState w = labeled_window(8, 0.0, Label::kNormal, k);
    w.values = testing::random_window(8, gen);
    stream.push_back(std::move(w));
  }
  DqnAgent agent(qnet_init<double>(8, 4), AgentConfig{}, 1000, EpsilonSchedule{}, 9);
  for (int epoch = 0; epoch < 10; ++epoch) dqn_train_epoch(agent, stream);
  EXPECT_EQ(agent.steps, 2000);
  int normal = 0;
  Rng rng(0);
  for (const auto& w : stream) normal += select_action(agent.eval, w, 0.0, rng) == 0;
  EXPECT_GE(normal, 190);
}

TEST(AgentConfig, Validation) {
  AgentConfig c;
  EXPECT_NO_THROW(c.validate());
  c.gamma = 1.5;
  EXPECT_THROW(c.validate(), ParameterError);
  c = {};
  c.r1 = 0.0;
  EXPECT_THROW(c.validate(), ParameterError);
}

}  // namespace
}  // namespace rlad
