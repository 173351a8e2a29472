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

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "rlad/qnet.hpp"
#include "rlad/timeseries.hpp"

namespace rlad {

using Rng = std::mt19937_64;

struct Transition {
  WindowState state;
  int action = 0;
  double reward = 0.0;
  std::optional<WindowState> next_state;  // empty marks a terminal step

  bool terminal() const { return !next_state.has_value(); }
};

// Fixed-capacity FIFO of transitions. Index 0 is the oldest entry.
class ReplayMemory {
 public:
  explicit ReplayMemory(std::size_t capacity);

  void push(Transition t);
  std::size_t size() const { return size_; }
  std::size_t capacity() const { return buffer_.size(); }
  bool empty() const { return size_ == 0; }
  const Transition& at(std::size_t i) const;

  // Uniform with replacement when size() < batch_size, otherwise without
  // replacement. Returns positions in the at() ordering.
  std::vector<std::size_t> sample_indices(std::size_t batch_size, Rng& rng) const;

 private:
  std::vector<Transition> buffer_;
  std::size_t head_ = 0;  // next write slot
  std::size_t size_ = 0;
};

void replay_push(ReplayMemory& memory, Transition t);
std::vector<Transition> replay_sample(const ReplayMemory& memory,
                                      std::size_t batch_size, Rng& rng);

// Linear decay: max(min, start - t * decay).
struct EpsilonSchedule {
  double start = 1.0;
  double decay = 1.0 / 500000.0;
  double min = 0.01;
  std::int64_t t = 0;

  double value() const;
  void advance() { ++t; }
};

struct AgentConfig {
  double gamma = 0.8;
  double r1 = 5.0;  // anomaly reward magnitude (TP / FN)
  double r2 = 1.0;  // normal reward magnitude (TN / FP)
  std::size_t batch_size = 32;
  std::size_t sync_every = 100;
  double learning_rate = 1e-3;
  double max_grad_norm = 0.0;  // 0 disables clipping

  void validate() const;
};

// TP +r1, TN +r2, FN -r1, FP -r2.
double reward(int action, int true_label, double r1, double r2);

// Epsilon-greedy; greedy ties go to action 0.
int select_action(const QNet& params, const WindowState& state, double epsilon,
                  Rng& rng);
int greedy_action(double q0, double q1);

double compute_target(const AgentConfig& cfg, const QNet& target_params,
                      const Transition& transition);

// The mutable training state owned by one trainer.
struct DqnAgent {
  QNet eval;
  QNet target;
  AdamState<double> optimizer;
  ReplayMemory memory;
  EpsilonSchedule schedule;
  AgentConfig config;
  Rng rng;
  std::int64_t steps = 0;  // gradient steps taken
  std::int64_t syncs = 0;

  DqnAgent(QNet params, AgentConfig cfg, std::size_t replay_capacity,
           EpsilonSchedule schedule, std::uint64_t seed);
};

struct EpochMetrics {
  std::size_t steps = 0;
  std::size_t syncs = 0;
  double mean_loss = 0.0;
};

// One pass over `stream` (windows carrying human or pseudo labels): act,
// reward, store, sample, regress onto target-network bootstrap, sync.
EpochMetrics dqn_train_epoch(DqnAgent& agent, std::span<const WindowState> stream);

}  // namespace rlad
