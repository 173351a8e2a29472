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

#include "rlad/agent.hpp"

#include <algorithm>
#include <iostream>
#include <numeric>

namespace rlad {

ReplayMemory::ReplayMemory(std::size_t capacity) : buffer_(capacity) {
  if (capacity == 0) throw ParameterError("replay capacity must be >= 1");
}

void ReplayMemory::push(Transition t) {
  buffer_[head_] = std::move(t);
  head_ = (head_ + 1) % buffer_.size();
  size_ = std::min(size_ + 1, buffer_.size());
}

const Transition& ReplayMemory::at(std::size_t i) const {
  if (i >= size_) throw SizeError("replay index out of range");
  const std::size_t oldest = (head_ + buffer_.size() - size_) % buffer_.size();
  return buffer_[(oldest + i) % buffer_.size()];
}

std::vector<std::size_t> ReplayMemory::sample_indices(std::size_t batch_size,
                                                      Rng& rng) const {
  if (empty()) throw StateError("cannot sample from an empty replay memory");
  std::vector<std::size_t> out;
  out.reserve(batch_size);
  if (size_ < batch_size) {
    std::uniform_int_distribution<std::size_t> pick(0, size_ - 1);
    for (std::size_t k = 0; k < batch_size; ++k) out.push_back(pick(rng));
    return out;
  }
  std::vector<std::size_t> pool(size_);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (std::size_t k = 0; k < batch_size; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, size_ - 1);
    std::swap(pool[k], pool[pick(rng)]);
    out.push_back(pool[k]);
  }
  return out;
}

void replay_push(ReplayMemory& memory, Transition t) { memory.push(std::move(t)); }

std::vector<Transition> replay_sample(const ReplayMemory& memory,
                                      std::size_t batch_size, Rng& rng) {
  std::vector<Transition> out;
  for (auto i : memory.sample_indices(batch_size, rng)) out.push_back(memory.at(i));
  return out;
}

double EpsilonSchedule::value() const {
  return std::max(min, start - static_cast<double>(t) * decay);
}

void AgentConfig::validate() const {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ParameterError("gamma must lie in [0, 1]");
  if (!(r1 > 0.0 && r2 > 0.0)) throw ParameterError("reward constants must be positive");
  if (batch_size == 0) throw ParameterError("batch size must be >= 1");
  if (sync_every == 0) throw ParameterError("sync interval must be >= 1");
  if (!(learning_rate >= 0.0)) throw ParameterError("learning rate must be >= 0");
  if (!(max_grad_norm >= 0.0)) throw ParameterError("max grad norm must be >= 0");
}

double reward(int action, int true_label, double r1, double r2) {
  if ((action != 0 && action != 1) || (true_label != 0 && true_label != 1)) {
    throw ParameterError("reward expects binary action and label");
  }
  if (true_label == 1) return action == 1 ? r1 : -r1;
  return action == 0 ? r2 : -r2;
}

int greedy_action(double q0, double q1) { return q1 > q0 ? 1 : 0; }

int select_action(const QNet& params, const WindowState& state, double epsilon,
                  Rng& rng) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
    throw ParameterError("epsilon must lie in [0, 1]");
  }
  std::uniform_real_distribution<double> u(0.0, 1.0);
  if (epsilon > 0.0 && u(rng) < epsilon) {
    return std::bernoulli_distribution(0.5)(rng) ? 1 : 0;
  }
  const auto q = qnet_forward(params, state.values);
  return greedy_action(q.q0, q.q1);
}

double compute_target(const AgentConfig& cfg, const QNet& target_params,
                      const Transition& transition) {
  if (transition.terminal()) return transition.reward;
  const auto q = qnet_forward(target_params, transition.next_state->values);
  return transition.reward + cfg.gamma * std::max(q.q0, q.q1);
}

DqnAgent::DqnAgent(QNet params, AgentConfig cfg, std::size_t replay_capacity,
                   EpsilonSchedule sched, std::uint64_t seed)
    : eval(std::move(params)),
      target(eval),
      optimizer(AdamState<double>::like(eval)),
      memory(replay_capacity),
      schedule(sched),
      config(cfg),
      rng(seed) {
  config.validate();
}

EpochMetrics dqn_train_epoch(DqnAgent& agent, std::span<const WindowState> stream) {
  EpochMetrics metrics;
  if (stream.empty()) {
    std::cerr << "warning: empty labeled stream, skipping epoch\n";
    return metrics;
  }
  const auto& cfg = agent.config;
  const Index omega = stream.front().width();
  double loss_sum = 0.0;

  for (std::size_t k = 0; k < stream.size(); ++k) {
    const WindowState& s = stream[k];
    if (s.label_source == LabelSource::kNone || s.label == Label::kUnknown) {
      throw PreconditionError("training stream contains an unlabeled window");
    }
    const int action = select_action(agent.eval, s, agent.schedule.value(), agent.rng);
    agent.schedule.advance();

    Transition t;
    t.state = s;
    t.action = action;
    t.reward = reward(action, to_int(s.label), cfg.r1, cfg.r2);
    if (k + 1 < stream.size()) t.next_state = stream[k + 1];
    agent.memory.push(std::move(t));

    // Targets for the whole minibatch in one target-network pass.
    const auto picks = agent.memory.sample_indices(cfg.batch_size, agent.rng);
    TrainingBatch<double> batch;
    batch.windows.resize(omega, static_cast<Index>(picks.size()));
    batch.actions.resize(picks.size());
    batch.targets.resize(static_cast<Index>(picks.size()));
    std::vector<Index> bootstrap;
    MatrixXd next(omega, static_cast<Index>(picks.size()));
    for (std::size_t b = 0; b < picks.size(); ++b) {
      const Transition& tr = agent.memory.at(picks[b]);
      const auto col = static_cast<Index>(b);
      batch.windows.col(col) = tr.state.values;
      batch.actions[b] = tr.action;
      batch.targets(col) = tr.reward;
      if (!tr.terminal()) {
        next.col(static_cast<Index>(bootstrap.size())) = tr.next_state->values;
        bootstrap.push_back(col);
      }
    }
    if (!bootstrap.empty()) {
      const MatrixXd q = qnet_q_values<double>(
          agent.target, next.leftCols(static_cast<Index>(bootstrap.size())));
      for (std::size_t j = 0; j < bootstrap.size(); ++j) {
        const auto col = static_cast<Index>(j);
        batch.targets(bootstrap[j]) += cfg.gamma * q.col(col).maxCoeff();
      }
    }

    auto lg = qnet_loss_grad(agent.eval, batch);
    if (cfg.max_grad_norm > 0.0) clip_grad_norm(lg.grads, cfg.max_grad_norm);
    adam_step(agent.eval, lg.grads, agent.optimizer, cfg.learning_rate);
    loss_sum += lg.loss;
    ++metrics.steps;
    ++agent.steps;

    if (agent.steps % static_cast<std::int64_t>(cfg.sync_every) == 0) {
      agent.target = target_sync(agent.eval);
      ++agent.syncs;
      ++metrics.syncs;
    }
  }
  metrics.mean_loss = loss_sum / static_cast<double>(metrics.steps);
  return metrics;
}

}  // namespace rlad
