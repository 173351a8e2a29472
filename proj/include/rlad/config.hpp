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
#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"

namespace rlad {

// Full configuration of a training run. Defaults follow the published
// experimental setup where one exists (window 25, replay 1000, decay
// 1/500000, rewards 5/1, gamma 0.8, 5 warm-up picks per set, 0.8 split).
struct RLADConfig {
  // preprocessing
  std::size_t window = 25;
  double split_ratio = 0.8;

  // warm-up
  std::size_t warmup_per_set = 5;
  std::size_t iforest_trees = 100;
  std::size_t iforest_subsample = 256;

  // reinforcement learning
  std::size_t replay_capacity = 1000;
  double epsilon_start = 1.0;
  double epsilon_decay = 1.0 / 500000.0;
  double epsilon_min = 0.01;
  double r1 = 5.0;
  double r2 = 1.0;
  double gamma = 0.8;
  std::size_t hidden_size = 64;
  std::size_t batch_size = 32;
  std::size_t sync_every = 100;
  double learning_rate = 1e-3;
  double max_grad_norm = 0.0;
  std::size_t episodes = 1000;

  // active learning
  std::size_t queries_per_episode = 5;
  std::optional<std::size_t> label_budget;
  std::optional<double> query_timeout_s;

  // label propagation
  std::optional<double> lp_sigma;
  double lp_tolerance = 1e-6;
  int lp_max_iter = 1000;
  double lp_entropy_threshold = 0.2;
  std::size_t lp_pool_cap = 5000;

  std::uint64_t seed = 0;

  // Throws ParameterError naming the first out-of-range field.
  void validate() const;

  // Stable 16-hex-digit digest of the serialized configuration.
  std::string fingerprint() const;
};

void to_json(nlohmann::json& j, const RLADConfig& c);
// Missing keys keep their defaults; unknown keys are rejected.
void from_json(const nlohmann::json& j, RLADConfig& c);

RLADConfig load_config(const std::filesystem::path& path);
void save_config(const RLADConfig& config, const std::filesystem::path& path);

}  // namespace rlad
