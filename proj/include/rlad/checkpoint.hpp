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
#include "rlad/qnet.hpp"
#include "rlad/timeseries.hpp"

namespace rlad {

// Versioned JSON container for a Q-network and everything needed to resume
// training or run inference with it.
struct Checkpoint {
  static constexpr int kFormatVersion = 1;

  std::size_t window = 0;
  QNet params;
  std::optional<AdamState<double>> optimizer;
  std::int64_t train_step = 0;
  ScalerParams scaler;
  std::string config_fingerprint;
};

nlohmann::json checkpoint_to_json(const Checkpoint& ckpt);
// Validates the version and every array shape; throws ShapeError or
// ParseError.
Checkpoint checkpoint_from_json(const nlohmann::json& j);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace rlad
