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

#include "rlad/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>

#include "rlad/common.hpp"

namespace rlad {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw ParameterError(std::string("config: ") + what);
}

template <typename T>
void put_optional(nlohmann::json& j, const char* key, const std::optional<T>& v) {
  j[key] = v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

template <typename T>
void get_optional(const nlohmann::json& j, const char* key, std::optional<T>& v) {
  if (!j.contains(key)) return;
  if (j.at(key).is_null()) {
    v.reset();
  } else {
    v = j.at(key).get<T>();
  }
}

}  // namespace

void RLADConfig::validate() const {
  require(window >= 1, "window must be >= 1");
  require(split_ratio > 0.0 && split_ratio < 1.0, "split_ratio must lie in (0, 1)");
  require(warmup_per_set >= 1, "warmup_per_set must be >= 1");
  require(iforest_trees >= 1, "iforest_trees must be >= 1");
  require(iforest_subsample >= 2, "iforest_subsample must be >= 2");
  require(replay_capacity >= 1, "replay_capacity must be >= 1");
  require(epsilon_start >= 0.0 && epsilon_start <= 1.0, "epsilon_start must lie in [0, 1]");
  require(epsilon_min >= 0.0 && epsilon_min <= epsilon_start,
          "epsilon_min must lie in [0, epsilon_start]");
  require(epsilon_decay >= 0.0, "epsilon_decay must be >= 0");
  require(r1 > 0.0 && r2 > 0.0, "reward constants must be positive");
  require(gamma >= 0.0 && gamma <= 1.0, "gamma must lie in [0, 1]");
  require(hidden_size >= 1, "hidden_size must be >= 1");
  require(batch_size >= 1, "batch_size must be >= 1");
  require(sync_every >= 1, "sync_every must be >= 1");
  require(learning_rate >= 0.0, "learning_rate must be >= 0");
  require(max_grad_norm >= 0.0, "max_grad_norm must be >= 0");
  require(queries_per_episode >= 1 && queries_per_episode <= 10,
          "queries_per_episode must lie in [1, 10]");
  require(!query_timeout_s || *query_timeout_s > 0.0, "query_timeout_s must be positive");
  require(!lp_sigma || *lp_sigma > 0.0, "lp_sigma must be positive");
  require(lp_tolerance > 0.0, "lp_tolerance must be positive");
  require(lp_max_iter >= 1, "lp_max_iter must be >= 1");
  require(lp_entropy_threshold >= 0.0, "lp_entropy_threshold must be >= 0");
  require(lp_pool_cap >= 1, "lp_pool_cap must be >= 1");
}

std::string RLADConfig::fingerprint() const {
  const std::string text = nlohmann::json(*this).dump();
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void to_json(nlohmann::json& j, const RLADConfig& c) {
  j = nlohmann::json::object();
  j["window"] = c.window;
  j["split_ratio"] = c.split_ratio;
  j["warmup_per_set"] = c.warmup_per_set;
  j["iforest_trees"] = c.iforest_trees;
  j["iforest_subsample"] = c.iforest_subsample;
  j["replay_capacity"] = c.replay_capacity;
  j["epsilon_start"] = c.epsilon_start;
  j["epsilon_decay"] = c.epsilon_decay;
  j["epsilon_min"] = c.epsilon_min;
  j["r1"] = c.r1;
  j["r2"] = c.r2;
  j["gamma"] = c.gamma;
  j["hidden_size"] = c.hidden_size;
  j["batch_size"] = c.batch_size;
  j["sync_every"] = c.sync_every;
  j["learning_rate"] = c.learning_rate;
  j["max_grad_norm"] = c.max_grad_norm;
  j["episodes"] = c.episodes;
  j["queries_per_episode"] = c.queries_per_episode;
  put_optional(j, "label_budget", c.label_budget);
  put_optional(j, "query_timeout_s", c.query_timeout_s);
  put_optional(j, "lp_sigma", c.lp_sigma);
  j["lp_tolerance"] = c.lp_tolerance;
  j["lp_max_iter"] = c.lp_max_iter;
  j["lp_entropy_threshold"] = c.lp_entropy_threshold;
  j["lp_pool_cap"] = c.lp_pool_cap;
  j["seed"] = c.seed;
}

void from_json(const nlohmann::json& j, RLADConfig& c) {
  if (!j.is_object()) throw ParameterError("config: expected a JSON object");
  const nlohmann::json known = RLADConfig{};
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) throw ParameterError("config: unknown key '" + key + "'");
  }
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  try {
    get("window", c.window);
    get("split_ratio", c.split_ratio);
    get("warmup_per_set", c.warmup_per_set);
    get("iforest_trees", c.iforest_trees);
    get("iforest_subsample", c.iforest_subsample);
    get("replay_capacity", c.replay_capacity);
    get("epsilon_start", c.epsilon_start);
    get("epsilon_decay", c.epsilon_decay);
    get("epsilon_min", c.epsilon_min);
    get("r1", c.r1);
    get("r2", c.r2);
    get("gamma", c.gamma);
    get("hidden_size", c.hidden_size);
    get("batch_size", c.batch_size);
    get("sync_every", c.sync_every);
    get("learning_rate", c.learning_rate);
    get("max_grad_norm", c.max_grad_norm);
    get("episodes", c.episodes);
    get("queries_per_episode", c.queries_per_episode);
    get_optional(j, "label_budget", c.label_budget);
    get_optional(j, "query_timeout_s", c.query_timeout_s);
    get_optional(j, "lp_sigma", c.lp_sigma);
    get("lp_tolerance", c.lp_tolerance);
    get("lp_max_iter", c.lp_max_iter);
    get("lp_entropy_threshold", c.lp_entropy_threshold);
    get("lp_pool_cap", c.lp_pool_cap);
    get("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError(std::string("config: ") + e.what());
  }
}

RLADConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("config '" + path.string() + "': " + e.what());
  }
  RLADConfig c = j.get<RLADConfig>();
  c.validate();
  return c;
}

void save_config(const RLADConfig& config, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << nlohmann::json(config).dump(2) << '\n';
}

}  // namespace rlad
