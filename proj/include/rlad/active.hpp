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
#include <string>
#include <utility>
#include <vector>

#include "rlad/agent.hpp"
#include "rlad/qnet.hpp"
#include "rlad/timeseries.hpp"

namespace rlad {

struct RankedWindow {
  std::size_t index;  // position in the ranked input
  double margin;
};

// |q0 - q1| per window, ascending, ties by index.
std::vector<RankedWindow> margin_rank(const QNet& params,
                                      const std::vector<WindowState>& unlabeled);
std::vector<RankedWindow> margin_rank(const MatrixXd& q_values);

enum class QueryStrategy { kRandom, kLeastConfidence, kMargin, kEntropy };

QueryStrategy parse_query_strategy(const std::string& name);

// Two-way softmax over q-values: p_a = e^{q_a} / (e^{q0} + e^{q1}).
std::pair<double, double> softmax2(double q0, double q1);

// Most informative first under `strategy`.
std::vector<std::size_t> alt_strategy_rank(const QNet& params,
                                           const std::vector<WindowState>& unlabeled,
                                           QueryStrategy strategy, Rng& rng);

struct QueryItem {
  std::size_t window_index = 0;  // learner-side window id
  std::size_t end_index = 0;     // raw point the window is labeled by
  double margin = 0.0;
  VectorXd window;
  std::vector<double> context;   // raw values around end_index
  std::size_t context_offset = 0;  // raw position of context[0]
  int episode = 0;
};

struct QueryBatch {
  std::string batch_id;
  std::int64_t created_at = 0;
  std::vector<QueryItem> items;  // ascending margin

  bool empty() const { return items.empty(); }
  std::size_t size() const { return items.size(); }
};

class Oracle {
 public:
  enum class Kind { kScripted, kHuman };

  virtual ~Oracle() = default;
  virtual Kind kind() const = 0;
  // One binary label per item, in item order.
  virtual std::vector<int> answer(const QueryBatch& batch) = 0;
};

// Answers from ground-truth point labels, indexed by raw position.
class ScriptedOracle : public Oracle {
 public:
  explicit ScriptedOracle(std::vector<Label> truth) : truth_(std::move(truth)) {}

  Kind kind() const override { return Kind::kScripted; }
  std::vector<int> answer(const QueryBatch& batch) override;

 private:
  std::vector<Label> truth_;
};

struct LabelBudget {
  std::size_t human_labels_used = 0;
  std::size_t pseudo_labels_assigned = 0;
  std::optional<std::size_t> cap;

  std::size_t remaining() const;
  bool exhausted() const { return remaining() == 0; }
};

struct AnsweredQuery {
  std::size_t window_index;
  std::size_t end_index;
  int label;
};

// Truncates the batch to the remaining budget (keeping its head), asks the
// oracle, validates the answers and charges the budget.
std::vector<AnsweredQuery> query_oracle(Oracle& oracle, QueryBatch& batch,
                                        LabelBudget& budget);

}  // namespace rlad
