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

#include "rlad/active.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>

#include "rlad/labelprop.hpp"

namespace rlad {

std::vector<RankedWindow> margin_rank(const MatrixXd& q_values) {
  std::vector<RankedWindow> out;
  out.reserve(static_cast<std::size_t>(q_values.cols()));
  for (Index j = 0; j < q_values.cols(); ++j) {
    out.push_back({static_cast<std::size_t>(j), std::abs(q_values(0, j) - q_values(1, j))});
  }
  std::stable_sort(out.begin(), out.end(), [](const RankedWindow& a, const RankedWindow& b) {
    return a.margin < b.margin;
  });
  return out;
}

std::vector<RankedWindow> margin_rank(const QNet& params,
                                      const std::vector<WindowState>& unlabeled) {
  if (unlabeled.empty()) throw SizeError("margin ranking needs at least one window");
  return margin_rank(qnet_q_values<double>(params, stack_windows(unlabeled)));
}

QueryStrategy parse_query_strategy(const std::string& name) {
  if (name == "random") return QueryStrategy::kRandom;
  if (name == "least_confidence") return QueryStrategy::kLeastConfidence;
  if (name == "margin") return QueryStrategy::kMargin;
  if (name == "entropy") return QueryStrategy::kEntropy;
  throw ParameterError("unknown query strategy '" + name + "'");
}

std::pair<double, double> softmax2(double q0, double q1) {
  const double m = std::max(q0, q1);
  const double e0 = std::exp(q0 - m);
  const double e1 = std::exp(q1 - m);
  return {e0 / (e0 + e1), e1 / (e0 + e1)};
}

std::vector<std::size_t> alt_strategy_rank(const QNet& params,
                                           const std::vector<WindowState>& unlabeled,
                                           QueryStrategy strategy, Rng& rng) {
  if (unlabeled.empty()) throw SizeError("ranking needs at least one window");
  std::vector<std::size_t> order(unlabeled.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  switch (strategy) {
    case QueryStrategy::kRandom:
      std::shuffle(order.begin(), order.end(), rng);
      return order;
    case QueryStrategy::kMargin: {
      const auto ranked = margin_rank(params, unlabeled);
      for (std::size_t k = 0; k < ranked.size(); ++k) order[k] = ranked[k].index;
      return order;
    }
    case QueryStrategy::kLeastConfidence:
    case QueryStrategy::kEntropy:
      break;
  }

  const MatrixXd q = qnet_q_values<double>(params, stack_windows(unlabeled));
  std::vector<double> uncertainty(unlabeled.size());
  for (std::size_t j = 0; j < unlabeled.size(); ++j) {
    const auto [p0, p1] = softmax2(q(0, static_cast<Index>(j)), q(1, static_cast<Index>(j)));
    uncertainty[j] = strategy == QueryStrategy::kEntropy ? lp_entropy(p0, p1)
                                                         : 1.0 - std::max(p0, p1);
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return uncertainty[a] > uncertainty[b];
  });
  return order;
}

std::vector<int> ScriptedOracle::answer(const QueryBatch& batch) {
  std::vector<int> out;
  out.reserve(batch.size());
  for (const auto& item : batch.items) {
    if (item.end_index >= truth_.size()) {
      throw QueryError("scripted oracle has no label for point " +
                       std::to_string(item.end_index));
    }
    const Label l = truth_[item.end_index];
    if (l == Label::kUnknown) {
      throw QueryError("ground truth for point " + std::to_string(item.end_index) +
                       " is unknown");
    }
    out.push_back(to_int(l));
  }
  return out;
}

std::size_t LabelBudget::remaining() const {
  if (!cap) return static_cast<std::size_t>(-1);
  return *cap > human_labels_used ? *cap - human_labels_used : 0;
}

std::vector<AnsweredQuery> query_oracle(Oracle& oracle, QueryBatch& batch,
                                        LabelBudget& budget) {
  std::vector<AnsweredQuery> out;
  if (batch.empty()) return out;
  const std::size_t allowed = budget.remaining();
  if (batch.size() > allowed) {
    std::cerr << "warning: label budget allows " << allowed << " of "
              << batch.size() << " queries; truncating batch " << batch.batch_id
              << "\n";
    batch.items.resize(allowed);
    if (batch.empty()) return out;
  }
  const auto labels = oracle.answer(batch);
  if (labels.size() != batch.size()) {
    throw QueryError("oracle answered " + std::to_string(labels.size()) + " of " +
                     std::to_string(batch.size()) + " queries");
  }
  out.reserve(labels.size());
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (labels[k] != 0 && labels[k] != 1) {
      throw QueryError("oracle returned non-binary label " + std::to_string(labels[k]));
    }
    out.push_back({batch.items[k].window_index, batch.items[k].end_index, labels[k]});
  }
  budget.human_labels_used += out.size();
  return out;
}

}  // namespace rlad
