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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "rlad/active.hpp"
#include "support.hpp"

namespace rlad {
namespace {

using testing::random_window;
using testing::reference_q;
using testing::to_std;

std::vector<WindowState> random_windows(std::size_t count, std::size_t omega, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<WindowState> out(count);
  for (std::size_t k = 0; k < count; ++k) {
    out[k].values = random_window(omega, rng);
    out[k].end_index = k + omega - 1;
  }
  return out;
}

QueryBatch batch_for(const std::vector<std::size_t>& end_indices) {
  QueryBatch b;
  b.batch_id = "b";
  for (std::size_t k = 0; k < end_indices.size(); ++k) {
    QueryItem it;
    it.window_index = k;
    it.end_index = end_indices[k];
    it.margin = static_cast<double>(k);
    b.items.push_back(it);
  }
  return b;
}

TEST(MarginRank, Example) {
  MatrixXd q(2, 3);
  q << 0.2, 0.5, -1.0, 0.9, 0.55, 1.0;
  const auto r = margin_rank(q);
  ASSERT_EQ(r.size(), 3u);
  EXPECT_EQ(r[0].index, 1u);
  EXPECT_EQ(r[1].index, 0u);
  EXPECT_EQ(r[2].index, 2u);
  EXPECT_NEAR(r[0].margin, 0.05, 1e-12);
  EXPECT_NEAR(r[1].margin, 0.7, 1e-12);
  EXPECT_NEAR(r[2].margin, 2.0, 1e-12);
}

TEST(MarginRank, SingleWindowAndEmpty) {
  const auto p = qnet_init<double>(3, 1);
  EXPECT_EQ(margin_rank(p, random_windows(1, 5, 1)).size(), 1u);
  EXPECT_THROW(margin_rank(p, {}), SizeError);
}

TEST(MarginRank, TiesKeepIndexOrder) {
  MatrixXd q = MatrixXd::Zero(2, 5);
  const auto r = margin_rank(q);
  for (std::size_t k = 0; k < 5; ++k) EXPECT_EQ(r[k].index, k);
}

TEST(MarginRank, MatchesBruteForce) {
  const auto p = qnet_init<double>(6, 21);
  const auto windows = random_windows(200, 10, 33);
  std::vector<std::pair<double, std::size_t>> brute;
  for (std::size_t k = 0; k < windows.size(); ++k) {
    const auto [q0, q1] = reference_q(p, to_std(windows[k].values));
    brute.emplace_back(std::abs(q0 - q1), k);
  }
  std::sort(brute.begin(), brute.end());
  const auto r = margin_rank(p, windows);
  ASSERT_EQ(r.size(), brute.size());
  for (std::size_t k = 0; k < r.size(); ++k) {
    EXPECT_EQ(r[k].index, brute[k].second);
    EXPECT_NEAR(r[k].margin, brute[k].first, 1e-12);
  }
}

TEST(MarginRank, PermutationSortedNonNegative) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto p = qnet_init<double>(4, seed);
    const auto r = margin_rank(p, random_windows(50, 6, seed + 100));
    std::vector<std::size_t> idx;
    for (std::size_t k = 0; k < r.size(); ++k) {
      ASSERT_GE(r[k].margin, 0.0);
      if (k) {
        ASSERT_LE(r[k - 1].margin, r[k].margin);
      }
      idx.push_back(r[k].index);
    }
    std::sort(idx.begin(), idx.end());
    std::vector<std::size_t> want(50);
    std::iota(want.begin(), want.end(), std::size_t{0});
    EXPECT_EQ(idx, want);
  }
}

TEST(Softmax, Basics) {
  const auto [a, b] = softmax2(0.0, 0.0);
  EXPECT_DOUBLE_EQ(a, 0.5);
  EXPECT_DOUBLE_EQ(b, 0.5);
  const auto [c, d] = softmax2(1000.0, 0.0);  // no overflow
  EXPECT_DOUBLE_EQ(c, 1.0);
  EXPECT_GE(d, 0.0);
  const auto [e, f] = softmax2(1.0, 2.0);
  EXPECT_NEAR(f, 1.0 / (1.0 + std::exp(-1.0)), 1e-15);
  EXPECT_NEAR(e + f, 1.0, 1e-15);
}

TEST(AltStrategies, ZeroMarginRanksFirst) {
  // Under a two-way softmax both least-confidence and entropy are monotone
  // in |q0 - q1|, so every strategy agrees on the most uncertain window.
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto p = qnet_init<double>(4, seed);
    const auto windows = random_windows(60, 5, seed + 7);
    std::size_t best = 0;
    double best_margin = 1e300;
    for (std::size_t k = 0; k < windows.size(); ++k) {
      const auto [q0, q1] = reference_q(p, to_std(windows[k].values));
      if (std::abs(q0 - q1) < best_margin) {
        best_margin = std::abs(q0 - q1);
        best = k;
      }
    }
    Rng rng(1);
    for (auto s : {QueryStrategy::kLeastConfidence, QueryStrategy::kEntropy,
                   QueryStrategy::kMargin}) {
      EXPECT_EQ(alt_strategy_rank(p, windows, s, rng).front(), best);
    }
  }
}

TEST(AltStrategies, MarginDelegates) {
  const auto p = qnet_init<double>(5, 4);
  const auto windows = random_windows(40, 7, 9);
  Rng rng(0);
  const auto alt = alt_strategy_rank(p, windows, QueryStrategy::kMargin, rng);
  const auto ranked = margin_rank(p, windows);
  for (std::size_t k = 0; k < ranked.size(); ++k) EXPECT_EQ(alt[k], ranked[k].index);
}

TEST(AltStrategies, EntropyMatchesBruteForce) {
  const auto p = qnet_init<double>(5, 8);
  const auto windows = random_windows(100, 7, 10);
  std::vector<std::pair<double, std::size_t>> brute;
  for (std::size_t k = 0; k < windows.size(); ++k) {
    const auto [q0, q1] = reference_q(p, to_std(windows[k].values));
    const double p1 = 1.0 / (1.0 + std::exp(q0 - q1));
    const double p0 = 1.0 - p1;
    const double entropy = -(p0 * std::log(p0) + p1 * std::log(p1));
    brute.emplace_back(-entropy, k);  // most uncertain first
  }
  std::stable_sort(brute.begin(), brute.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  Rng rng(0);
  const auto got = alt_strategy_rank(p, windows, QueryStrategy::kEntropy, rng);
  for (std::size_t k = 0; k < got.size(); ++k) EXPECT_EQ(got[k], brute[k].second) << k;
}

TEST(AltStrategies, RandomIsPermutation) {
  const auto p = qnet_init<double>(2, 1);
  Rng rng(7);
  auto order = alt_strategy_rank(p, random_windows(30, 3, 1), QueryStrategy::kRandom, rng);
  std::sort(order.begin(), order.end());
  for (std::size_t k = 0; k < order.size(); ++k) EXPECT_EQ(order[k], k);
  EXPECT_EQ(parse_query_strategy("least_confidence"), QueryStrategy::kLeastConfidence);
  EXPECT_THROW(parse_query_strategy("bogus"), ParameterError);
}

TEST(QueryOracle, ScriptedLookupAndBudget) {
  ScriptedOracle oracle({Label::kNormal, Label::kAnomaly, Label::kNormal, Label::kNormal});
  auto batch = batch_for({1, 2, 3});
  LabelBudget budget;
  const auto answers = query_oracle(oracle, batch, budget);
  ASSERT_EQ(answers.size(), 3u);
  EXPECT_EQ(answers[0].label, 1);
  EXPECT_EQ(answers[1].label, 0);
  EXPECT_EQ(answers[2].label, 0);
  EXPECT_EQ(budget.human_labels_used, 3u);
  EXPECT_EQ(budget.pseudo_labels_assigned, 0u);
}

TEST(QueryOracle, EmptyBatch) {
  ScriptedOracle oracle({Label::kNormal});
  QueryBatch batch;
  LabelBudget budget;
  EXPECT_TRUE(query_oracle(oracle, batch, budget).empty());
  EXPECT_EQ(budget.human_labels_used, 0u);
}

TEST(QueryOracle, TruncatesToRemainingBudget) {
  std::vector<Label> truth(20, Label::kNormal);
  ScriptedOracle oracle(truth);
  auto batch = batch_for({0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
  LabelBudget budget{995, 0, 1000};
  const auto answers = query_oracle(oracle, batch, budget);
  ASSERT_EQ(answers.size(), 5u);
  for (std::size_t k = 0; k < 5; ++k) EXPECT_EQ(answers[k].window_index, k);  // lowest margins
  EXPECT_EQ(budget.human_labels_used, 1000u);
  EXPECT_TRUE(budget.exhausted());
}

TEST(QueryOracle, UnknownTruthIsQueryError) {
  ScriptedOracle oracle({Label::kNormal, Label::kUnknown});
  auto batch = batch_for({1});
  LabelBudget budget;
  EXPECT_THROW(query_oracle(oracle, batch, budget), QueryError);
  auto far = batch_for({9});
  EXPECT_THROW(query_oracle(oracle, far, budget), QueryError);
  EXPECT_EQ(budget.human_labels_used, 0u);
}

class BadOracle : public Oracle {
 public:
  explicit BadOracle(std::vector<int> labels) : labels_(std::move(labels)) {}
  Kind kind() const override { return Kind::kHuman; }
  std::vector<int> answer(const QueryBatch&) override { return labels_; }

 private:
  std::vector<int> labels_;
};

TEST(QueryOracle, ValidatesOracleAnswers) {
  LabelBudget budget;
  BadOracle short_answer({0});
  auto batch = batch_for({0, 1});
  EXPECT_THROW(query_oracle(short_answer, batch, budget), QueryError);
  BadOracle non_binary({0, 7});
  batch = batch_for({0, 1});
  EXPECT_THROW(query_oracle(non_binary, batch, budget), QueryError);
  EXPECT_EQ(budget.human_labels_used, 0u);
}

}  // namespace
}  // namespace rlad
