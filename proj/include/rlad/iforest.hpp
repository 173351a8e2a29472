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
#include <span>
#include <vector>

#include "rlad/common.hpp"
#include "rlad/timeseries.hpp"

namespace rlad {

// Average path length of an unsuccessful BST search among m points; the
// normalizer of isolation depths. Exact harmonic numbers for m <= 1000.
double average_path_length(std::size_t m);

// 2^(-mean_depth / c(psi)).
double anomaly_score_from_depth(double mean_depth, std::size_t psi);

struct IsolationNode {
  // Internal nodes: split on split_dimension at split_value, children by
  // index. Leaves: left == right == -1. `size` counts the training points
  // that reached the node.
  int split_dimension = -1;
  double split_value = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::size_t size = 0;

  bool is_leaf() const { return left < 0; }
};

struct IsolationTree {
  std::vector<IsolationNode> nodes;  // nodes[0] is the root
  int height_limit = 0;

  // Depth at which `x` terminates plus the c(size) leaf adjustment.
  double path_length(const Eigen::Ref<const VectorXd>& x) const;
  int depth() const;
};

struct IsolationForest {
  std::vector<IsolationTree> trees;
  std::size_t subsample_size = 0;
  Index dimension = 0;
  double c_psi = 0.0;

  std::size_t num_trees() const { return trees.size(); }
};

struct IsolationForestOptions {
  std::size_t num_trees = 100;
  std::size_t subsample_size = 256;
  std::uint64_t seed = 0;
};

// Columns of `points` are observations. psi larger than the number of
// points is clamped with a warning on stderr.
IsolationForest iforest_fit(const MatrixXd& points,
                            const IsolationForestOptions& options);
IsolationForest iforest_fit(const std::vector<WindowState>& windows,
                            const IsolationForestOptions& options);

double iforest_score(const IsolationForest& forest,
                     const Eigen::Ref<const VectorXd>& x);
double iforest_score(const IsolationForest& forest, const WindowState& window);
std::vector<double> iforest_score_all(const IsolationForest& forest,
                                      const MatrixXd& points);

struct WarmupSelection {
  std::vector<std::size_t> top;       // most anomalous
  std::vector<std::size_t> bottom;    // most normal
  std::vector<std::size_t> boundary;  // closest to 0.5

  std::vector<std::size_t> all() const;
};

// Three pairwise disjoint index sets of exactly `per_set` entries each.
// Ties resolve toward the lower index.
WarmupSelection warmup_select(std::span<const double> scores,
                              std::size_t per_set);

}  // namespace rlad
