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

#include <functional>
#include <optional>
#include <vector>

#include "rlad/common.hpp"

namespace rlad {

// Dense Gaussian affinity over the columns of `points`:
// w_ij = exp(-|x_i - x_j|^2 / sigma^2), unit diagonal.
MatrixXd affinity_matrix(const MatrixXd& points, double sigma);

// Column-normalizes W (each column sums to 1).
MatrixXd transition_matrix(const MatrixXd& affinity);

// Row-normalizes a matrix in place; zero rows are left untouched.
void row_normalize(MatrixXd& m);

// Median pairwise Euclidean distance among the columns of `points`.
// Returns 0 for fewer than two columns.
double median_pairwise_distance(const MatrixXd& points);

struct LabelPropagationOptions {
  std::optional<double> sigma;  // median heuristic when unset
  double tolerance = 1e-6;
  int max_iter = 1000;
  // Called after every iteration with the current (l+u) x 2 label matrix.
  std::function<void(int, const MatrixXd&)> on_iteration;
};

struct LabelDistribution {
  // Row i is the class distribution of node i; the first `num_labeled` rows
  // are the clamped one-hot targets.
  MatrixXd y;
  Index num_labeled = 0;
  double sigma = 0.0;
  int iterations = 0;
  bool converged = false;

  Index num_unlabeled() const { return y.rows() - num_labeled; }
};

// Iterates Y <- T_bar Y, row-normalize, clamp until max |dY| < tolerance.
// `labeled` and `unlabeled` hold observations as columns; `labels` are
// binary class ids for the labeled columns.
LabelDistribution lp_fit(const MatrixXd& labeled, const std::vector<int>& labels,
                         const MatrixXd& unlabeled,
                         const LabelPropagationOptions& options = {});

// Natural-log entropy with 0 log 0 = 0.
double lp_entropy(double p0, double p1);

struct PseudoLabel {
  Index index;  // position among the unlabeled rows
  int label;
  double entropy;
};

// Unlabeled rows whose entropy is at most `max_entropy`, labeled by argmax
// (ties to class 0).
std::vector<PseudoLabel> lp_pseudo_labels(const LabelDistribution& dist,
                                          double max_entropy);

// Indices of the (at most) `cap` columns of `candidates` closest to any
// column of `anchors`, ordered by that distance (ties by index).
std::vector<Index> nearest_candidates(const MatrixXd& anchors,
                                      const MatrixXd& candidates,
                                      std::size_t cap);

}  // namespace rlad
