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

#include "rlad/labelprop.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rlad {

namespace {

// Squared distances between every pair of columns of a and b.
MatrixXd squared_distances(const MatrixXd& a, const MatrixXd& b) {
  const VectorXd na = a.colwise().squaredNorm().transpose();
  const VectorXd nb = b.colwise().squaredNorm().transpose();
  MatrixXd d = -2.0 * (a.transpose() * b);
  d.colwise() += na;
  d.rowwise() += nb.transpose();
  return d.cwiseMax(0.0);
}

}  // namespace

MatrixXd affinity_matrix(const MatrixXd& points, double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw ParameterError("kernel width must be positive and finite");
  }
  MatrixXd d2 = squared_distances(points, points);
  if (!d2.allFinite()) throw IntegrityError("non-finite pairwise distance");
  // The expansion above is not exactly symmetric in floating point.
  d2 = 0.5 * (d2 + d2.transpose()).eval();
  MatrixXd w = (-d2 / (sigma * sigma)).array().exp().matrix();
  w.diagonal().setOnes();
  return w;
}

MatrixXd transition_matrix(const MatrixXd& affinity) {
  const RowVectorX<double> col_sums = affinity.colwise().sum();
  return affinity.array().rowwise() / col_sums.array();
}

void row_normalize(MatrixXd& m) {
  for (Index i = 0; i < m.rows(); ++i) {
    const double s = m.row(i).sum();
    if (s > 0.0) m.row(i) /= s;
  }
}

double median_pairwise_distance(const MatrixXd& points) {
  const Index n = points.cols();
  if (n < 2) return 0.0;
  const MatrixXd d2 = squared_distances(points, points);
  std::vector<double> d;
  d.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Index j = 1; j < n; ++j)
    for (Index i = 0; i < j; ++i) d.push_back(std::sqrt(d2(i, j)));
  const auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  if (d.size() % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(d.begin(), mid);
  return 0.5 * (lower + upper);
}

LabelDistribution lp_fit(const MatrixXd& labeled, const std::vector<int>& labels,
                         const MatrixXd& unlabeled,
                         const LabelPropagationOptions& options) {
  const Index l = labeled.cols();
  const Index u = unlabeled.cols();
  if (l == 0) throw PreconditionError("label propagation needs a labeled point");
  if (static_cast<Index>(labels.size()) != l) {
    throw ShapeError("labels and labeled points differ in count");
  }
  if (u > 0 && unlabeled.rows() != labeled.rows()) {
    throw ShapeError("labeled and unlabeled points differ in dimension");
  }
  for (int y : labels) {
    if (y != 0 && y != 1) throw ParameterError("labels must be 0 or 1");
  }

  MatrixXd points(labeled.rows(), l + u);
  points.leftCols(l) = labeled;
  if (u > 0) points.rightCols(u) = unlabeled;
  if (!points.allFinite()) throw IntegrityError("non-finite input point");

  LabelDistribution dist;
  dist.num_labeled = l;

  double sigma = 0.0;
  if (options.sigma) {
    sigma = *options.sigma;
  } else {
    sigma = median_pairwise_distance(labeled);
    if (!(sigma > 0.0)) sigma = median_pairwise_distance(points);
    if (!(sigma > 0.0)) sigma = 1.0;
  }
  dist.sigma = sigma;

  MatrixXd clamp = MatrixXd::Zero(l, 2);
  for (Index i = 0; i < l; ++i) clamp(i, labels[static_cast<std::size_t>(i)]) = 1.0;

  dist.y = MatrixXd::Constant(l + u, 2, 0.5);
  dist.y.topRows(l) = clamp;
  if (u == 0) {
    dist.converged = true;
    return dist;
  }

  MatrixXd t_bar = transition_matrix(affinity_matrix(points, sigma));
  row_normalize(t_bar);
  if (!t_bar.allFinite()) throw IntegrityError("non-finite transition matrix");

  MatrixXd next(l + u, 2);
  for (int it = 1; it <= options.max_iter; ++it) {
    next.noalias() = t_bar * dist.y;
    row_normalize(next);
    next.topRows(l) = clamp;
    const double delta = (next - dist.y).cwiseAbs().maxCoeff();
    dist.y.swap(next);
    dist.iterations = it;
    if (options.on_iteration) options.on_iteration(it, dist.y);
    if (delta < options.tolerance) {
      dist.converged = true;
      break;
    }
  }
  return dist;
}

double lp_entropy(double p0, double p1) {
  auto term = [](double p) { return p > 0.0 ? -p * std::log(p) : 0.0; };
  return term(p0) + term(p1);
}

std::vector<PseudoLabel> lp_pseudo_labels(const LabelDistribution& dist,
                                          double max_entropy) {
  std::vector<PseudoLabel> out;
  for (Index r = dist.num_labeled; r < dist.y.rows(); ++r) {
    const double p0 = dist.y(r, 0);
    const double p1 = dist.y(r, 1);
    const double s = lp_entropy(p0, p1);
    if (s <= max_entropy) {
      out.push_back({r - dist.num_labeled, p1 > p0 ? 1 : 0, s});
    }
  }
  return out;
}

std::vector<Index> nearest_candidates(const MatrixXd& anchors,
                                      const MatrixXd& candidates,
                                      std::size_t cap) {
  const Index n = candidates.cols();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  if (static_cast<std::size_t>(n) <= cap || anchors.cols() == 0) {
    order.resize(std::min(order.size(), cap));
    return order;
  }
  // Chunked so memory stays bounded on long series.
  VectorXd best(n);
  constexpr Index kChunk = 4096;
  for (Index start = 0; start < n; start += kChunk) {
    const Index len = std::min(kChunk, n - start);
    best.segment(start, len) =
        squared_distances(anchors, candidates.middleCols(start, len))
            .colwise()
            .minCoeff()
            .transpose();
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return best(a) < best(b); });
  order.resize(cap);
  return order;
}

}  // namespace rlad
