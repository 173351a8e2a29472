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

#include "rlad/iforest.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <random>

namespace rlad {

namespace {

constexpr double kEulerGamma = 0.5772156649015329;

double harmonic(std::size_t m) {
  if (m <= 1000) {
    double h = 0.0;
    // Summing small terms first keeps the exact branch well conditioned.
    for (std::size_t k = m; k >= 1; --k) h += 1.0 / static_cast<double>(k);
    return h;
  }
  const double x = static_cast<double>(m);
  return std::log(x) + kEulerGamma + 1.0 / (2.0 * x) - 1.0 / (12.0 * x * x);
}

class TreeBuilder {
 public:
  TreeBuilder(const MatrixXd& points, int height_limit, std::mt19937_64& rng)
      : points_(points), height_limit_(height_limit), rng_(rng) {}

  IsolationTree build(std::vector<Index> sample) {
    tree_.height_limit = height_limit_;
    tree_.nodes.clear();
    grow(sample, 0);
    return std::move(tree_);
  }

 private:
  std::int32_t grow(std::vector<Index>& sample, int depth) {
    const auto id = static_cast<std::int32_t>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    tree_.nodes[id].size = sample.size();
    if (depth >= height_limit_ || sample.size() <= 1) return id;

    // Candidate dimensions are those that still vary inside the node.
    std::vector<std::pair<int, std::pair<double, double>>> spread;
    for (Index d = 0; d < points_.rows(); ++d) {
      double lo = points_(d, sample.front());
      double hi = lo;
      for (auto i : sample) {
        lo = std::min(lo, points_(d, i));
        hi = std::max(hi, points_(d, i));
      }
      if (hi > lo) spread.push_back({static_cast<int>(d), {lo, hi}});
    }
    if (spread.empty()) return id;

    std::uniform_int_distribution<std::size_t> pick_dim(0, spread.size() - 1);
    const auto& [dim, range] = spread[pick_dim(rng_)];
    std::uniform_real_distribution<double> pick_value(range.first, range.second);
    double split = pick_value(rng_);
    // uniform_real_distribution may return the upper bound after rounding.
    if (split >= range.second) split = range.first;

    std::vector<Index> left;
    std::vector<Index> right;
    for (auto i : sample) (points_(dim, i) < split ? left : right).push_back(i);
    if (left.empty()) {
      // split == lo can only happen via the fallback above; bump it.
      split = std::nextafter(range.first, range.second);
      left.clear();
      right.clear();
      for (auto i : sample) (points_(dim, i) < split ? left : right).push_back(i);
    }
    sample.clear();
    sample.shrink_to_fit();

    tree_.nodes[id].split_dimension = dim;
    tree_.nodes[id].split_value = split;
    const auto l = grow(left, depth + 1);
    const auto r = grow(right, depth + 1);
    tree_.nodes[id].left = l;
    tree_.nodes[id].right = r;
    return id;
  }

  const MatrixXd& points_;
  int height_limit_;
  std::mt19937_64& rng_;
  IsolationTree tree_;
};

}  // namespace

double average_path_length(std::size_t m) {
  if (m <= 1) return 0.0;
  if (m == 2) return 1.0;
  const double x = static_cast<double>(m);
  return 2.0 * harmonic(m - 1) - 2.0 * (x - 1.0) / x;
}

double anomaly_score_from_depth(double mean_depth, std::size_t psi) {
  return std::exp2(-mean_depth / average_path_length(psi));
}

double IsolationTree::path_length(const Eigen::Ref<const VectorXd>& x) const {
  std::int32_t node = 0;
  int depth = 0;
  while (!nodes[node].is_leaf()) {
    const auto& n = nodes[node];
    node = x(n.split_dimension) < n.split_value ? n.left : n.right;
    ++depth;
  }
  return depth + average_path_length(nodes[node].size);
}

int IsolationTree::depth() const {
  std::vector<int> level(nodes.size(), 0);
  int deepest = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    deepest = std::max(deepest, level[i]);
    if (!nodes[i].is_leaf()) {
      level[nodes[i].left] = level[i] + 1;
      level[nodes[i].right] = level[i] + 1;
    }
  }
  return deepest;
}

IsolationForest iforest_fit(const MatrixXd& points,
                            const IsolationForestOptions& options) {
  const auto count = static_cast<std::size_t>(points.cols());
  if (count < 2) throw SizeError("isolation forest needs at least 2 points");
  if (options.num_trees == 0) throw ParameterError("num_trees must be >= 1");
  if (options.subsample_size < 2) throw ParameterError("subsample size must be >= 2");
  for (Index j = 0; j < points.cols(); ++j) {
    if (!points.col(j).allFinite()) throw NumericError("non-finite point");
  }

  std::size_t psi = options.subsample_size;
  if (psi > count) {
    std::cerr << "warning: iforest subsample " << psi << " exceeds " << count
              << " points, clamping\n";
    psi = count;
  }

  IsolationForest forest;
  forest.subsample_size = psi;
  forest.dimension = points.rows();
  forest.c_psi = average_path_length(psi);
  const int height_limit =
      static_cast<int>(std::ceil(std::log2(static_cast<double>(psi))));

  std::mt19937_64 rng(options.seed);
  std::vector<Index> pool(count);
  forest.trees.reserve(options.num_trees);
  for (std::size_t t = 0; t < options.num_trees; ++t) {
    std::iota(pool.begin(), pool.end(), Index{0});
    // Partial Fisher-Yates: the first psi entries are a uniform subsample.
    for (std::size_t i = 0; i < psi; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, count - 1);
      std::swap(pool[i], pool[pick(rng)]);
    }
    std::vector<Index> sample(pool.begin(),
                              pool.begin() + static_cast<std::ptrdiff_t>(psi));
    TreeBuilder builder(points, height_limit, rng);
    forest.trees.push_back(builder.build(std::move(sample)));
  }
  return forest;
}

IsolationForest iforest_fit(const std::vector<WindowState>& windows,
                            const IsolationForestOptions& options) {
  return iforest_fit(stack_windows(windows), options);
}

double iforest_score(const IsolationForest& forest,
                     const Eigen::Ref<const VectorXd>& x) {
  if (x.size() != forest.dimension) {
    throw ShapeError("iforest expects dimension " +
                     std::to_string(forest.dimension) + ", got " +
                     std::to_string(x.size()));
  }
  double total = 0.0;
  for (const auto& tree : forest.trees) total += tree.path_length(x);
  const double mean = total / static_cast<double>(forest.trees.size());
  return std::exp2(-mean / forest.c_psi);
}

double iforest_score(const IsolationForest& forest, const WindowState& window) {
  return iforest_score(forest, window.values);
}

std::vector<double> iforest_score_all(const IsolationForest& forest,
                                      const MatrixXd& points) {
  std::vector<double> out(static_cast<std::size_t>(points.cols()));
  for (Index j = 0; j < points.cols(); ++j) {
    out[static_cast<std::size_t>(j)] = iforest_score(forest, points.col(j));
  }
  return out;
}

std::vector<std::size_t> WarmupSelection::all() const {
  std::vector<std::size_t> out;
  out.reserve(top.size() + bottom.size() + boundary.size());
  out.insert(out.end(), top.begin(), top.end());
  out.insert(out.end(), bottom.begin(), bottom.end());
  out.insert(out.end(), boundary.begin(), boundary.end());
  return out;
}

WarmupSelection warmup_select(std::span<const double> scores,
                              std::size_t per_set) {
  if (scores.size() < 3 * per_set) {
    throw SizeError("warm-up selection needs " + std::to_string(3 * per_set) +
                    " scores, got " + std::to_string(scores.size()));
  }
  std::vector<std::size_t> remaining(scores.size());
  std::iota(remaining.begin(), remaining.end(), std::size_t{0});

  // Takes the `per_set` best of `remaining` under `less` and removes them.
  auto take = [&](auto less) {
    std::stable_sort(remaining.begin(), remaining.end(),
                     [&](std::size_t a, std::size_t b) {
                       return less(a, b) || (!less(b, a) && a < b);
                     });
    std::vector<std::size_t> chosen(
        remaining.begin(), remaining.begin() + static_cast<std::ptrdiff_t>(per_set));
    remaining.erase(remaining.begin(),
                    remaining.begin() + static_cast<std::ptrdiff_t>(per_set));
    return chosen;
  };

  WarmupSelection sel;
  sel.top = take([&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  sel.bottom = take([&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  sel.boundary = take([&](std::size_t a, std::size_t b) {
    return std::abs(scores[a] - 0.5) < std::abs(scores[b] - 0.5);
  });
  return sel;
}

}  // namespace rlad
