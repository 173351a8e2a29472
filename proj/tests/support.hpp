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

// Test-only helpers. The reference computations here are written with plain
// loops and std:: math so they share no code with the library under test.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "rlad/qnet.hpp"

namespace rlad::testing {

// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("rlad-test-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline double ref_sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Step-by-step LSTM recurrence (gate blocks i, f, g, o) followed by the
// linear head; returns (q0, q1).
inline std::pair<double, double> reference_q(const QNet& p, const std::vector<double>& window) {
  const auto h = static_cast<std::size_t>(p.hidden);
  std::vector<double> hid(h, 0.0), cell(h, 0.0);
  for (double x : window) {
    std::vector<double> next_h(h), next_c(h);
    for (std::size_t j = 0; j < h; ++j) {
      double z[4];
      for (std::size_t g = 0; g < 4; ++g) {
        const auto row = static_cast<Index>(g * h + j);
        double acc = p.w_in(row) * x + p.bias(row);
        for (std::size_t k = 0; k < h; ++k) acc += p.w_rec(row, static_cast<Index>(k)) * hid[k];
        z[g] = acc;
      }
      const double i = ref_sigmoid(z[0]);
      const double f = ref_sigmoid(z[1]);
      const double g = std::tanh(z[2]);
      const double o = ref_sigmoid(z[3]);
      next_c[j] = f * cell[j] + i * g;
      next_h[j] = o * std::tanh(next_c[j]);
    }
    hid = next_h;
    cell = next_c;
  }
  double q[2];
  for (Index a = 0; a < 2; ++a) {
    double acc = p.b_out(a);
    for (std::size_t k = 0; k < h; ++k) acc += p.w_out(a, static_cast<Index>(k)) * hid[k];
    q[a] = acc;
  }
  return {q[0], q[1]};
}

inline std::vector<double> to_std(const VectorXd& v) { return {v.data(), v.data() + v.size()}; }

inline VectorXd random_window(std::size_t omega, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  VectorXd w(static_cast<Index>(omega));
  for (Index i = 0; i < w.size(); ++i) w(i) = u(rng);
  return w;
}

inline TrainingBatch<double> random_batch(std::size_t omega, Index n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  TrainingBatch<double> b;
  b.windows.resize(static_cast<Index>(omega), n);
  b.targets.resize(n);
  for (Index j = 0; j < n; ++j) {
    b.windows.col(j) = random_window(omega, rng);
    b.actions.push_back(static_cast<int>(rng() % 2));
    b.targets(j) = u(rng);
  }
  return b;
}

// Largest relative error between analytic and central-difference gradients,
// with an absolute floor of 1e-7 on the denominator.
inline double max_gradient_error(const QNet& p, const TrainingBatch<double>& batch) {
  const auto analytic = qnet_loss_grad(p, batch).grads.flatten();
  VectorXd theta = p.flatten();
  QNet probe = p;
  double worst = 0.0;
  const double step = 1e-5;
  for (Index k = 0; k < theta.size(); ++k) {
    const double saved = theta(k);
    theta(k) = saved + step;
    probe.unflatten(theta);
    const double up = qnet_loss(probe, batch);
    theta(k) = saved - step;
    probe.unflatten(theta);
    const double down = qnet_loss(probe, batch);
    theta(k) = saved;
    const double numeric = (up - down) / (2 * step);
    const double denom = std::max({std::abs(numeric), std::abs(analytic(k)), 1e-7});
    worst = std::max(worst, std::abs(numeric - analytic(k)) / denom);
  }
  return worst;
}

}  // namespace rlad::testing
