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
#include <string>
#include <utility>
#include <vector>

#include "rlad/common.hpp"

namespace rlad {

// Univariate labeled series. Timestamps are integer seconds.
struct TimeSeries {
  std::vector<std::int64_t> timestamps;
  std::vector<double> values;
  std::vector<Label> labels;
  std::string name;

  std::size_t size() const { return values.size(); }
  bool empty() const { return values.empty(); }

  // Throws IntegrityError when lengths differ or timestamps are not strictly
  // increasing.
  void validate() const;

  // Contiguous sub-series [first, first + count).
  TimeSeries slice(std::size_t first, std::size_t count) const;
};

struct ScalerParams {
  double min = 0.0;
  double max = 0.0;

  double apply(double v) const;
  // apply() followed by clamping into [0, 1], used for data the scaler was
  // not fit on.
  double apply_clamped(double v) const;
};

// One MDP state: omega consecutive scaled values, labeled by its last point.
struct WindowState {
  VectorXd values;
  std::size_t end_index = 0;
  Label label = Label::kUnknown;
  LabelSource label_source = LabelSource::kNone;

  Index width() const { return values.size(); }
};

enum class CsvFormat { kYahoo, kKpi };

CsvFormat parse_csv_format(const std::string& name);

// Reads a Yahoo (`timestamp,value,is_anomaly`) or KPI
// (`timestamp,value,label,KPI ID`) CSV. Rows are sorted by timestamp;
// exact duplicate rows are dropped, conflicting duplicates are an
// IntegrityError.
TimeSeries load_series(const std::filesystem::path& path, CsvFormat format);

// Writes the Yahoo layout.
void save_series(const TimeSeries& series, const std::filesystem::path& path);

ScalerParams fit_minmax(const TimeSeries& series);
TimeSeries apply_minmax(const TimeSeries& series, const ScalerParams& params,
                        bool clamp = false);
std::pair<TimeSeries, ScalerParams> scale_minmax(const TimeSeries& series);

// Stride-1 sliding windows; n - omega + 1 of them.
std::vector<WindowState> segment(const TimeSeries& series, std::size_t omega);

std::pair<TimeSeries, TimeSeries> split_train_test(const TimeSeries& series,
                                                   double ratio);

enum class AnomalyKind { kSpike, kLevelShift };

AnomalyKind parse_anomaly_kind(const std::string& name);

struct SyntheticSpec {
  std::size_t n = 10000;
  double anomaly_rate = 0.003;
  AnomalyKind kind = AnomalyKind::kSpike;
  std::uint64_t seed = 7;
  std::size_t period = 100;
  double amplitude = 1.0;
};

// Seasonal signal with Gaussian noise (sigma = 0.05 * amplitude) and
// ceil(n * rate) labeled anomalies, each displaced by at least
// 8 * sigma from the clean signal.
TimeSeries gen_synthetic(const SyntheticSpec& spec);

// Stacks window values column-wise into an omega x count matrix.
MatrixXd stack_windows(const std::vector<WindowState>& windows);

}  // namespace rlad
