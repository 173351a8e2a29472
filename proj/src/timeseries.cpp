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

#include "rlad/timeseries.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>
#include <string_view>

namespace rlad {

const char* to_string(LabelSource s) {
  switch (s) {
    case LabelSource::kHuman:
      return "human";
    case LabelSource::kPseudo:
      return "pseudo";
    case LabelSource::kNone:
      break;
  }
  return "none";
}

void TimeSeries::validate() const {
  if (timestamps.size() != values.size() || labels.size() != values.size()) {
    throw IntegrityError("series '" + name + "': column lengths differ");
  }
  for (std::size_t i = 1; i < timestamps.size(); ++i) {
    if (timestamps[i] <= timestamps[i - 1]) {
      throw IntegrityError("series '" + name +
                           "': timestamps not strictly increasing at row " +
                           std::to_string(i));
    }
  }
}

TimeSeries TimeSeries::slice(std::size_t first, std::size_t count) const {
  if (first + count > size()) throw SizeError("slice out of range");
  TimeSeries out;
  out.name = name;
  const auto b = static_cast<std::ptrdiff_t>(first);
  const auto e = static_cast<std::ptrdiff_t>(first + count);
  out.timestamps.assign(timestamps.begin() + b, timestamps.begin() + e);
  out.values.assign(values.begin() + b, values.begin() + e);
  out.labels.assign(labels.begin() + b, labels.begin() + e);
  return out;
}

double ScalerParams::apply(double v) const {
  const double range = max - min;
  if (!(range > 0.0)) return 0.0;
  return (v - min) / range;
}

double ScalerParams::apply_clamped(double v) const {
  return std::clamp(apply(v), 0.0, 1.0);
}

CsvFormat parse_csv_format(const std::string& name) {
  if (name == "yahoo") return CsvFormat::kYahoo;
  if (name == "kpi") return CsvFormat::kKpi;
  throw ParameterError("unknown csv format '" + name + "'");
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    auto field = line.substr(start, comma == std::string_view::npos
                                        ? std::string_view::npos
                                        : comma - start);
    while (!field.empty() && (field.front() == ' ' || field.front() == '"'))
      field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '"' ||
                              field.back() == '\r'))
      field.remove_suffix(1);
    out.push_back(field);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  if (s.empty()) return false;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

bool parse_timestamp(std::string_view s, std::int64_t& out) {
  if (parse_number(s, out)) return true;
  // Some exports write integral timestamps as "1.0e9" style floats.
  double d = 0.0;
  if (!parse_number(s, d) || d != std::floor(d)) return false;
  out = static_cast<std::int64_t>(d);
  return true;
}

struct Row {
  std::int64_t ts;
  double value;
  int label;
};

}  // namespace

TimeSeries load_series(const std::filesystem::path& path, CsvFormat format) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");

  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::vector<Row> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_fields(line);
    if (!header_seen) {
      header_seen = true;
      // Header is optional; any non-numeric first field marks one.
      std::int64_t probe = 0;
      if (!parse_timestamp(fields.front(), probe)) continue;
    }
    const std::size_t need = 3;
    if (fields.size() < need) {
      throw ParseError("expected at least " + std::to_string(need) +
                           " columns, got " + std::to_string(fields.size()),
                       line_no);
    }
    Row row{};
    if (!parse_timestamp(fields[0], row.ts)) {
      throw ParseError("bad timestamp '" + std::string(fields[0]) + "'",
                       line_no);
    }
    if (!parse_number(fields[1], row.value) || !std::isfinite(row.value)) {
      throw ParseError("bad value '" + std::string(fields[1]) + "'", line_no);
    }
    double label = 0.0;
    if (!parse_number(fields[2], label) || label != std::floor(label) ||
        label < -1.0 || label > 1.0) {
      throw ParseError("bad label '" + std::string(fields[2]) + "'", line_no);
    }
    row.label = static_cast<int>(label);
    rows.push_back(row);
  }
  if (rows.empty()) {
    throw ParseError("'" + path.string() + "' contains no data rows");
  }

  std::stable_sort(rows.begin(), rows.end(),
                   [](const Row& a, const Row& b) { return a.ts < b.ts; });
  // Exact duplicates collapse; a repeated timestamp with different content
  // survives and is rejected by validate().
  rows.erase(std::unique(rows.begin(), rows.end(),
                         [](const Row& a, const Row& b) {
                           return a.ts == b.ts && a.value == b.value &&
                                  a.label == b.label;
                         }),
             rows.end());

  TimeSeries ts;
  ts.name = path.stem().string();
  ts.timestamps.reserve(rows.size());
  ts.values.reserve(rows.size());
  ts.labels.reserve(rows.size());
  for (const auto& r : rows) {
    ts.timestamps.push_back(r.ts);
    ts.values.push_back(r.value);
    ts.labels.push_back(label_from_int(r.label));
  }
  ts.validate();
  (void)format;  // both layouts share the first three columns
  return ts;
}

void save_series(const TimeSeries& series, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << "timestamp,value,is_anomaly\n";
  char buf[64];
  for (std::size_t i = 0; i < series.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", series.values[i]);
    out << series.timestamps[i] << ',' << buf << ','
        << to_int(series.labels[i]) << '\n';
  }
}

ScalerParams fit_minmax(const TimeSeries& series) {
  if (series.empty()) throw SizeError("cannot fit scaler on an empty series");
  const auto [lo, hi] =
      std::minmax_element(series.values.begin(), series.values.end());
  return {*lo, *hi};
}

TimeSeries apply_minmax(const TimeSeries& series, const ScalerParams& params,
                        bool clamp) {
  TimeSeries out = series;
  for (auto& v : out.values) v = clamp ? params.apply_clamped(v) : params.apply(v);
  return out;
}

std::pair<TimeSeries, ScalerParams> scale_minmax(const TimeSeries& series) {
  const auto params = fit_minmax(series);
  return {apply_minmax(series, params), params};
}

std::vector<WindowState> segment(const TimeSeries& series, std::size_t omega) {
  if (omega == 0) throw ParameterError("window size must be positive");
  if (series.size() < omega) {
    throw SizeError("series of length " + std::to_string(series.size()) +
                    " is shorter than window " + std::to_string(omega));
  }
  const std::size_t count = series.size() - omega + 1;
  const Eigen::Map<const VectorXd> all(series.values.data(),
                                       static_cast<Index>(series.size()));
  std::vector<WindowState> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    WindowState w;
    w.values = all.segment(static_cast<Index>(k), static_cast<Index>(omega));
    w.end_index = k + omega - 1;
    w.label = series.labels[w.end_index];
    w.label_source =
        w.label == Label::kUnknown ? LabelSource::kNone : LabelSource::kHuman;
    out.push_back(std::move(w));
  }
  return out;
}

std::pair<TimeSeries, TimeSeries> split_train_test(const TimeSeries& series,
                                                   double ratio) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw ParameterError("split ratio must lie in (0, 1)");
  }
  const std::size_t n = series.size();
  if (n < 2) throw SizeError("cannot split a series shorter than 2");
  const auto cut =
      static_cast<std::size_t>(std::floor(static_cast<double>(n) * ratio));
  if (cut == 0 || cut == n) {
    throw SizeError("split ratio " + std::to_string(ratio) + " on length " +
                    std::to_string(n) + " leaves an empty part");
  }
  return {series.slice(0, cut), series.slice(cut, n - cut)};
}

AnomalyKind parse_anomaly_kind(const std::string& name) {
  if (name == "spike") return AnomalyKind::kSpike;
  if (name == "level_shift") return AnomalyKind::kLevelShift;
  throw ParameterError("unknown anomaly kind '" + name + "'");
}

TimeSeries gen_synthetic(const SyntheticSpec& spec) {
  if (spec.n < 100) throw ParameterError("synthetic series needs n >= 100");
  if (!(spec.anomaly_rate > 0.0 && spec.anomaly_rate < 0.1)) {
    throw ParameterError("anomaly rate must lie in (0, 0.1)");
  }
  if (spec.period == 0 || !(spec.amplitude > 0.0)) {
    throw ParameterError("period and amplitude must be positive");
  }

  std::mt19937_64 rng(spec.seed);
  const double sigma = 0.05 * spec.amplitude;
  std::normal_distribution<double> noise(0.0, sigma);
  // Displacements of 2.5..4 amplitudes put every anomaly outside the clean
  // signal's range, far beyond the 8-sigma floor.
  std::uniform_real_distribution<double> magnitude(2.5 * spec.amplitude,
                                                   4.0 * spec.amplitude);
  std::bernoulli_distribution coin(0.5);

  const std::size_t n = spec.n;
  const auto k = static_cast<std::size_t>(
      std::ceil(static_cast<double>(n) * spec.anomaly_rate - 1e-9));

  // One anomaly per stratum keeps positions distinct and apart.
  std::vector<std::size_t> positions;
  positions.reserve(k);
  const double stride = static_cast<double>(n) / static_cast<double>(k);
  for (std::size_t s = 0; s < k; ++s) {
    const auto lo = static_cast<std::size_t>(std::ceil(stride * s + stride * 0.25));
    const auto hi = std::max(
        lo, static_cast<std::size_t>(std::floor(stride * s + stride * 0.75)));
    std::uniform_int_distribution<std::size_t> pick(lo, std::min(hi, n - 1));
    positions.push_back(pick(rng));
  }

  TimeSeries ts;
  ts.name = spec.kind == AnomalyKind::kSpike ? "synthetic_spike"
                                             : "synthetic_level_shift";
  ts.timestamps.resize(n);
  ts.values.resize(n);
  ts.labels.assign(n, Label::kNormal);
  const double omega = 2.0 * std::numbers::pi / static_cast<double>(spec.period);
  for (std::size_t t = 0; t < n; ++t) {
    ts.timestamps[t] = static_cast<std::int64_t>(t) + 1;
    ts.values[t] = spec.amplitude * std::sin(omega * static_cast<double>(t)) +
                   noise(rng);
  }

  if (spec.kind == AnomalyKind::kSpike) {
    for (auto p : positions) {
      const double m = magnitude(rng);
      ts.values[p] += coin(rng) ? m : -m;
      ts.labels[p] = Label::kAnomaly;
    }
  } else {
    // Each onset starts a new persistent level; only the onset is labeled.
    double level = 0.0;
    std::size_t next = 0;
    for (std::size_t t = 0; t < n; ++t) {
      if (next < positions.size() && positions[next] == t) {
        const double m = magnitude(rng);
        // Alternate direction around zero so the series stays bounded.
        level += level > 0.0 ? -m : (level < 0.0 ? m : (coin(rng) ? m : -m));
        ts.labels[t] = Label::kAnomaly;
        ++next;
      }
      ts.values[t] += level;
    }
  }
  return ts;
}

MatrixXd stack_windows(const std::vector<WindowState>& windows) {
  if (windows.empty()) return {};
  const Index rows = windows.front().width();
  MatrixXd out(rows, static_cast<Index>(windows.size()));
  for (std::size_t j = 0; j < windows.size(); ++j) {
    if (windows[j].width() != rows) throw ShapeError("ragged window set");
    out.col(static_cast<Index>(j)) = windows[j].values;
  }
  return out;
}

}  // namespace rlad
