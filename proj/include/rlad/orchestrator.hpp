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

// The training pipeline: preprocessing, isolation-forest warm-up, label
// propagation, Q-learning and margin-sampling queries, repeated per episode.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rlad/active.hpp"
#include "rlad/checkpoint.hpp"
#include "rlad/config.hpp"
#include "rlad/eval.hpp"
#include "rlad/qnet.hpp"
#include "rlad/timeseries.hpp"

namespace rlad {

enum class RunState { kIdle, kTraining, kAwaitingLabels, kDone };

const char* to_string(RunState s);

struct RunStatus {
  RunState state = RunState::kIdle;
  int episode = 0;
  double epsilon = 1.0;
  std::size_t human_labels_used = 0;
  std::size_t pseudo_labels_assigned = 0;
  std::optional<Metrics> latest;
  std::string error;  // set when a run aborted
};

class RunObserver {
 public:
  virtual ~RunObserver() = default;
  virtual void on_status(const RunStatus& status) = 0;
};

struct EpisodeRecord {
  int episode = 0;
  double epsilon = 0.0;
  std::size_t human_labels_used = 0;
  std::size_t pseudo_labels_assigned = 0;
  double loss_mean = 0.0;
  Metrics validation;

  // Bookkeeping for audits; not part of history.csv.
  std::size_t train_steps = 0;
  std::size_t queries_answered = 0;
  std::size_t human_labeled_windows = 0;
};

struct TrainHistory {
  std::vector<EpisodeRecord> episodes;

  bool empty() const { return episodes.empty(); }
  std::string to_csv() const;
  void write_csv(const std::filesystem::path& path) const;
};

// Per-window label state of the training pool. Human labels are final;
// pseudo labels never overwrite them.
class LabelStore {
 public:
  explicit LabelStore(std::size_t windows);

  std::size_t size() const { return labels_.size(); }
  Label label(std::size_t i) const { return labels_.at(i); }
  LabelSource source(std::size_t i) const { return sources_.at(i); }

  void set_human(std::size_t i, int label);
  // Returns true when the window had never been pseudo-labeled before.
  bool set_pseudo(std::size_t i, int label);

  std::size_t count(LabelSource s) const;

 private:
  std::vector<Label> labels_;
  std::vector<LabelSource> sources_;
  std::vector<bool> ever_pseudo_;
};

struct RLADModel {
  QNet params;
  ScalerParams scaler;
  std::size_t window = 0;
  std::string config_fingerprint;

  Checkpoint to_checkpoint() const;
  static RLADModel from_checkpoint(const Checkpoint& ckpt);
};

struct TrainOptions {
  RunObserver* observer = nullptr;
  // When set: config.json up front, then checkpoint.json and history.csv
  // after every episode (and on abort).
  std::optional<std::filesystem::path> run_dir;
  // Oracle answers are appended here, in order, when non-null.
  std::vector<AnsweredQuery>* answers = nullptr;
};

struct TrainResult {
  RLADModel model;
  TrainHistory history;
  LabelBudget budget;
  std::size_t warmup_labels = 0;
  std::size_t train_windows = 0;
  std::size_t test_windows = 0;
  Metrics final_metrics;
};

TrainResult rlad_train(const TimeSeries& series, const RLADConfig& config,
                       Oracle& oracle, const TrainOptions& options = {});

struct WindowPrediction {
  std::size_t end_index;
  int prediction;
};

// Greedy action per window of `series`, scaled with the model's stored
// parameters (clamped to [0, 1]).
std::vector<WindowPrediction> rlad_predict(const RLADModel& model,
                                           const TimeSeries& series);

// Greedy predictions against window labels, skipping unknown labels.
Metrics evaluate_windows(const QNet& params, const std::vector<WindowState>& windows);

// Joins predictions to the point labels of `series` by end_index, skipping
// unknown labels. Throws ShapeError for an end_index outside the series.
Metrics evaluate_predictions(const std::vector<WindowPrediction>& preds,
                             const TimeSeries& series);

void write_predictions(const std::vector<WindowPrediction>& preds,
                       const std::filesystem::path& path);
std::vector<WindowPrediction> read_predictions(const std::filesystem::path& path);

nlohmann::json metrics_to_json(const Metrics& m);

}  // namespace rlad
