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

#include "rlad/orchestrator.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "rlad/agent.hpp"
#include "rlad/iforest.hpp"
#include "rlad/labelprop.hpp"

namespace rlad {

const char* to_string(RunState s) {
  switch (s) {
    case RunState::kTraining:
      return "training";
    case RunState::kAwaitingLabels:
      return "awaiting_labels";
    case RunState::kDone:
      return "done";
    case RunState::kIdle:
      break;
  }
  return "idle";
}

std::string TrainHistory::to_csv() const {
  std::ostringstream out;
  out << "episode,epsilon,human_labels_used,pseudo_labels_assigned,loss_mean,"
         "precision,recall,f1\n";
  char buf[256];
  for (const auto& e : episodes) {
    std::snprintf(buf, sizeof(buf), "%d,%.9f,%zu,%zu,%.9g,%.6f,%.6f,%.6f\n",
                  e.episode, e.epsilon, e.human_labels_used,
                  e.pseudo_labels_assigned, e.loss_mean, e.validation.precision,
                  e.validation.recall, e.validation.f1);
    out << buf;
  }
  return out.str();
}

void TrainHistory::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << to_csv();
}

LabelStore::LabelStore(std::size_t windows)
    : labels_(windows, Label::kUnknown),
      sources_(windows, LabelSource::kNone),
      ever_pseudo_(windows, false) {}

void LabelStore::set_human(std::size_t i, int label) {
  if (sources_.at(i) == LabelSource::kHuman) {
    throw StateError("window " + std::to_string(i) + " already has a human label");
  }
  labels_[i] = label_from_int(label);
  sources_[i] = LabelSource::kHuman;
}

bool LabelStore::set_pseudo(std::size_t i, int label) {
  if (sources_.at(i) == LabelSource::kHuman) return false;
  labels_[i] = label_from_int(label);
  sources_[i] = LabelSource::kPseudo;
  const bool first = !ever_pseudo_[i];
  ever_pseudo_[i] = true;
  return first;
}

std::size_t LabelStore::count(LabelSource s) const {
  return static_cast<std::size_t>(std::count(sources_.begin(), sources_.end(), s));
}

Checkpoint RLADModel::to_checkpoint() const {
  Checkpoint c;
  c.window = window;
  c.params = params;
  c.scaler = scaler;
  c.config_fingerprint = config_fingerprint;
  return c;
}

RLADModel RLADModel::from_checkpoint(const Checkpoint& ckpt) {
  return {ckpt.params, ckpt.scaler, ckpt.window, ckpt.config_fingerprint};
}

Metrics evaluate_windows(const QNet& params, const std::vector<WindowState>& windows) {
  std::vector<WindowState> known;
  for (const auto& w : windows) {
    if (w.label != Label::kUnknown) known.push_back(w);
  }
  if (known.empty()) return {};
  const MatrixXd q = qnet_q_values<double>(params, stack_windows(known));
  std::vector<int> preds(known.size());
  std::vector<int> truth(known.size());
  for (std::size_t j = 0; j < known.size(); ++j) {
    const auto col = static_cast<Index>(j);
    preds[j] = greedy_action(q(0, col), q(1, col));
    truth[j] = to_int(known[j].label);
  }
  return prf1(confusion(preds, truth));
}

nlohmann::json metrics_to_json(const Metrics& m) {
  return {{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1},
          {"tp", m.counts.tp},        {"fp", m.counts.fp},  {"fn", m.counts.fn},
          {"tn", m.counts.tn}};
}

namespace {

class Pipeline {
 public:
  Pipeline(const TimeSeries& series, const RLADConfig& config, Oracle& oracle,
           const TrainOptions& options)
      : config_(config), oracle_(oracle), options_(options) {
    config_.validate();
    series.validate();
    auto [train, test] = split_train_test(series, config_.split_ratio);
    train_raw_ = std::move(train);
    scaler_ = fit_minmax(train_raw_);

    train_windows_ = segment(apply_minmax(train_raw_, scaler_), config_.window);
    // The learner never sees training labels; they live with the oracle.
    for (auto& w : train_windows_) {
      w.label = Label::kUnknown;
      w.label_source = LabelSource::kNone;
    }
    train_matrix_ = stack_windows(train_windows_);

    if (test.size() >= config_.window) {
      test_windows_ = segment(apply_minmax(test, scaler_, /*clamp=*/true), config_.window);
    } else {
      std::cerr << "warning: test split shorter than the window; validation disabled\n";
    }

    store_ = LabelStore(train_windows_.size());
    budget_.cap = config_.label_budget;
  }

  TrainResult run() {
    if (options_.run_dir) {
      std::filesystem::create_directories(*options_.run_dir);
      save_config(config_, *options_.run_dir / "config.json");
    }

    AgentConfig agent_cfg;
    agent_cfg.gamma = config_.gamma;
    agent_cfg.r1 = config_.r1;
    agent_cfg.r2 = config_.r2;
    agent_cfg.batch_size = config_.batch_size;
    agent_cfg.sync_every = config_.sync_every;
    agent_cfg.learning_rate = config_.learning_rate;
    agent_cfg.max_grad_norm = config_.max_grad_norm;
    EpsilonSchedule schedule{config_.epsilon_start, config_.epsilon_decay,
                             config_.epsilon_min, 0};
    agent_.emplace(qnet_init<double>(static_cast<Index>(config_.hidden_size), config_.seed),
                   agent_cfg, config_.replay_capacity, schedule, config_.seed + 1);

    publish(RunState::kTraining);
    try {
      warm_up();
      for (std::size_t e = 1; e <= config_.episodes; ++e) episode(static_cast<int>(e));
    } catch (const std::exception& ex) {
      save_progress();
      RunStatus s = status(RunState::kDone);
      s.error = ex.what();
      if (options_.observer) options_.observer->on_status(s);
      throw;
    }
    save_progress();

    TrainResult result;
    result.model = model();
    result.history = history_;
    result.budget = budget_;
    result.warmup_labels = warmup_labels_;
    result.train_windows = train_windows_.size();
    result.test_windows = test_windows_.size();
    result.final_metrics = history_.empty() ? evaluate_windows(agent_->eval, test_windows_)
                                            : history_.episodes.back().validation;
    publish(RunState::kDone, result.final_metrics);
    return result;
  }

 private:
  void warm_up() {
    IsolationForestOptions opts;
    opts.num_trees = config_.iforest_trees;
    opts.subsample_size = std::min(config_.iforest_subsample, train_windows_.size());
    opts.seed = config_.seed + 2;
    const auto forest = iforest_fit(train_matrix_, opts);
    const auto scores = iforest_score_all(forest, train_matrix_);
    const auto picks = warmup_select(scores, config_.warmup_per_set).all();

    QueryBatch batch = make_batch("warmup", picks, std::vector<double>(picks.size(), 0.0), 0);
    const auto answers = query_oracle(oracle_, batch, budget_);
    record_answers(answers);
    warmup_labels_ = answers.size();

    // Seed replay memory with the correct action for every labeled pick.
    for (const auto& a : answers) {
      Transition t;
      t.state = train_windows_[a.window_index];
      t.state.label = label_from_int(a.label);
      t.state.label_source = LabelSource::kHuman;
      t.action = a.label;
      t.reward = reward(a.label, a.label, config_.r1, config_.r2);
      agent_->memory.push(std::move(t));
    }
    propagate();
  }

  void episode(int index) {
    // Reinforcement learning over every labeled window, in series order.
    std::vector<WindowState> stream;
    for (std::size_t i = 0; i < train_windows_.size(); ++i) {
      if (store_.source(i) == LabelSource::kNone) continue;
      WindowState w = train_windows_[i];
      w.label = store_.label(i);
      w.label_source = store_.source(i);
      stream.push_back(std::move(w));
    }
    const auto epoch = dqn_train_epoch(*agent_, stream);

    // Active learning over windows without a human label.
    if (budget_.exhausted()) {
      std::cerr << "episode " << index << ": label budget exhausted, no queries\n";
    } else {
      std::vector<std::size_t> pool;
      for (std::size_t i = 0; i < train_windows_.size(); ++i) {
        if (store_.source(i) != LabelSource::kHuman) pool.push_back(i);
      }
      if (!pool.empty()) {
        MatrixXd pool_matrix(train_matrix_.rows(), static_cast<Index>(pool.size()));
        for (std::size_t k = 0; k < pool.size(); ++k) {
          pool_matrix.col(static_cast<Index>(k)) = train_matrix_.col(static_cast<Index>(pool[k]));
        }
        const auto ranked = margin_rank(qnet_q_values<double>(agent_->eval, pool_matrix));
        const std::size_t take = std::min(config_.queries_per_episode, ranked.size());
        std::vector<std::size_t> picks;
        std::vector<double> margins;
        for (std::size_t k = 0; k < take; ++k) {
          picks.push_back(pool[ranked[k].index]);
          margins.push_back(ranked[k].margin);
        }
        QueryBatch batch = make_batch("episode-" + std::to_string(index), picks, margins, index);
        record_answers(query_oracle(oracle_, batch, budget_));
      }
      propagate();
    }

    EpisodeRecord rec;
    rec.episode = index;
    rec.epsilon = agent_->schedule.value();
    rec.human_labels_used = budget_.human_labels_used;
    rec.pseudo_labels_assigned = budget_.pseudo_labels_assigned;
    rec.loss_mean = epoch.mean_loss;
    rec.validation = evaluate_windows(agent_->eval, test_windows_);
    rec.train_steps = epoch.steps;
    rec.queries_answered = queries_answered_;
    rec.human_labeled_windows = store_.count(LabelSource::kHuman);
    history_.episodes.push_back(rec);

    save_progress();
    publish(RunState::kTraining, rec.validation);
  }

  // Refit label propagation on every human label and the nearest
  // non-human windows, then merge confident pseudo labels.
  void propagate() {
    std::vector<std::size_t> anchors;
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < train_windows_.size(); ++i) {
      (store_.source(i) == LabelSource::kHuman ? anchors : candidates).push_back(i);
    }
    if (anchors.empty() || candidates.empty()) return;

    const MatrixXd anchor_m = gather(anchors);
    const MatrixXd cand_m = gather(candidates);
    const auto nearest = nearest_candidates(anchor_m, cand_m, config_.lp_pool_cap);
    MatrixXd pool_m(anchor_m.rows(), static_cast<Index>(nearest.size()));
    for (std::size_t k = 0; k < nearest.size(); ++k) {
      pool_m.col(static_cast<Index>(k)) = cand_m.col(nearest[k]);
    }
    std::vector<int> labels;
    labels.reserve(anchors.size());
    for (auto i : anchors) labels.push_back(to_int(store_.label(i)));

    LabelPropagationOptions opts;
    opts.sigma = config_.lp_sigma;
    opts.tolerance = config_.lp_tolerance;
    opts.max_iter = config_.lp_max_iter;
    const auto dist = lp_fit(anchor_m, labels, pool_m, opts);
    for (const auto& p : lp_pseudo_labels(dist, config_.lp_entropy_threshold)) {
      const std::size_t window = candidates[static_cast<std::size_t>(nearest[static_cast<std::size_t>(p.index)])];
      if (store_.set_pseudo(window, p.label)) ++budget_.pseudo_labels_assigned;
    }
  }

  MatrixXd gather(const std::vector<std::size_t>& idx) const {
    MatrixXd m(train_matrix_.rows(), static_cast<Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) {
      m.col(static_cast<Index>(k)) = train_matrix_.col(static_cast<Index>(idx[k]));
    }
    return m;
  }

  QueryBatch make_batch(std::string id, const std::vector<std::size_t>& windows,
                        const std::vector<double>& margins, int episode) const {
    constexpr std::size_t kBefore = 150;
    constexpr std::size_t kAfter = 50;
    QueryBatch batch;
    batch.batch_id = std::move(id);
    batch.created_at = std::chrono::duration_cast<std::chrono::seconds>(
                           std::chrono::system_clock::now().time_since_epoch())
                           .count();
    for (std::size_t k = 0; k < windows.size(); ++k) {
      const auto& w = train_windows_[windows[k]];
      QueryItem item;
      item.window_index = windows[k];
      item.end_index = w.end_index;
      item.margin = margins[k];
      item.window = w.values;
      item.context_offset = w.end_index >= kBefore ? w.end_index - kBefore : 0;
      const std::size_t stop = std::min(train_raw_.size(), w.end_index + kAfter);
      item.context.assign(train_raw_.values.begin() + static_cast<std::ptrdiff_t>(item.context_offset),
                          train_raw_.values.begin() + static_cast<std::ptrdiff_t>(stop));
      item.episode = episode;
      batch.items.push_back(std::move(item));
    }
    return batch;
  }

  void record_answers(const std::vector<AnsweredQuery>& answers) {
    for (const auto& a : answers) {
      store_.set_human(a.window_index, a.label);
      if (options_.answers) options_.answers->push_back(a);
    }
    queries_answered_ += answers.size();
    publish(RunState::kTraining, history_.empty()
                                     ? std::nullopt
                                     : std::optional(history_.episodes.back().validation));
  }

  RLADModel model() const {
    return {agent_->eval, scaler_, config_.window, config_.fingerprint()};
  }

  void save_progress() const {
    if (!options_.run_dir || !agent_) return;
    Checkpoint c = model().to_checkpoint();
    c.optimizer = agent_->optimizer;
    c.train_step = agent_->steps;
    save_checkpoint(c, *options_.run_dir / "checkpoint.json");
    history_.write_csv(*options_.run_dir / "history.csv");
  }

  RunStatus status(RunState state, std::optional<Metrics> latest = std::nullopt) const {
    RunStatus s;
    s.state = state;
    s.episode = history_.empty() ? 0 : history_.episodes.back().episode;
    s.epsilon = agent_ ? agent_->schedule.value() : config_.epsilon_start;
    s.human_labels_used = budget_.human_labels_used;
    s.pseudo_labels_assigned = budget_.pseudo_labels_assigned;
    s.latest = latest;
    return s;
  }

  void publish(RunState state, std::optional<Metrics> latest = std::nullopt) const {
    if (options_.observer) options_.observer->on_status(status(state, latest));
  }

  RLADConfig config_;
  Oracle& oracle_;
  const TrainOptions& options_;

  TimeSeries train_raw_;
  ScalerParams scaler_;
  std::vector<WindowState> train_windows_;
  MatrixXd train_matrix_;
  std::vector<WindowState> test_windows_;

  LabelStore store_{0};
  LabelBudget budget_;
  std::optional<DqnAgent> agent_;
  TrainHistory history_;
  std::size_t warmup_labels_ = 0;
  std::size_t queries_answered_ = 0;
};

}  // namespace

TrainResult rlad_train(const TimeSeries& series, const RLADConfig& config,
                       Oracle& oracle, const TrainOptions& options) {
  Pipeline pipeline(series, config, oracle, options);
  return pipeline.run();
}

std::vector<WindowPrediction> rlad_predict(const RLADModel& model,
                                           const TimeSeries& series) {
  const auto windows = segment(apply_minmax(series, model.scaler, /*clamp=*/true), model.window);
  const MatrixXd q = qnet_q_values<double>(model.params, stack_windows(windows));
  std::vector<WindowPrediction> out;
  out.reserve(windows.size());
  for (std::size_t j = 0; j < windows.size(); ++j) {
    const auto col = static_cast<Index>(j);
    out.push_back({windows[j].end_index, greedy_action(q(0, col), q(1, col))});
  }
  return out;
}

Metrics evaluate_predictions(const std::vector<WindowPrediction>& preds,
                             const TimeSeries& series) {
  std::vector<int> predicted;
  std::vector<int> actual;
  for (const auto& p : preds) {
    if (p.end_index >= series.size()) {
      throw ShapeError("prediction for point " + std::to_string(p.end_index) +
                       " but the series has " + std::to_string(series.size()) + " points");
    }
    const Label l = series.labels[p.end_index];
    if (l == Label::kUnknown) continue;
    predicted.push_back(p.prediction);
    actual.push_back(to_int(l));
  }
  return prf1(confusion(predicted, actual));
}

void write_predictions(const std::vector<WindowPrediction>& preds,
                       const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << "end_index,prediction\n";
  for (const auto& p : preds) out << p.end_index << ',' << p.prediction << '\n';
}

std::vector<WindowPrediction> read_predictions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::vector<WindowPrediction> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || (line_no == 1 && line.rfind("end_index", 0) == 0)) continue;
    unsigned long long end = 0;
    int pred = 0;
    char tail = 0;
    if (std::sscanf(line.c_str(), "%llu,%d%c", &end, &pred, &tail) != 2 ||
        (pred != 0 && pred != 1)) {
      throw ParseError("bad prediction row '" + line + "'", line_no);
    }
    out.push_back({static_cast<std::size_t>(end), pred});
  }
  return out;
}

}  // namespace rlad
