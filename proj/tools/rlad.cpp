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

// rlad: generate | train | predict | evaluate | serve
//
// Exit codes: 0 success, 1 usage error, 2 runtime error. Machine-readable
// output goes to stdout, progress to stderr.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "rlad/config.hpp"
#include "rlad/orchestrator.hpp"
#include "rlad/service.hpp"
#include "rlad/timeseries.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kUsageError = 1;
constexpr int kRuntimeError = 2;

// Thrown for flag combinations CLI11 cannot express.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::atomic<bool> g_interrupted{false};

void on_signal(int) { g_interrupted = true; }

void require_file(const fs::path& p) {
  if (!fs::is_regular_file(p)) throw rlad::Error("no such file: '" + p.string() + "'");
}

// One --flag per config key; values are parsed as JSON literals so that
// "null" clears an optional field.
struct ConfigFlags {
  std::map<std::string, std::string> values;

  void attach(CLI::App& cmd) {
    const json defaults = rlad::RLADConfig{};
    for (const auto& [key, value] : defaults.items()) {
      std::string flag = "--" + key;
      std::replace(flag.begin(), flag.end(), '_', '-');
      cmd.add_option(flag, values[key], "config override (default " + value.dump() + ")")
          ->group("Config overrides");
    }
  }

  rlad::RLADConfig resolve(const std::optional<fs::path>& file) const {
    json j = rlad::RLADConfig{};
    if (file) {
      require_file(*file);
      j = rlad::load_config(*file);
    }
    for (const auto& [key, text] : values) {
      if (text.empty()) continue;
      const json v = json::parse(text, nullptr, /*allow_exceptions=*/false);
      if (v.is_discarded()) throw UsageError("invalid value '" + text + "' for " + key);
      j[key] = v;
    }
    rlad::RLADConfig c;
    try {
      c = j.get<rlad::RLADConfig>();
      c.validate();
    } catch (const rlad::ParameterError& e) {
      throw UsageError(e.what());
    }
    return c;
  }
};

// Mirrors status changes to stderr, one line per episode.
class ProgressPrinter : public rlad::RunObserver {
 public:
  explicit ProgressPrinter(rlad::RunObserver* next) : next_(next) {}

  void on_status(const rlad::RunStatus& s) override {
    if (next_) next_->on_status(s);
    if (s.episode != last_episode_ && s.latest) {
      last_episode_ = s.episode;
      std::fprintf(stderr, "episode %d  eps %.4f  human %zu  pseudo %zu  P %.3f R %.3f F1 %.3f\n",
                   s.episode, s.epsilon, s.human_labels_used, s.pseudo_labels_assigned,
                   s.latest->precision, s.latest->recall, s.latest->f1);
    }
    if (!s.error.empty()) std::fprintf(stderr, "run aborted: %s\n", s.error.c_str());
  }

 private:
  rlad::RunObserver* next_;
  int last_episode_ = -1;
};

void write_json(const json& j, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw rlad::Error("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

void write_labels(const std::vector<rlad::AnsweredQuery>& answers, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw rlad::Error("cannot write '" + path.string() + "'");
  out << "window_index,end_index,label\n";
  for (const auto& a : answers) out << a.window_index << ',' << a.end_index << ',' << a.label << '\n';
}

fs::path checkpoint_path(const fs::path& model) {
  return fs::is_directory(model) ? model / "checkpoint.json" : model;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RLAD: semi-supervised time-series anomaly detection"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "write a synthetic labeled series");
  rlad::SyntheticSpec spec;
  std::string kind = "spike";
  fs::path gen_out;
  gen->add_option("--kind", kind, "spike | level_shift")->capture_default_str();
  gen->add_option("--n", spec.n, "number of points")->capture_default_str();
  gen->add_option("--rate", spec.anomaly_rate, "anomaly rate")->capture_default_str();
  gen->add_option("--seed", spec.seed)->capture_default_str();
  gen->add_option("--period", spec.period)->capture_default_str();
  gen->add_option("--amplitude", spec.amplitude)->capture_default_str();
  gen->add_option("--out", gen_out, "output CSV")->required();

  // train
  auto* train = app.add_subcommand("train", "train a detector");
  fs::path data;
  std::string format = "yahoo";
  std::string oracle_kind = "scripted";
  std::optional<fs::path> config_file;
  fs::path run_dir;
  std::optional<std::string> addr;
  std::optional<fs::path> ui_dir;
  ConfigFlags flags;
  train->add_option("--data", data, "input CSV")->required();
  train->add_option("--format", format, "yahoo | kpi")->capture_default_str();
  train->add_option("--oracle", oracle_kind, "scripted | human")
      ->check(CLI::IsMember({"scripted", "human"}))
      ->capture_default_str();
  train->add_option("--config", config_file, "JSON config; flags override it");
  train->add_option("--out", run_dir, "run directory")->required();
  train->add_option("--addr", addr, "service address for --oracle human (host:port)");
  train->add_option("--ui-dir", ui_dir, "static files served at / for --oracle human");
  flags.attach(*train);

  // predict
  auto* predict = app.add_subcommand("predict", "label every window of a series");
  fs::path model;
  fs::path preds_out;
  predict->add_option("--model", model, "run directory or checkpoint.json")->required();
  predict->add_option("--data", data, "input CSV")->required();
  predict->add_option("--format", format, "yahoo | kpi")->capture_default_str();
  predict->add_option("--out", preds_out, "predictions CSV")->required();

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "score predictions against labels");
  fs::path preds_in;
  evaluate->add_option("--preds", preds_in, "predictions CSV")->required();
  evaluate->add_option("--data", data, "labeled CSV")->required();
  evaluate->add_option("--format", format, "yahoo | kpi")->capture_default_str();

  // serve
  auto* serve = app.add_subcommand("serve", "run the labeling service without a training run");
  serve->add_option("--addr", addr, "host:port");
  serve->add_option("--ui-dir", ui_dir, "static files served at /");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  try {
    if (*gen) {
      spec.kind = rlad::parse_anomaly_kind(kind);
      rlad::save_series(rlad::gen_synthetic(spec), gen_out);
      std::fprintf(stderr, "wrote %zu points to %s\n", spec.n, gen_out.string().c_str());
      return 0;
    }

    if (*train) {
      if (oracle_kind != "human" && (addr || ui_dir)) {
        throw UsageError("--addr and --ui-dir require --oracle human");
      }
      const auto cfg = flags.resolve(config_file);
      const auto fmt = rlad::parse_csv_format(format);
      require_file(data);
      const auto series = rlad::load_series(data, fmt);

      rlad::LabelingSession session;
      std::optional<rlad::LabelServer> server;
      std::unique_ptr<rlad::Oracle> oracle;
      if (oracle_kind == "human") {
        server.emplace(session, ui_dir);
        const auto bind = rlad::resolve_bind_address(addr);
        const int port = server->start(bind);
        std::fprintf(stderr, "labeling service on http://%s:%d/\n", bind.host.c_str(), port);
        oracle = std::make_unique<rlad::HumanOracle>(session, cfg.query_timeout_s);
      } else {
        oracle = std::make_unique<rlad::ScriptedOracle>(series.labels);
      }

      ProgressPrinter progress(&session);
      std::vector<rlad::AnsweredQuery> answers;
      rlad::TrainOptions opts;
      opts.observer = &progress;
      opts.run_dir = run_dir;
      opts.answers = &answers;
      const auto result = rlad::rlad_train(series, cfg, *oracle, opts);

      write_json(rlad::metrics_to_json(result.final_metrics), run_dir / "metrics.json");
      write_labels(answers, run_dir / "labels.csv");
      std::fprintf(stderr, "done: %zu human labels, test F1 %.4f, outputs in %s\n",
                   result.budget.human_labels_used, result.final_metrics.f1,
                   run_dir.string().c_str());
      return 0;
    }

    if (*predict) {
      const auto ckpt = checkpoint_path(model);
      require_file(ckpt);
      require_file(data);
      const auto m = rlad::RLADModel::from_checkpoint(rlad::load_checkpoint(ckpt));
      const auto preds = rlad::rlad_predict(m, rlad::load_series(data, rlad::parse_csv_format(format)));
      rlad::write_predictions(preds, preds_out);
      std::fprintf(stderr, "wrote %zu predictions to %s\n", preds.size(),
                   preds_out.string().c_str());
      return 0;
    }

    if (*evaluate) {
      require_file(preds_in);
      require_file(data);
      const auto series = rlad::load_series(data, rlad::parse_csv_format(format));
      const auto metrics = rlad::evaluate_predictions(rlad::read_predictions(preds_in), series);
      std::cout << rlad::metrics_to_json(metrics).dump(2) << '\n';
      return 0;
    }

    if (*serve) {
      rlad::LabelingSession session;
      rlad::LabelServer server(session, ui_dir);
      const auto bind = rlad::resolve_bind_address(addr);
      const int port = server.start(bind);
      std::fprintf(stderr, "labeling service on http://%s:%d/ (Ctrl-C to stop)\n",
                   bind.host.c_str(), port);
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      while (!g_interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(100));
      server.stop();
      return 0;
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kUsageError;
  } catch (const rlad::ParameterError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kUsageError;
}
