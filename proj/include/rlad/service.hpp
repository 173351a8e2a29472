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

// Interactive labeling service. A LabelingSession is shared between the
// trainer (which publishes one query batch at a time and blocks on it) and
// the HTTP handlers (which read status, serve the batch and accept labels).

#include <condition_variable>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "rlad/active.hpp"
#include "rlad/orchestrator.hpp"

namespace rlad {

struct BindAddress {
  std::string host = "127.0.0.1";
  int port = 8723;

  std::string to_string() const { return host + ":" + std::to_string(port); }
};

// "host:port", ":port" or "port". Throws ParameterError.
BindAddress parse_bind_address(const std::string& text);

// --addr wins over RLAD_ADDR, which wins over the default.
BindAddress resolve_bind_address(const std::optional<std::string>& flag);

// Outcome of a label submission, already shaped as an HTTP reply.
struct SubmitResult {
  int http_status = 200;
  nlohmann::json body;
};

class LabelingSession : public RunObserver {
 public:
  // RunObserver: swaps in the trainer's latest snapshot.
  void on_status(const RunStatus& status) override;

  RunStatus status() const;
  nlohmann::json status_json() const;

  // Null when nothing is pending.
  std::optional<nlohmann::json> pending_json() const;

  // Validates and records a LabelSubmission. All-or-nothing: a rejected
  // submission records no labels.
  SubmitResult submit(const nlohmann::json& body);

  // Trainer side. Publishes `batch`, then blocks until every item has a
  // label. Returns the labels in item order, or nullopt on timeout, in
  // which case the batch is withdrawn and its partial labels discarded.
  std::optional<std::vector<int>> await_labels(const QueryBatch& batch,
                                               std::optional<double> timeout_s);

 private:
  struct Pending {
    QueryBatch batch;
    std::vector<std::optional<int>> labels;
    std::size_t answered = 0;
    nlohmann::json wire;
  };

  RunStatus status_locked() const;

  mutable std::mutex mu_;
  std::condition_variable done_;
  RunStatus status_;
  std::optional<Pending> pending_;
  std::set<std::size_t> labeled_;  // window indices labeled during this run
};

// Oracle whose answers come from a human through a LabelingSession.
class HumanOracle : public Oracle {
 public:
  HumanOracle(LabelingSession& session, std::optional<double> timeout_s)
      : session_(session), timeout_s_(timeout_s) {}

  Kind kind() const override { return Kind::kHuman; }
  // Throws QueryError when the timeout elapses.
  std::vector<int> answer(const QueryBatch& batch) override;

 private:
  LabelingSession& session_;
  std::optional<double> timeout_s_;
};

nlohmann::json query_batch_to_json(const QueryBatch& batch);

// HTTP front end:
//   GET  /api/status   run snapshot
//   GET  /api/queries  pending batch, or 204 when none
//   POST /api/labels   LabelSubmission
// plus static files from `static_dir` at "/" when given.
class LabelServer {
 public:
  explicit LabelServer(LabelingSession& session,
                       std::optional<std::filesystem::path> static_dir = std::nullopt);
  ~LabelServer();

  LabelServer(const LabelServer&) = delete;
  LabelServer& operator=(const LabelServer&) = delete;

  // Binds (port 0 picks a free port) and serves on a background thread.
  // Returns the bound port; throws Error when binding fails.
  int start(const BindAddress& addr);
  void stop();
  bool running() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace rlad
