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

#include "rlad/service.hpp"

#include <chrono>
#include <cstdlib>
#include <map>

#include "httplib.h"

namespace rlad {

using nlohmann::json;

BindAddress parse_bind_address(const std::string& text) {
  BindAddress addr;
  std::string port_text = text;
  if (const auto colon = text.rfind(':'); colon != std::string::npos) {
    if (colon > 0) addr.host = text.substr(0, colon);
    port_text = text.substr(colon + 1);
  }
  std::size_t used = 0;
  int port = -1;
  try {
    port = std::stoi(port_text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != port_text.size() || port < 0 || port > 65535) {
    throw ParameterError("invalid bind address '" + text + "'");
  }
  addr.port = port;
  return addr;
}

BindAddress resolve_bind_address(const std::optional<std::string>& flag) {
  if (flag) return parse_bind_address(*flag);
  if (const char* env = std::getenv("RLAD_ADDR"); env && *env) return parse_bind_address(env);
  return {};
}

json query_batch_to_json(const QueryBatch& batch) {
  json items = json::array();
  for (const auto& it : batch.items) {
    items.push_back({{"index", it.window_index},
                     {"end_index", it.end_index},
                     {"margin", it.margin},
                     {"window", std::vector<double>(it.window.data(),
                                                    it.window.data() + it.window.size())},
                     {"context", it.context},
                     {"context_offset", it.context_offset},
                     {"episode", it.episode}});
  }
  return {{"batch_id", batch.batch_id}, {"created_at", batch.created_at}, {"items", items}};
}

// ---------------------------------------------------------------------------
// LabelingSession

void LabelingSession::on_status(const RunStatus& status) {
  std::lock_guard lock(mu_);
  status_ = status;
}

RunStatus LabelingSession::status_locked() const {
  RunStatus s = status_;
  if (pending_) s.state = RunState::kAwaitingLabels;
  return s;
}

RunStatus LabelingSession::status() const {
  std::lock_guard lock(mu_);
  return status_locked();
}

json LabelingSession::status_json() const {
  std::lock_guard lock(mu_);
  const RunStatus s = status_locked();
  json j = {{"state", to_string(s.state)},
            {"episode", s.episode},
            {"epsilon", s.epsilon},
            {"human_labels_used", s.human_labels_used},
            {"pseudo_labels_assigned", s.pseudo_labels_assigned},
            {"pending_batch_size", pending_ ? pending_->batch.size() : 0},
            {"latest", s.latest ? metrics_to_json(*s.latest) : json(nullptr)}};
  if (!s.error.empty()) j["error"] = s.error;
  return j;
}

std::optional<json> LabelingSession::pending_json() const {
  std::lock_guard lock(mu_);
  if (!pending_) return std::nullopt;
  return pending_->wire;
}

namespace {

SubmitResult reject(int status, const std::string& message) {
  return {status, {{"error", message}}};
}

}  // namespace

SubmitResult LabelingSession::submit(const json& body) {
  if (!body.is_object() || !body.contains("batch_id") || !body["batch_id"].is_string() ||
      !body.contains("labels") || !body["labels"].is_array()) {
    return reject(400, "expected {batch_id: string, labels: [{index, label}]}");
  }
  const auto batch_id = body["batch_id"].get<std::string>();

  // Parse fully before touching shared state.
  std::vector<std::pair<std::size_t, int>> entries;
  for (const auto& e : body["labels"]) {
    if (!e.is_object() || !e.contains("index") || !e.contains("label") ||
        !e["index"].is_number_integer() || !e["label"].is_number_integer()) {
      return reject(400, "each label needs integer 'index' and 'label'");
    }
    const auto index = e["index"].get<std::int64_t>();
    const auto label = e["label"].get<std::int64_t>();
    if (label != 0 && label != 1) return reject(400, "label must be 0 or 1");
    if (index < 0) return reject(400, "index must be non-negative");
    entries.emplace_back(static_cast<std::size_t>(index), static_cast<int>(label));
  }
  if (entries.empty()) return reject(400, "labels must not be empty");

  std::lock_guard lock(mu_);
  if (!pending_ || pending_->batch.batch_id != batch_id) {
    return reject(409, "batch '" + batch_id + "' is not pending");
  }
  auto& p = *pending_;
  std::map<std::size_t, std::size_t> slot;  // window index -> item position
  for (std::size_t k = 0; k < p.batch.size(); ++k) slot[p.batch.items[k].window_index] = k;

  std::set<std::size_t> seen;
  for (const auto& [index, label] : entries) {
    const auto it = slot.find(index);
    if (it == slot.end()) {
      return reject(400, "index " + std::to_string(index) + " is not in the batch");
    }
    if (!seen.insert(index).second || p.labels[it->second] || labeled_.count(index)) {
      return reject(409, "index " + std::to_string(index) + " is already labeled");
    }
  }

  for (const auto& [index, label] : entries) {
    p.labels[slot[index]] = label;
    labeled_.insert(index);
    ++p.answered;
  }
  const std::size_t remaining = p.batch.size() - p.answered;
  if (remaining == 0) {
    // The trainer resumes; report it as training until it publishes again.
    status_.state = RunState::kTraining;
    done_.notify_all();
  }
  return {200,
          {{"batch_id", batch_id},
           {"accepted", entries.size()},
           {"remaining", remaining},
           {"complete", remaining == 0}}};
}

std::optional<std::vector<int>> LabelingSession::await_labels(
    const QueryBatch& batch, std::optional<double> timeout_s) {
  std::unique_lock lock(mu_);
  if (pending_) throw StateError("a query batch is already pending");
  for (const auto& it : batch.items) {
    if (labeled_.count(it.window_index)) {
      throw StateError("window " + std::to_string(it.window_index) + " was already labeled");
    }
  }
  if (batch.empty()) return std::vector<int>{};

  pending_.emplace();
  pending_->batch = batch;
  pending_->labels.assign(batch.size(), std::nullopt);
  pending_->wire = query_batch_to_json(batch);

  const auto complete = [&] { return pending_->answered == pending_->batch.size(); };
  bool ok = true;
  if (timeout_s) {
    ok = done_.wait_for(lock, std::chrono::duration<double>(*timeout_s), complete);
  } else {
    done_.wait(lock, complete);
  }

  if (!ok) {
    for (std::size_t k = 0; k < pending_->labels.size(); ++k) {
      if (pending_->labels[k]) labeled_.erase(pending_->batch.items[k].window_index);
    }
    pending_.reset();
    return std::nullopt;
  }
  std::vector<int> out;
  out.reserve(batch.size());
  for (const auto& l : pending_->labels) out.push_back(*l);
  pending_.reset();
  return out;
}

std::vector<int> HumanOracle::answer(const QueryBatch& batch) {
  auto labels = session_.await_labels(batch, timeout_s_);
  if (!labels) {
    throw QueryError("no labels for batch '" + batch.batch_id + "' within " +
                     std::to_string(*timeout_s_) + " s");
  }
  return *labels;
}

// ---------------------------------------------------------------------------
// LabelServer

struct LabelServer::Impl {
  LabelingSession& session;
  httplib::Server server;
  std::thread thread;
};

namespace {

constexpr const char* kJson = "application/json";

}  // namespace

LabelServer::LabelServer(LabelingSession& session,
                         std::optional<std::filesystem::path> static_dir)
    : impl_(new Impl{session, {}, {}}) {
  auto& srv = impl_->server;
  auto& s = impl_->session;

  srv.Get("/api/status", [&s](const httplib::Request&, httplib::Response& res) {
    res.set_content(s.status_json().dump(), kJson);
  });
  srv.Get("/api/queries", [&s](const httplib::Request&, httplib::Response& res) {
    if (auto q = s.pending_json()) {
      res.set_content(q->dump(), kJson);
    } else {
      res.status = 204;
    }
  });
  srv.Post("/api/labels", [&s](const httplib::Request& req, httplib::Response& res) {
    json body = json::parse(req.body, nullptr, /*allow_exceptions=*/false);
    SubmitResult r = body.is_discarded() ? SubmitResult{400, {{"error", "malformed JSON"}}}
                                         : s.submit(body);
    res.status = r.http_status;
    res.set_content(r.body.dump(), kJson);
  });

  if (static_dir && !srv.set_mount_point("/", static_dir->string())) {
    throw Error("cannot serve static files from '" + static_dir->string() + "'");
  }
}

LabelServer::~LabelServer() { stop(); }

int LabelServer::start(const BindAddress& addr) {
  if (running()) throw StateError("server already running");
  auto& srv = impl_->server;
  int port = addr.port;
  if (port == 0) {
    port = srv.bind_to_any_port(addr.host);
    if (port < 0) throw Error("cannot bind " + addr.host);
  } else if (!srv.bind_to_port(addr.host, port)) {
    throw Error("cannot bind " + addr.to_string());
  }
  impl_->thread = std::thread([&srv] { srv.listen_after_bind(); });
  srv.wait_until_ready();
  return port;
}

void LabelServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

bool LabelServer::running() const { return impl_ && impl_->server.is_running(); }

}  // namespace rlad
