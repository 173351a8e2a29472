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

#include "rlad/checkpoint.hpp"

#include <fstream>
#include <vector>

namespace rlad {

namespace {

using nlohmann::json;

// Matrices are stored row-major as {"rows", "cols", "data"}.
template <typename Derived>
json dense_to_json(const Eigen::MatrixBase<Derived>& m) {
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

MatrixXd dense_from_json(const json& j, Index rows, Index cols, const char* name) {
  const auto r = j.at("rows").get<Index>();
  const auto c = j.at("cols").get<Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (r != rows || c != cols || static_cast<Index>(data.size()) != rows * cols) {
    throw ShapeError(std::string("checkpoint array '") + name + "' has shape " +
                     std::to_string(r) + "x" + std::to_string(c) + ", expected " +
                     std::to_string(rows) + "x" + std::to_string(cols));
  }
  MatrixXd m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index k = 0; k < cols; ++k) m(i, k) = data[static_cast<std::size_t>(i * cols + k)];
  return m;
}

json params_to_json(const QNet& p) {
  return {{"w_in", dense_to_json(p.w_in)},
          {"w_rec", dense_to_json(p.w_rec)},
          {"bias", dense_to_json(p.bias)},
          {"w_out", dense_to_json(p.w_out)},
          {"b_out", dense_to_json(p.b_out)}};
}

QNet params_from_json(const json& j, Index h) {
  auto p = QNet::zeros(h);
  p.w_in = dense_from_json(j.at("w_in"), 4 * h, 1, "w_in");
  p.w_rec = dense_from_json(j.at("w_rec"), 4 * h, h, "w_rec");
  p.bias = dense_from_json(j.at("bias"), 4 * h, 1, "bias");
  p.w_out = dense_from_json(j.at("w_out"), 2, h, "w_out");
  p.b_out = dense_from_json(j.at("b_out"), 2, 1, "b_out");
  if (!p.all_finite()) throw NumericError("checkpoint contains non-finite weights");
  return p;
}

}  // namespace

json checkpoint_to_json(const Checkpoint& ckpt) {
  json j;
  j["format_version"] = Checkpoint::kFormatVersion;
  j["hidden_size"] = ckpt.params.hidden;
  j["window"] = ckpt.window;
  j["train_step"] = ckpt.train_step;
  j["scaler"] = {{"min", ckpt.scaler.min}, {"max", ckpt.scaler.max}};
  j["config_fingerprint"] = ckpt.config_fingerprint;
  j["params"] = params_to_json(ckpt.params);
  if (ckpt.optimizer) {
    const auto& o = *ckpt.optimizer;
    j["optimizer"] = {{"step", o.step},         {"beta1", o.beta1},
                      {"beta2", o.beta2},       {"epsilon", o.epsilon},
                      {"m", params_to_json(o.m)}, {"v", params_to_json(o.v)}};
  } else {
    j["optimizer"] = nullptr;
  }
  return j;
}

Checkpoint checkpoint_from_json(const json& j) {
  try {
    const int version = j.at("format_version").get<int>();
    if (version != Checkpoint::kFormatVersion) {
      throw ParseError("unsupported checkpoint version " + std::to_string(version));
    }
    Checkpoint ckpt;
    const auto h = j.at("hidden_size").get<Index>();
    if (h < 1) throw ShapeError("checkpoint hidden_size must be >= 1");
    ckpt.window = j.at("window").get<std::size_t>();
    if (ckpt.window < 1) throw ShapeError("checkpoint window must be >= 1");
    ckpt.train_step = j.at("train_step").get<std::int64_t>();
    ckpt.scaler.min = j.at("scaler").at("min").get<double>();
    ckpt.scaler.max = j.at("scaler").at("max").get<double>();
    if (ckpt.scaler.max < ckpt.scaler.min) throw ParseError("checkpoint scaler has max < min");
    ckpt.config_fingerprint = j.at("config_fingerprint").get<std::string>();
    ckpt.params = params_from_json(j.at("params"), h);
    const auto& o = j.at("optimizer");
    if (!o.is_null()) {
      AdamState<double> s;
      s.step = o.at("step").get<std::int64_t>();
      s.beta1 = o.at("beta1").get<double>();
      s.beta2 = o.at("beta2").get<double>();
      s.epsilon = o.at("epsilon").get<double>();
      s.m = params_from_json(o.at("m"), h);
      s.v = params_from_json(o.at("v"), h);
      ckpt.optimizer = std::move(s);
    }
    return ckpt;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  // Write-then-rename so an interrupted run never leaves a torn file.
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw Error("cannot write '" + tmp.string() + "'");
    out << checkpoint_to_json(ckpt).dump() << '\n';
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open checkpoint '" + path.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError("checkpoint '" + path.string() + "': " + e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace rlad
