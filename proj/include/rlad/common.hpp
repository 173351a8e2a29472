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

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace rlad {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowVectorX = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

using MatrixXd = MatrixX<double>;
using VectorXd = VectorX<double>;
using Index = Eigen::Index;

// Error taxonomy. Every failure the library reports derives from Error so
// callers (the CLI in particular) can map it onto an exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  explicit ParseError(const std::string& what) : Error(what) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_ = 0;
};

class IntegrityError : public Error {
 public:
  using Error::Error;
};

class SizeError : public Error {
 public:
  using Error::Error;
};

class ParameterError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class StateError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class QueryError : public Error {
 public:
  using Error::Error;
};

// Point / window labels. Stored as plain ints on the wire (-1, 0, 1).
enum class Label : std::int8_t { kUnknown = -1, kNormal = 0, kAnomaly = 1 };

enum class LabelSource : std::uint8_t { kNone, kHuman, kPseudo };

inline int to_int(Label l) { return static_cast<int>(l); }

inline Label label_from_int(int v) {
  switch (v) {
    case -1:
      return Label::kUnknown;
    case 0:
      return Label::kNormal;
    case 1:
      return Label::kAnomaly;
    default:
      throw ParameterError("label out of range: " + std::to_string(v));
  }
}

const char* to_string(LabelSource s);

}  // namespace rlad
