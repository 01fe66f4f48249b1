/*
 * Copyright 2026 The cl2cm Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


#pragma once

#include <stdexcept>
#include <string>

namespace cl2cm {

enum class ErrorCode {
  kShapeMismatch,
  kZeroNorm,
  kNonFinite,
  kInvalidArgument,
  kConfig,
  kIo,
  kParse,
  kStaleCache,
  kGeneration,
};

/// Short machine-readable tag used in CLI diagnostics (`ERROR:<tag>:`).
const char* error_tag(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& what)
      : Error(ErrorCode::kShapeMismatch, what) {}
};

/// Raised when a cosine is requested for a zero vector. `index` names the
/// offending row when the input was a matrix, otherwise it is -1.
class ZeroNormError : public Error {
 public:
  ZeroNormError(const std::string& what, long index)
      : Error(ErrorCode::kZeroNorm, what), index_(index) {}
  long index() const { return index_; }

 private:
  long index_;
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what)
      : Error(ErrorCode::kNonFinite, what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what)
      : Error(ErrorCode::kConfig, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorCode::kIo, what) {}
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, long line = -1)
      : Error(ErrorCode::kParse, what), line_(line) {}
  long line() const { return line_; }

 private:
  long line_;
};

}  // namespace cl2cm
