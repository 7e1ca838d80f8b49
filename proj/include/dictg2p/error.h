// Copyright 2026 The dictg2p Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace dictg2p {

// Base class for everything this library throws.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Tensor shape incompatibility; message carries both shapes.
class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& msg) : Error(msg) {}
};

// Malformed input text (dictionary records, rule files, configs).
class ParseError : public Error {
 public:
  ParseError(size_t line, const std::string& msg)
      : Error("line " + std::to_string(line) + ": " + msg), line_(line) {}
  size_t line() const { return line_; }

 private:
  size_t line_;
};

// Binary file problems: bad magic, version mismatch, truncation.
class FormatError : public Error {
 public:
  explicit FormatError(const std::string& msg) : Error(msg) {}
};

class OovError : public Error {
 public:
  explicit OovError(const std::string& msg) : Error(msg) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

class RuleError : public Error {
 public:
  explicit RuleError(const std::string& msg) : Error(msg) {}
};

// Non-finite loss or gradient during training.
class DivergenceError : public Error {
 public:
  explicit DivergenceError(const std::string& msg) : Error(msg) {}
};

}  // namespace dictg2p
