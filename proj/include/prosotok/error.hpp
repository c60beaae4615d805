// Copyright 2026 The prosotok Authors.
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

#ifndef PROSOTOK_ERROR_HPP
#define PROSOTOK_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace prosotok {

/// Broad failure category. The CLI maps these onto process exit codes.
enum class ErrorKind {
  kUsage,        // bad arguments or configuration
  kInputSchema,  // malformed or inconsistent input data
  kInternal,     // violated internal invariant
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Raised for data that violates a documented input contract.
class InputError : public Error {
 public:
  explicit InputError(const std::string& what)
      : Error(ErrorKind::kInputSchema, what) {}
};

/// Token-stream grammar violation; carries the offending token index.
class ParseError : public InputError {
 public:
  ParseError(std::size_t position, const std::string& what)
      : InputError(what + " (at token " + std::to_string(position) + ")"),
        position_(position) {}

  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

}  // namespace prosotok

#endif  // PROSOTOK_ERROR_HPP
