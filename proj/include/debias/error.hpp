/*
 * Copyright 2026 The debias-forge Authors.
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

#ifndef DEBIAS_ERROR_HPP_
#define DEBIAS_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace debias {

// Broad failure classes. The CLI maps these onto its exit codes.
enum class ErrorKind {
  kValidation,  // malformed input, violated precondition or invariant
  kIo,          // filesystem failure
  kProvider,    // transport / sidecar / fixture failure
  kPartial,     // some units of a batch stage failed
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& message)
      : Error(ErrorKind::kValidation, message) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& message)
      : Error(ErrorKind::kIo, message) {}
};

// Provider failures carry the sidecar's structured code when one was sent.
class ProviderError : public Error {
 public:
  explicit ProviderError(const std::string& message, std::string code = {})
      : Error(ErrorKind::kProvider, message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

}  // namespace debias

#endif  // DEBIAS_ERROR_HPP_
