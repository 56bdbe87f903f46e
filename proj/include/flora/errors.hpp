/*
 * Copyright 2026 The FLoRA Authors.
 *
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

#ifndef FLORA_ERRORS_HPP_
#define FLORA_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace flora {

// Error classes map onto CLI exit codes (2 config, 3 data, 4 runtime).
enum class ErrorClass { kConfig, kData, kRuntime };

class Error : public std::runtime_error {
 public:
  Error(ErrorClass error_class, const std::string& what)
      : std::runtime_error(what), class_(error_class) {}

  ErrorClass error_class() const { return class_; }

 private:
  ErrorClass class_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what)
      : Error(ErrorClass::kConfig, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what)
      : Error(ErrorClass::kData, what) {}
};

class RuntimeFailure : public Error {
 public:
  explicit RuntimeFailure(const std::string& what)
      : Error(ErrorClass::kRuntime, what) {}
};

// Re-raises `e` with a "[phase] " prefix, keeping its error class.
[[noreturn]] inline void rethrow_in_phase(const std::string& phase,
                                          const Error& e) {
  throw Error(e.error_class(), "[" + phase + "] " + e.what());
}

}  // namespace flora

#endif  // FLORA_ERRORS_HPP_
