/*
 * Copyright 2026 The attrel Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
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

namespace attrel {

// Base class for all errors raised by the library.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad input: malformed files, unknown names, invalid arguments.
// The CLI maps these to exit code 2.
struct InputError : Error {
  explicit InputError(const std::string& msg) : Error(msg) {}
};

// A computation failed (e.g. training diverged). CLI exit code 1.
struct ComputeError : Error {
  explicit ComputeError(const std::string& msg) : Error(msg) {}
};

}  // namespace attrel
