// Copyright 2026 The Cotune Authors
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

#ifndef COTUNE_ERROR_H_
#define COTUNE_ERROR_H_

#include <stdexcept>
#include <string>

namespace cotune {

// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid user input: malformed config, bad dimensions, negative masses.
// The CLI maps this to exit code 1.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A primitive was evaluated outside its domain or produced a non-finite value.
class DomainError : public Error {
 public:
  using Error::Error;
};

// A closed-loop rollout left the admissible state region.
class RolloutError : public Error {
 public:
  RolloutError(const std::string& what, int step)
      : Error(what + " at step " + std::to_string(step)), step_(step) {}
  int step() const { return step_; }

 private:
  int step_;
};

// Nominal controller synthesis (LQR or MLP) did not succeed.
class SynthesisError : public Error {
 public:
  using Error::Error;
};

}  // namespace cotune

#endif  // COTUNE_ERROR_H_
