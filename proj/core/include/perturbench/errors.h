/*
 * Copyright 2026 The perturbench Authors.
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

#ifndef PERTURBENCH_ERRORS_H_
#define PERTURBENCH_ERRORS_H_

#include <stdexcept>
#include <string>

namespace perturbench {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller passed an argument outside an operation's precondition.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// A value object was built from data violating its invariants.
class ConstructionError : public Error {
 public:
  using Error::Error;
};

// A classifier, attributor, generator or inpainting engine failed.
class BackendError : public Error {
 public:
  using Error::Error;
};

// The attributor could not explain an image; the image is skipped.
class AttributionError : public BackendError {
 public:
  using BackendError::BackendError;
};

// Aggregation has no discriminative signal (e.g. all AUCs equal).
class DegenerateError : public Error {
 public:
  using Error::Error;
};

// Run configuration failed validation.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace perturbench

#endif  // PERTURBENCH_ERRORS_H_
