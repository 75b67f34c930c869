/*
 * Copyright 2026 The UniRec Authors.
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

#include <stdexcept>
#include <string>

namespace unirec {

// Error taxonomy. The CLI maps each class to a distinct exit code.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Tensor shape disagreement or a malformed numeric request.
struct DimensionError : Error {
  using Error::Error;
};

// Bad configuration value (unknown key, out-of-range hyperparameter).
struct ConfigError : Error {
  using Error::Error;
};

// Missing or unreadable/unwritable file.
struct IoError : Error {
  using Error::Error;
};

// Non-finite value where a finite one is required.
struct NumericError : Error {
  using Error::Error;
};

// Checkpoint/format version or config-hash mismatch.
struct CompatibilityError : Error {
  using Error::Error;
};

// Runtime input outside the model's domain (e.g. token id out of vocab).
struct InputError : Error {
  using Error::Error;
};

}  // namespace unirec
