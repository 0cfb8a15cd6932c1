// Copyright (c) 2026 The subband project authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace subband {

/// Dimension or shape violation: zero-sized dims, mismatched operands,
/// inputs that are not divisible/even where the transform requires it.
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Invalid architecture or hyperparameter configuration.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// File access or serialization failure.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed data file; the message carries the byte offset when known.
struct CorruptDataError : IoError {
  using IoError::IoError;
};

/// Checkpoint version/content mismatch.
struct CheckpointError : IoError {
  using IoError::IoError;
};

/// Operation called in an invalid order (e.g. backward before forward).
struct StateError : std::logic_error {
  using std::logic_error::logic_error;
};

/// Value outside the documented domain of an operation.
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

/// Out-of-range index (e.g. a class label beyond the logit count).
struct IndexError : std::out_of_range {
  using std::out_of_range::out_of_range;
};

/// Training diverged (non-finite loss); message names the first bad layer.
struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace subband
