// Copyright 2026 The nanonav Authors
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

namespace nanonav {

// Root of every error raised by the library. Each subsystem throws a
// distinct subclass so callers (and the CLI) can tell failures apart.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid Q-format (frac_bits outside 0..15) or other numeric-format misuse.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Tensor shapes that do not chain, or a kernel fed with the wrong shape.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Structurally invalid network graph.
class GraphError : public Error {
 public:
  using Error::Error;
};

// Model container errors.
class ManifestError : public Error {
 public:
  using Error::Error;
};

class BlobLengthError : public Error {
 public:
  using Error::Error;
};

class UnknownLayerError : public Error {
 public:
  using Error::Error;
};

class VersionError : public Error {
 public:
  using Error::Error;
};

// Deployment transformations.
class FoldError : public Error {
 public:
  using Error::Error;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

class CalibrationError : public Error {
 public:
  using Error::Error;
};

class PlanError : public Error {
 public:
  using Error::Error;
};

class ControlError : public Error {
 public:
  using Error::Error;
};

class EvalError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace nanonav
