// Copyright (c) 2026 The g2p-multilingual Authors. All Rights Reserved.
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

namespace g2p {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller violated an operation's precondition.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Tensor shapes do not agree.
class DimensionError : public ContractError {
 public:
  using ContractError::ContractError;
};

/// Malformed input text (lexicon, vocabulary, config, checkpoint).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// A NaN or Inf showed up in a forward or backward pass.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace g2p
