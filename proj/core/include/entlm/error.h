// Copyright 2026 The entlm Authors.
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

#ifndef ENTLM_ERROR_H_
#define ENTLM_ERROR_H_

#include <stdexcept>
#include <string>

namespace entlm {

// Root of all errors raised by the library. The CLI maps subclasses onto
// process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes do not conform for a kernel.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A documented precondition or contract was violated by the caller.
class ContractError : public Error {
 public:
  using Error::Error;
};

// A token or entity id falls outside its vocabulary.
class VocabularyError : public Error {
 public:
  using Error::Error;
};

// Input exceeds configured model limits (positions, entity slots).
class CapacityError : public Error {
 public:
  using Error::Error;
};

// Malformed file or record.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Configuration rejected during validation.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A non-finite value appeared during computation.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace entlm

#endif  // ENTLM_ERROR_H_
