// Copyright 2026 The namerec Authors.
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

#ifndef NAMEREC_ERRORS_H_
#define NAMEREC_ERRORS_H_

#include <stdexcept>
#include <string>

namespace namerec {

// Root of every error the library throws. The CLI maps the subclasses onto
// exit codes: DataError and its children -> 2, NumericalError -> 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Violated precondition of an API call (programming error, not bad input).
class ContractError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public ContractError {
 public:
  using ContractError::ContractError;
};

class IndexError : public ContractError {
 public:
  using ContractError::ContractError;
};

// Malformed or inconsistent input files and datasets.
class DataError : public Error {
 public:
  using Error::Error;
};

class FormatError : public DataError {
 public:
  using DataError::DataError;
};

class CurationError : public DataError {
 public:
  using DataError::DataError;
};

class CheckpointError : public DataError {
 public:
  using DataError::DataError;
};

// NaN/Inf losses or gradients, failed gradient checks.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace namerec

#endif  // NAMEREC_ERRORS_H_
