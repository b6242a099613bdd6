// Copyright 2026 The ppba Authors.
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

#ifndef PPBA_ERRORS_HPP_
#define PPBA_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace ppba {

// Bad parameters, policies or configuration supplied by the caller.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed or truncated file contents.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A schedule log whose lineage or records are inconsistent.
class IntegrityError : public std::runtime_error {
 public:
  IntegrityError(const std::string& what, long record_index = -1)
      : std::runtime_error(what), record_index_(record_index) {}
  long record_index() const { return record_index_; }

 private:
  long record_index_;
};

// Any failure inside a trainer call. The search loop converts it into a
// sentinel metric instead of aborting.
class TrainerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ppba

#endif  // PPBA_ERRORS_HPP_
