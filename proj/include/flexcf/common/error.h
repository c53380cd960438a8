/*
 * Copyright 2026 The flexcf Authors.
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

#ifndef FLEXCF_COMMON_ERROR_H_
#define FLEXCF_COMMON_ERROR_H_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace flexcf {

// Errors caused by the caller's input (bad files, unknown columns, invalid
// flags). The CLI maps these to exit code 1; every other exception is
// treated as internal and maps to exit code 2.
class UserError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An instance, template or file does not conform to a DatasetSchema.
class SchemaError : public UserError {
 public:
  explicit SchemaError(const std::string& message, std::string field = "")
      : UserError(message), field_(std::move(field)) {}
  // Schema column (or request field) the error refers to; may be empty.
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

// A CSV row could not be ingested.
class IngestError : public UserError {
 public:
  IngestError(const std::string& message, std::size_t row_index)
      : UserError(message + " (row " + std::to_string(row_index) + ")"),
        row_index_(row_index) {}
  std::size_t row_index() const { return row_index_; }

 private:
  std::size_t row_index_;
};

class ConfigError : public UserError {
 public:
  using UserError::UserError;
};

class NotFoundError : public UserError {
 public:
  using UserError::UserError;
};

// Optimization diverged (non-finite loss, exploding gradient penalty).
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace flexcf

#endif  // FLEXCF_COMMON_ERROR_H_
