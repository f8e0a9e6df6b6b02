// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace streamflow {

enum class ErrorCode {
  invalid_timestamp,
  invalid_interval,
  invalid_name,
  duplicate_meta_key,
  invalid_value,
  stream_exists,
  unknown_stream,
  duplicate_timestamp,
  timestamp_outside_cover,
  not_computed,
  unsupported,
  unknown_tool,
  version_unsatisfied,
  arity_mismatch,
  parameter_invalid,
  source_not_computed,
  split_key_missing,
  external_resource_unavailable,
  parse_failure,
  malformed_document,
  unknown_plate,
  unknown_tag,
  cycle_detected,
  unknown_channel,
  invalid_workflow,
  schema_violation,
  unsupported_schema_version,
  upstream_failed,
  io_error,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_timestamp: return "InvalidTimestamp";
    case ErrorCode::invalid_interval: return "InvalidInterval";
    case ErrorCode::invalid_name: return "InvalidName";
    case ErrorCode::duplicate_meta_key: return "DuplicateMetaKey";
    case ErrorCode::invalid_value: return "InvalidValue";
    case ErrorCode::stream_exists: return "StreamExists";
    case ErrorCode::unknown_stream: return "UnknownStream";
    case ErrorCode::duplicate_timestamp: return "DuplicateTimestamp";
    case ErrorCode::timestamp_outside_cover: return "TimestampOutsideCover";
    case ErrorCode::not_computed: return "NotComputed";
    case ErrorCode::unsupported: return "Unsupported";
    case ErrorCode::unknown_tool: return "UnknownTool";
    case ErrorCode::version_unsatisfied: return "VersionUnsatisfied";
    case ErrorCode::arity_mismatch: return "ArityMismatch";
    case ErrorCode::parameter_invalid: return "ParameterInvalid";
    case ErrorCode::source_not_computed: return "SourceNotComputed";
    case ErrorCode::split_key_missing: return "SplitKeyMissing";
    case ErrorCode::external_resource_unavailable: return "ExternalResourceUnavailable";
    case ErrorCode::parse_failure: return "ParseFailure";
    case ErrorCode::malformed_document: return "MalformedDocument";
    case ErrorCode::unknown_plate: return "UnknownPlate";
    case ErrorCode::unknown_tag: return "UnknownTag";
    case ErrorCode::cycle_detected: return "CycleDetected";
    case ErrorCode::unknown_channel: return "UnknownChannel";
    case ErrorCode::invalid_workflow: return "InvalidWorkflow";
    case ErrorCode::schema_violation: return "SchemaViolation";
    case ErrorCode::unsupported_schema_version: return "UnsupportedSchemaVersion";
    case ErrorCode::upstream_failed: return "UpstreamFailed";
    case ErrorCode::io_error: return "IoError";
  }
  return "UnknownError";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// Parse failure with a record locus (1-based line or row number).
class ParseFailureError : public Error {
 public:
  ParseFailureError(const std::string& message, std::uint64_t line)
      : Error(ErrorCode::parse_failure, message + " (line " + std::to_string(line) + ")"),
        line_(line) {}

  std::uint64_t line() const { return line_; }

 private:
  std::uint64_t line_;
};

// Schema violation carrying the JSON-pointer-style path of the offending field.
class SchemaViolationError : public Error {
 public:
  SchemaViolationError(const std::string& path, const std::string& message)
      : Error(ErrorCode::schema_violation, message + " at " + path), path_(path) {}

  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

}  // namespace streamflow
