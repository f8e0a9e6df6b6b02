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

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>

#include <json.hpp>

#include "streamflow/errors.hpp"

namespace streamflow {

// Document payload: a closed, JSON-compatible recursive union of
// null | boolean | 64-bit integer | 64-bit float | UTF-8 string |
// array | string-keyed map. nlohmann::json with std::map keys gives
// lexicographic key ordering for free, which the canonical form relies on.
using Value = nlohmann::json;

// Rejects values outside the document model: binary blobs, discarded
// parse results, unsigned integers beyond the signed 64-bit range, and
// non-finite floats (which would not survive a serialization round trip).
inline void check_value_model(const Value& v, const std::string& where = "value") {
  switch (v.type()) {
    case Value::value_t::null:
    case Value::value_t::boolean:
    case Value::value_t::number_integer:
    case Value::value_t::string:
      return;
    case Value::value_t::number_unsigned:
      if (v.get<std::uint64_t>() >
          static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max()))
        throw Error(ErrorCode::invalid_value, where + ": integer exceeds signed 64-bit range");
      return;
    case Value::value_t::number_float:
      if (!std::isfinite(v.get<double>()))
        throw Error(ErrorCode::invalid_value, where + ": non-finite float");
      return;
    case Value::value_t::array: {
      std::size_t i = 0;
      for (const auto& item : v) check_value_model(item, where + "[" + std::to_string(i++) + "]");
      return;
    }
    case Value::value_t::object:
      for (const auto& [key, item] : v.items()) check_value_model(item, where + "." + key);
      return;
    default:
      throw Error(ErrorCode::invalid_value, where + ": unsupported value type");
  }
}

// Canonical text form: compact UTF-8 JSON with lexicographically ordered
// keys and no insignificant whitespace. This exact string feeds provenance
// digests, so it must be byte-stable across runs and platforms.
inline std::string canonical_json(const Value& v) { return v.dump(); }

inline Value parse_value(std::string_view text) {
  Value v = Value::parse(text, nullptr, false);
  if (v.is_discarded())
    throw Error(ErrorCode::parse_failure, "malformed JSON: '" + std::string(text) + "'");
  check_value_model(v);
  return v;
}

// FNV-1a over the canonical form; stable across platforms, used for the
// provenance parameter digest. Not cryptographic and not meant to be.
inline std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t hash = 0xcbf29ce484222325ull;
  for (unsigned char c : data) {
    hash ^= c;
    hash *= 0x100000001b3ull;
  }
  return hash;
}

inline std::string stable_digest(std::string_view data) {
  static const char* hex = "0123456789abcdef";
  std::uint64_t h = fnv1a64(data);
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = hex[h & 0xf];
    h >>= 4;
  }
  return out;
}

}  // namespace streamflow
