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

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "streamflow/channel.hpp"
#include "streamflow/stream.hpp"
#include "streamflow/timeline.hpp"
#include "streamflow/value.hpp"

namespace streamflow {

struct SemVer {
  int major = 0;
  int minor = 0;
  int patch = 0;

  static SemVer parse(std::string_view text) {
    SemVer v;
    int parts[3] = {0, 0, 0};
    std::size_t i = 0;
    for (int p = 0; p < 3; ++p) {
      std::size_t digits = 0;
      while (i < text.size() && text[i] >= '0' && text[i] <= '9') {
        parts[p] = parts[p] * 10 + (text[i++] - '0');
        ++digits;
      }
      if (digits == 0)
        throw Error(ErrorCode::parameter_invalid, "bad version '" + std::string(text) + "'");
      if (p < 2) {
        if (i >= text.size() || text[i] != '.')
          throw Error(ErrorCode::parameter_invalid, "bad version '" + std::string(text) + "'");
        ++i;
      }
    }
    if (i != text.size())
      throw Error(ErrorCode::parameter_invalid, "bad version '" + std::string(text) + "'");
    v.major = parts[0];
    v.minor = parts[1];
    v.patch = parts[2];
    return v;
  }

  std::string to_string() const {
    return std::to_string(major) + "." + std::to_string(minor) + "." + std::to_string(patch);
  }

  auto operator<=>(const SemVer&) const = default;
};

// Requirement grammar: "*" (any), "1.2.3" (exact), ">=1.2.3", or "^1.2.3"
// (same major, at least the given version).
inline bool version_satisfies(const SemVer& v, const std::string& requirement) {
  if (requirement == "*" || requirement.empty()) return true;
  if (requirement.rfind(">=", 0) == 0) return v >= SemVer::parse(requirement.substr(2));
  if (requirement.rfind('^', 0) == 0) {
    const SemVer base = SemVer::parse(requirement.substr(1));
    return v.major == base.major && v >= base;
  }
  return v == SemVer::parse(requirement);
}

enum class ValueKind { null, boolean, integer, floating, string, array, object, duration, timestamp };

inline const char* to_string(ValueKind kind) {
  switch (kind) {
    case ValueKind::null: return "null";
    case ValueKind::boolean: return "boolean";
    case ValueKind::integer: return "integer";
    case ValueKind::floating: return "float";
    case ValueKind::string: return "string";
    case ValueKind::array: return "array";
    case ValueKind::object: return "object";
    case ValueKind::duration: return "duration";
    case ValueKind::timestamp: return "timestamp";
  }
  return "unknown";
}

struct ParamSpec {
  ValueKind kind = ValueKind::string;
  bool required = true;
  Value default_value;  // used when not required and absent
};

using ParameterSchema = std::map<std::string, ParamSpec>;

struct ToolArity {
  // Number of source streams; nullopt means variadic (at least one).
  std::optional<int> n_sources;
  bool multi_output = false;
};

struct ToolDescriptor {
  std::string name;
  SemVer version;
  ParameterSchema parameter_schema;
  ToolArity arity;

  bool is_source() const { return arity.n_sources && *arity.n_sources == 0; }
};

namespace detail {

inline bool kind_matches(ValueKind kind, const Value& v) {
  switch (kind) {
    case ValueKind::null: return v.is_null();
    case ValueKind::boolean: return v.is_boolean();
    case ValueKind::integer: return v.is_number_integer() || v.is_number_unsigned();
    case ValueKind::floating: return v.is_number();
    case ValueKind::string: return v.is_string();
    case ValueKind::array: return v.is_array();
    case ValueKind::object: return v.is_object();
    case ValueKind::duration: return v.is_number_integer() || v.is_number_unsigned() || v.is_string();
    case ValueKind::timestamp: return v.is_string();
  }
  return false;
}

}  // namespace detail

// Validates against the schema and fills defaults. Returns the effective
// parameter object the tool will see, frozen from here on.
inline Value validate_parameters(const ToolDescriptor& descriptor, const Value& parameters) {
  if (!parameters.is_object() && !parameters.is_null())
    throw Error(ErrorCode::parameter_invalid, descriptor.name + ": parameters must be an object");
  Value effective = Value::object();
  if (parameters.is_object()) {
    for (const auto& [key, value] : parameters.items()) {
      auto it = descriptor.parameter_schema.find(key);
      if (it == descriptor.parameter_schema.end())
        throw Error(ErrorCode::parameter_invalid, descriptor.name + ": unknown parameter '" + key + "'");
      if (!detail::kind_matches(it->second.kind, value))
        throw Error(ErrorCode::parameter_invalid,
                    descriptor.name + ": parameter '" + key + "' must be " +
                        to_string(it->second.kind));
      if (it->second.kind == ValueKind::duration && value.is_string())
        parse_duration(value.get<std::string>());  // reject malformed literals now
      if (it->second.kind == ValueKind::timestamp) parse_timestamp(value.get<std::string>());
      effective[key] = value;
    }
  }
  for (const auto& [key, spec] : descriptor.parameter_schema) {
    if (effective.contains(key)) continue;
    if (spec.required)
      throw Error(ErrorCode::parameter_invalid,
                  descriptor.name + ": missing required parameter '" + key + "'");
    if (!spec.default_value.is_null()) effective[key] = spec.default_value;
  }
  return effective;
}

inline Duration duration_param(const Value& params, const std::string& key) {
  const Value& v = params.at(key);
  if (v.is_string()) return parse_duration(v.get<std::string>());
  return Duration::milliseconds(v.get<std::int64_t>());
}

// Everything a tool sees for one execution: frozen parameters, source data
// already read by the harness (ascending, lookback included), the interval
// to produce, and the plate assignment the execution runs under. Tools never
// touch channels; data goes in and comes out through this surface.
struct ToolContext {
  const Value& parameters;
  std::vector<std::span<const StreamInstance>> sources;
  TimeInterval interval;
  MetaData plate;
};

// A pure, parameterized transformation. Implementations are stateless and
// override execute() (single output) or execute_multi() (partitioned output).
class Tool {
 public:
  virtual ~Tool() = default;

  virtual ToolDescriptor descriptor() const = 0;

  // How much history before interval.start the tool needs (0 for pointwise
  // tools, the window width for sliding tools).
  virtual Duration lookback(const Value& /*parameters*/) const { return Duration::zero(); }

  // Semantic parameter checks beyond the schema kinds (enum values, positive
  // strides). Called once at invocation creation with defaults applied.
  virtual void validate(const Value& /*parameters*/) const {}

  virtual std::vector<StreamInstance> execute(const ToolContext&) const {
    throw Error(ErrorCode::unsupported, descriptor().name + " has no single-output execution");
  }

  virtual std::map<std::string, std::vector<StreamInstance>> execute_multi(
      const ToolContext&, const std::string& /*output_key*/) const {
    throw Error(ErrorCode::unsupported, descriptor().name + " has no multi-output execution");
  }
};

namespace detail {

inline void check_outputs(const ToolDescriptor& descriptor,
                          const std::vector<StreamInstance>& outputs,
                          const TimeInterval& interval) {
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    if (!interval.contains(outputs[i].timestamp))
      throw Error(ErrorCode::malformed_document,
                  descriptor.name + " emitted " + format_timestamp(outputs[i].timestamp) +
                      " outside " + streamflow::to_string(interval));
    if (i > 0 && !(outputs[i - 1].timestamp < outputs[i].timestamp))
      throw Error(ErrorCode::malformed_document,
                  descriptor.name + " output timestamps not strictly ascending");
  }
}

}  // namespace detail

// A tool bound to fixed, validated parameters. Immutable and shareable;
// executions over distinct intervals may run concurrently.
class ToolInvocation {
 public:
  static ToolInvocation create(std::shared_ptr<const Tool> tool, const Value& parameters) {
    ToolInvocation invocation;
    invocation.tool_ = std::move(tool);
    invocation.descriptor_ = invocation.tool_->descriptor();
    invocation.parameters_ = validate_parameters(invocation.descriptor_, parameters);
    invocation.tool_->validate(invocation.parameters_);
    return invocation;
  }

  const ToolDescriptor& descriptor() const { return descriptor_; }
  const Value& parameters() const { return parameters_; }
  Duration lookback() const { return tool_->lookback(parameters_); }

  std::string parameter_digest() const { return stable_digest(canonical_json(parameters_)); }

  Provenance provenance() const {
    return Provenance{descriptor_.name, descriptor_.version.to_string(), parameter_digest()};
  }

  std::vector<StreamInstance> execute(std::vector<std::span<const StreamInstance>> sources,
                                      const TimeInterval& interval,
                                      const MetaData& plate = {}) const {
    check_arity(sources.size());
    ToolContext ctx{parameters_, std::move(sources), interval, plate};
    auto outputs = tool_->execute(ctx);
    detail::check_outputs(descriptor_, outputs, interval);
    return outputs;
  }

  std::map<std::string, std::vector<StreamInstance>> execute_multi(
      std::vector<std::span<const StreamInstance>> sources, const TimeInterval& interval,
      const std::string& output_key, const MetaData& plate = {}) const {
    check_arity(sources.size());
    ToolContext ctx{parameters_, std::move(sources), interval, plate};
    auto outputs = tool_->execute_multi(ctx, output_key);
    for (const auto& [key, instances] : outputs)
      detail::check_outputs(descriptor_, instances, interval);
    return outputs;
  }

 private:
  void check_arity(std::size_t n_sources) const {
    const auto& arity = descriptor_.arity;
    if (arity.n_sources && static_cast<std::size_t>(*arity.n_sources) != n_sources)
      throw Error(ErrorCode::arity_mismatch,
                  descriptor_.name + " takes " + std::to_string(*arity.n_sources) +
                      " source(s), got " + std::to_string(n_sources));
    if (!arity.n_sources && n_sources == 0)
      throw Error(ErrorCode::arity_mismatch, descriptor_.name + " takes at least one source");
  }

  std::shared_ptr<const Tool> tool_;
  ToolDescriptor descriptor_;
  Value parameters_;
};

// Name -> versions -> tool. Built-ins plus whatever plugins register.
class ToolRegistry {
 public:
  void register_tool(std::shared_ptr<const Tool> tool) {
    const auto descriptor = tool->descriptor();
    versions_[descriptor.name][descriptor.version] = std::move(tool);
  }

  bool has(const std::string& name) const { return versions_.count(name) > 0; }

  // Highest registered version satisfying the requirement.
  std::shared_ptr<const Tool> resolve(const std::string& name,
                                      const std::string& version_req = "*") const {
    auto it = versions_.find(name);
    if (it == versions_.end()) throw Error(ErrorCode::unknown_tool, name);
    for (auto v = it->second.rbegin(); v != it->second.rend(); ++v)
      if (version_satisfies(v->first, version_req)) return v->second;
    throw Error(ErrorCode::version_unsatisfied, name + " " + version_req);
  }

  ToolInvocation make_invocation(const std::string& name, const std::string& version_req,
                                 const Value& parameters) const {
    return ToolInvocation::create(resolve(name, version_req), parameters);
  }

  std::vector<ToolDescriptor> descriptors() const {
    std::vector<ToolDescriptor> out;
    for (const auto& [name, versions] : versions_)
      for (const auto& [version, tool] : versions) out.push_back(tool->descriptor());
    return out;
  }

 private:
  std::map<std::string, std::map<SemVer, std::shared_ptr<const Tool>>> versions_;
};

// The tool channel: presents the registry through the channel surface, one
// read-only stream per registered tool. Tools are data here; computing with
// them goes through the engine.
class ToolChannel : public Channel {
 public:
  explicit ToolChannel(std::shared_ptr<const ToolRegistry> registry, std::string name = "tools")
      : name_(std::move(name)), registry_(std::move(registry)) {}

  const std::string& name() const override { return name_; }

  ChannelCapabilities capabilities() const override {
    return {.persistent = false, .supports_purge = false};
  }

  StreamRecord create_stream(const StreamId&) override {
    throw Error(ErrorCode::unsupported, "tool channel is read-only");
  }

  StreamRecord write(const StreamId&, const std::vector<StreamInstance>&, const TimeIntervalSet&,
                     const std::optional<Provenance>&) override {
    throw Error(ErrorCode::unsupported, "tool channel is read-only");
  }

  std::vector<StreamInstance> read(const StreamId&, const TimeInterval&) const override {
    throw Error(ErrorCode::unsupported, "tool streams carry no timed instances");
  }

  void purge(const StreamId&) override {
    throw Error(ErrorCode::unsupported, "tool channel is read-only");
  }

  std::vector<StreamRecord> list_streams() const override {
    std::vector<StreamRecord> out;
    for (const auto& descriptor : registry_->descriptors()) {
      StreamRecord record;
      record.id = StreamId(descriptor.name,
                           MetaData::from_pairs({{"version", descriptor.version.to_string()}}));
      record.channel = name_;
      out.push_back(record);
    }
    std::sort(out.begin(), out.end(), [](const StreamRecord& a, const StreamRecord& b) {
      return a.id.canonical() < b.id.canonical();
    });
    return out;
  }

  std::optional<StreamRecord> find_stream(const StreamId& id) const override {
    for (auto& record : list_streams())
      if (record.id == id) return record;
    return std::nullopt;
  }

  const ToolRegistry& registry() const { return *registry_; }

 private:
  std::string name_;
  std::shared_ptr<const ToolRegistry> registry_;
};

// Descriptor lookup through the tool channel.
inline ToolDescriptor resolve_tool(const ToolChannel& channel, const std::string& name,
                                   const std::string& version_req = "*") {
  return channel.registry().resolve(name, version_req)->descriptor();
}

}  // namespace streamflow
