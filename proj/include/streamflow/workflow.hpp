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
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "streamflow/plates.hpp"
#include "streamflow/stream.hpp"
#include "streamflow/timeline.hpp"
#include "streamflow/tool.hpp"
#include "streamflow/value.hpp"

namespace streamflow {

inline constexpr int kWorkflowSchemaVersion = 1;

// A named collection of streams living on the same plate (one stream per
// plate value), wired into the graph by factors.
struct Node {
  std::string node_id;
  std::optional<std::string> plate_id;
  std::string channel;

  bool operator==(const Node&) const = default;
};

enum class FactorKind { basic, multi_output, raw };

inline const char* to_string(FactorKind kind) {
  switch (kind) {
    case FactorKind::basic: return "basic";
    case FactorKind::multi_output: return "multi_output";
    case FactorKind::raw: return "raw";
  }
  return "?";
}

// Unresolved tool reference as written in a workflow: resolution against the
// registry happens at validation/planning time.
struct ToolRef {
  std::string name;
  std::string version_req = "*";
  Value parameters = Value::object();

  bool operator==(const ToolRef&) const = default;
};

// Placement of a tool between nodes. Raw factors have no sources and pull
// data from outside; multi-output factors write onto a sub-plate of their
// source's plate.
struct Factor {
  FactorKind kind = FactorKind::basic;
  ToolRef tool;
  std::vector<std::string> sources;
  std::string sink;
  std::optional<std::string> output_plate;  // multi_output only

  bool operator==(const Factor&) const = default;
};

enum class WorkflowMode { offline_only, online };

struct Workflow {
  std::string workflow_id;
  std::string name;
  std::string description;
  std::vector<PlateDefinition> plates;
  std::vector<Node> nodes;
  std::vector<Factor> factors;
  TimeIntervalSet requested_intervals;
  WorkflowMode mode = WorkflowMode::offline_only;

  const Node* find_node(const std::string& node_id) const {
    for (const auto& node : nodes)
      if (node.node_id == node_id) return &node;
    return nullptr;
  }

  const PlateDefinition* find_plate(const std::string& plate_id) const {
    for (const auto& plate : plates)
      if (plate.plate_id == plate_id) return &plate;
    return nullptr;
  }

  bool operator==(const Workflow&) const = default;
};

// A broken invariant, reported as data rather than thrown: validation lists
// everything wrong at once.
struct Violation {
  std::string code;
  std::string subject;
  std::string detail;
};

namespace detail {

// Plate ancestry as a list of plate ids, outermost first. Empty optional on
// a parent cycle or unknown parent.
inline std::optional<std::vector<std::string>> plate_id_chain(const std::string& plate_id,
                                                              const Workflow& workflow) {
  std::vector<std::string> chain;
  std::set<std::string> seen;
  std::string current = plate_id;
  while (true) {
    if (!seen.insert(current).second) return std::nullopt;
    const auto* plate = workflow.find_plate(current);
    if (!plate) return std::nullopt;
    chain.push_back(current);
    if (!plate->parent_plate) break;
    current = *plate->parent_plate;
  }
  std::reverse(chain.begin(), chain.end());
  return chain;
}

inline bool is_prefix(const std::vector<std::string>& prefix, const std::vector<std::string>& full) {
  if (prefix.size() > full.size()) return false;
  return std::equal(prefix.begin(), prefix.end(), full.begin());
}

}  // namespace detail

// Checks every structural invariant: unique ids, resolvable references,
// factor-kind rules, plate compatibility, and acyclicity of the factor
// graph. Tool references are resolved against the registry so that a valid
// workflow can never hit arity or parameter failures at runtime.
inline std::vector<Violation> validate(const Workflow& workflow, const ToolRegistry& registry) {
  std::vector<Violation> out;
  const auto violation = [&](std::string code, std::string subject, std::string detail) {
    out.push_back(Violation{std::move(code), std::move(subject), std::move(detail)});
  };

  std::set<std::string> node_ids;
  for (const auto& node : workflow.nodes) {
    if (!node_ids.insert(node.node_id).second)
      violation("DuplicateNodeId", node.node_id, "node id declared twice");
    if (!is_valid_stream_name(node.node_id))
      violation("InvalidName", node.node_id, "node id must match [a-z0-9_]+");
    if (node.plate_id && !workflow.find_plate(*node.plate_id))
      violation("UnknownPlate", node.node_id, "node references plate '" + *node.plate_id + "'");
  }

  std::set<std::string> plate_ids;
  for (const auto& plate : workflow.plates) {
    if (!plate_ids.insert(plate.plate_id).second)
      violation("DuplicatePlateId", plate.plate_id, "plate id declared twice");
    if (!detail::plate_id_chain(plate.plate_id, workflow))
      violation("PlateCycle", plate.plate_id, "plate parent chain is cyclic or dangling");
  }

  const auto chain_of = [&](const std::optional<std::string>& plate_id)
      -> std::optional<std::vector<std::string>> {
    if (!plate_id) return std::vector<std::string>{};
    return detail::plate_id_chain(*plate_id, workflow);
  };

  std::set<std::string> sinks;
  for (std::size_t i = 0; i < workflow.factors.size(); ++i) {
    const auto& factor = workflow.factors[i];
    const std::string subject = "factor[" + std::to_string(i) + "]->" + factor.sink;

    const Node* sink = workflow.find_node(factor.sink);
    if (!sink) violation("UnknownNode", subject, "sink '" + factor.sink + "' not declared");
    if (!sinks.insert(factor.sink).second)
      violation("DuplicateSink", subject, "node '" + factor.sink + "' written by another factor");
    std::vector<const Node*> sources;
    for (const auto& source_id : factor.sources) {
      const Node* source = workflow.find_node(source_id);
      if (!source) violation("UnknownNode", subject, "source '" + source_id + "' not declared");
      sources.push_back(source);
    }

    std::optional<ToolDescriptor> descriptor;
    try {
      const auto tool = registry.resolve(factor.tool.name, factor.tool.version_req);
      descriptor = tool->descriptor();
      ToolInvocation::create(tool, factor.tool.parameters);
    } catch (const Error& e) {
      violation(to_string(e.code()), subject, e.what());
    }

    if (descriptor) {
      const bool is_source_tool = descriptor->is_source();
      if (factor.kind == FactorKind::raw) {
        if (!factor.sources.empty())
          violation("ArityMismatch", subject, "raw factor must have no sources");
        if (!is_source_tool)
          violation("ArityMismatch", subject, "raw factor needs a source tool (zero inputs)");
      } else {
        if (descriptor->arity.n_sources &&
            static_cast<std::size_t>(*descriptor->arity.n_sources) != factor.sources.size())
          violation("ArityMismatch", subject,
                    "tool takes " + std::to_string(*descriptor->arity.n_sources) +
                        " source(s), factor wires " + std::to_string(factor.sources.size()));
        if (!descriptor->arity.n_sources && factor.sources.empty())
          violation("ArityMismatch", subject, "variadic tool needs at least one source");
      }
      if (factor.kind == FactorKind::multi_output && !descriptor->arity.multi_output)
        violation("KindMismatch", subject, "tool has no multi-output execution");
      if (factor.kind != FactorKind::multi_output && descriptor->arity.multi_output)
        violation("KindMismatch", subject, "multi-output tool requires a multi_output factor");
    }

    if (!sink) continue;
    const auto sink_chain = chain_of(sink->plate_id);
    if (!sink_chain) continue;  // reported as PlateCycle/UnknownPlate already

    if (factor.kind == FactorKind::basic) {
      for (std::size_t s = 0; s < sources.size(); ++s) {
        if (!sources[s]) continue;
        const auto source_chain = chain_of(sources[s]->plate_id);
        if (!source_chain) continue;
        if (!detail::is_prefix(*source_chain, *sink_chain))
          violation("PlateMismatch", subject,
                    "source '" + factor.sources[s] + "' is not on the sink's plate or an ancestor");
      }
    } else if (factor.kind == FactorKind::multi_output) {
      if (!factor.output_plate) {
        violation("KindMismatch", subject, "multi_output factor needs an output_plate");
      } else if (!sink->plate_id || *sink->plate_id != *factor.output_plate) {
        violation("PlateMismatch", subject, "sink node is not on output_plate '" +
                                                *factor.output_plate + "'");
      } else {
        // The sink plate must be the immediate sub-plate of the source plate:
        // the split partitions by exactly one new meta-data key.
        const auto* sink_plate = workflow.find_plate(*sink->plate_id);
        const std::optional<std::string> source_plate =
            (!sources.empty() && sources[0]) ? sources[0]->plate_id : std::nullopt;
        if (sink_plate && sink_plate->parent_plate != source_plate)
          violation("PlateMismatch", subject,
                    "sink plate's parent chain does not include the source plate");
      }
    }
    if (factor.kind != FactorKind::multi_output && factor.output_plate)
      violation("KindMismatch", subject, "output_plate is only valid on multi_output factors");
  }

  // Factor graph acyclicity via Kahn's algorithm over sink->source edges.
  std::map<std::string, std::size_t> producer;  // node id -> factor index
  for (std::size_t i = 0; i < workflow.factors.size(); ++i)
    producer.emplace(workflow.factors[i].sink, i);
  std::vector<std::size_t> indegree(workflow.factors.size(), 0);
  std::vector<std::vector<std::size_t>> dependents(workflow.factors.size());
  for (std::size_t i = 0; i < workflow.factors.size(); ++i) {
    for (const auto& source : workflow.factors[i].sources) {
      auto it = producer.find(source);
      if (it != producer.end() && it->second != i) {
        dependents[it->second].push_back(i);
        ++indegree[i];
      }
    }
  }
  std::size_t emitted = 0;
  std::vector<bool> done(workflow.factors.size(), false);
  bool progressed = true;
  while (progressed) {
    progressed = false;
    for (std::size_t i = 0; i < workflow.factors.size(); ++i) {
      if (done[i] || indegree[i] != 0) continue;
      done[i] = true;
      ++emitted;
      progressed = true;
      for (std::size_t dep : dependents[i]) --indegree[dep];
    }
  }
  if (emitted != workflow.factors.size())
    violation("CycleDetected", workflow.workflow_id, "factor graph contains a cycle");

  return out;
}

// Execution order: every factor after all factors producing its sources,
// ties broken by declaration order. Returns indices into workflow.factors.
inline std::vector<std::size_t> topological_order(const Workflow& workflow) {
  std::map<std::string, std::size_t> producer;
  for (std::size_t i = 0; i < workflow.factors.size(); ++i)
    producer.emplace(workflow.factors[i].sink, i);
  std::vector<std::set<std::size_t>> deps(workflow.factors.size());
  for (std::size_t i = 0; i < workflow.factors.size(); ++i) {
    for (const auto& source : workflow.factors[i].sources) {
      auto it = producer.find(source);
      if (it != producer.end() && it->second != i) deps[i].insert(it->second);
    }
  }
  std::vector<std::size_t> order;
  std::vector<bool> done(workflow.factors.size(), false);
  while (order.size() < workflow.factors.size()) {
    bool progressed = false;
    for (std::size_t i = 0; i < workflow.factors.size(); ++i) {
      if (done[i]) continue;
      bool ready = true;
      for (std::size_t dep : deps[i])
        if (!done[dep]) { ready = false; break; }
      if (!ready) continue;
      order.push_back(i);
      done[i] = true;
      progressed = true;
      break;  // restart scan so declaration order breaks ties
    }
    if (!progressed) throw Error(ErrorCode::cycle_detected, "factor graph contains a cycle");
  }
  return order;
}

namespace detail {

inline void check_known_keys(const Value& obj, const std::set<std::string>& known,
                             const std::string& path) {
  for (const auto& [key, _] : obj.items())
    if (!known.count(key)) throw SchemaViolationError(path + "/" + key, "unknown field");
}

inline const Value& require_field(const Value& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object() || !obj.contains(key)) throw SchemaViolationError(path + "/" + key, "missing field");
  return obj.at(key);
}

inline std::string require_string(const Value& obj, const std::string& key, const std::string& path) {
  const Value& v = require_field(obj, key, path);
  if (!v.is_string()) throw SchemaViolationError(path + "/" + key, "expected a string");
  return v.get<std::string>();
}

inline std::optional<std::string> optional_string(const Value& obj, const std::string& key,
                                                  const std::string& path) {
  if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
  if (!obj.at(key).is_string()) throw SchemaViolationError(path + "/" + key, "expected a string");
  return obj.at(key).get<std::string>();
}

}  // namespace detail

// Serialized workflow, schema version 1. The same sections appear in
// workflow definition files, which add environment-only sections ("channels",
// "meta_data") on top.
inline Value serialize(const Workflow& workflow) {
  Value plates = Value::array();
  for (const auto& plate : workflow.plates) {
    Value p{{"id", plate.plate_id}, {"meta_data_key", plate.meta_data_key}};
    if (plate.parent_plate) p["parent"] = *plate.parent_plate;
    if (plate.values_filter) p["values"] = *plate.values_filter;
    plates.push_back(p);
  }
  Value nodes = Value::array();
  for (const auto& node : workflow.nodes) {
    Value n{{"id", node.node_id}, {"channel", node.channel}};
    if (node.plate_id) n["plate"] = *node.plate_id;
    nodes.push_back(n);
  }
  Value factors = Value::array();
  for (const auto& factor : workflow.factors) {
    Value f{{"kind", to_string(factor.kind)},
            {"tool", Value{{"name", factor.tool.name},
                           {"version", factor.tool.version_req},
                           {"parameters", factor.tool.parameters}}},
            {"sources", Value(factor.sources)},
            {"sink", factor.sink}};
    if (factor.output_plate) f["output_plate"] = *factor.output_plate;
    factors.push_back(f);
  }
  Value meta{{"id", workflow.workflow_id},
             {"name", workflow.name},
             {"mode", workflow.mode == WorkflowMode::online ? "online" : "offline_only"}};
  if (!workflow.description.empty()) meta["description"] = workflow.description;
  return Value{{"schema_version", kWorkflowSchemaVersion},
               {"workflow", meta},
               {"plates", plates},
               {"nodes", nodes},
               {"factors", factors},
               {"intervals", to_json(workflow.requested_intervals)}};
}

// Strict inverse of serialize: unknown fields are rejected with the path of
// the offender, and unsupported schema versions fail up front. The
// environment sections of definition files are accepted and left alone.
inline Workflow deserialize(const Value& payload) {
  if (!payload.is_object()) throw SchemaViolationError("/", "expected an object");
  detail::check_known_keys(payload, {"schema_version", "workflow", "plates", "nodes", "factors",
                                     "intervals", "channels", "meta_data"},
                           "");
  const Value& version = detail::require_field(payload, "schema_version", "");
  if (!version.is_number_integer() && !version.is_number_unsigned())
    throw SchemaViolationError("/schema_version", "expected an integer");
  if (version.get<int>() != kWorkflowSchemaVersion)
    throw Error(ErrorCode::unsupported_schema_version,
                "schema_version " + std::to_string(version.get<int>()) + " (supported: " +
                    std::to_string(kWorkflowSchemaVersion) + ")");

  Workflow workflow;
  const Value& meta = detail::require_field(payload, "workflow", "");
  detail::check_known_keys(meta, {"id", "name", "description", "mode"}, "/workflow");
  workflow.workflow_id = detail::require_string(meta, "id", "/workflow");
  workflow.name = detail::require_string(meta, "name", "/workflow");
  workflow.description = detail::optional_string(meta, "description", "/workflow").value_or("");
  const std::string mode = detail::require_string(meta, "mode", "/workflow");
  if (mode == "online") workflow.mode = WorkflowMode::online;
  else if (mode == "offline_only") workflow.mode = WorkflowMode::offline_only;
  else throw SchemaViolationError("/workflow/mode", "expected 'offline_only' or 'online'");

  if (payload.contains("plates")) {
    const Value& plates = payload.at("plates");
    if (!plates.is_array()) throw SchemaViolationError("/plates", "expected an array");
    for (std::size_t i = 0; i < plates.size(); ++i) {
      const std::string path = "/plates/" + std::to_string(i);
      const Value& p = plates.at(i);
      if (!p.is_object()) throw SchemaViolationError(path, "expected an object");
      detail::check_known_keys(p, {"id", "meta_data_key", "parent", "values"}, path);
      PlateDefinition plate;
      plate.plate_id = detail::require_string(p, "id", path);
      plate.meta_data_key = detail::require_string(p, "meta_data_key", path);
      plate.parent_plate = detail::optional_string(p, "parent", path);
      if (p.contains("values") && !p.at("values").is_null()) {
        if (!p.at("values").is_array()) throw SchemaViolationError(path + "/values", "expected an array");
        std::vector<std::string> values;
        for (const auto& v : p.at("values")) {
          if (!v.is_string()) throw SchemaViolationError(path + "/values", "expected strings");
          values.push_back(v.get<std::string>());
        }
        plate.values_filter = std::move(values);
      }
      workflow.plates.push_back(std::move(plate));
    }
  }

  const Value& nodes = detail::require_field(payload, "nodes", "");
  if (!nodes.is_array()) throw SchemaViolationError("/nodes", "expected an array");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const std::string path = "/nodes/" + std::to_string(i);
    const Value& n = nodes.at(i);
    if (!n.is_object()) throw SchemaViolationError(path, "expected an object");
    detail::check_known_keys(n, {"id", "plate", "channel"}, path);
    Node node;
    node.node_id = detail::require_string(n, "id", path);
    node.plate_id = detail::optional_string(n, "plate", path);
    node.channel = detail::require_string(n, "channel", path);
    workflow.nodes.push_back(std::move(node));
  }

  const Value& factors = detail::require_field(payload, "factors", "");
  if (!factors.is_array()) throw SchemaViolationError("/factors", "expected an array");
  for (std::size_t i = 0; i < factors.size(); ++i) {
    const std::string path = "/factors/" + std::to_string(i);
    const Value& f = factors.at(i);
    if (!f.is_object()) throw SchemaViolationError(path, "expected an object");
    detail::check_known_keys(f, {"kind", "tool", "sources", "sink", "output_plate"}, path);
    Factor factor;
    const std::string kind = detail::require_string(f, "kind", path);
    if (kind == "basic") factor.kind = FactorKind::basic;
    else if (kind == "multi_output") factor.kind = FactorKind::multi_output;
    else if (kind == "raw") factor.kind = FactorKind::raw;
    else throw SchemaViolationError(path + "/kind", "expected basic|multi_output|raw");
    const Value& tool = detail::require_field(f, "tool", path);
    if (!tool.is_object()) throw SchemaViolationError(path + "/tool", "expected an object");
    detail::check_known_keys(tool, {"name", "version", "parameters"}, path + "/tool");
    factor.tool.name = detail::require_string(tool, "name", path + "/tool");
    factor.tool.version_req = detail::optional_string(tool, "version", path + "/tool").value_or("*");
    if (tool.contains("parameters")) {
      if (!tool.at("parameters").is_object())
        throw SchemaViolationError(path + "/tool/parameters", "expected an object");
      factor.tool.parameters = tool.at("parameters");
      check_value_model(factor.tool.parameters, "factor parameters");
    }
    if (f.contains("sources")) {
      if (!f.at("sources").is_array()) throw SchemaViolationError(path + "/sources", "expected an array");
      for (const auto& s : f.at("sources")) {
        if (!s.is_string()) throw SchemaViolationError(path + "/sources", "expected strings");
        factor.sources.push_back(s.get<std::string>());
      }
    }
    factor.sink = detail::require_string(f, "sink", path);
    factor.output_plate = detail::optional_string(f, "output_plate", path);
    workflow.factors.push_back(std::move(factor));
  }

  if (payload.contains("intervals")) {
    const Value& intervals = payload.at("intervals");
    if (!intervals.is_array()) throw SchemaViolationError("/intervals", "expected an array");
    std::vector<TimeInterval> parsed;
    for (std::size_t i = 0; i < intervals.size(); ++i) {
      const std::string path = "/intervals/" + std::to_string(i);
      const Value& iv = intervals.at(i);
      if (!iv.is_object()) throw SchemaViolationError(path, "expected an object");
      detail::check_known_keys(iv, {"start", "end"}, path);
      try {
        parsed.push_back(TimeInterval(parse_timestamp(detail::require_string(iv, "start", path)),
                                      parse_timestamp(detail::require_string(iv, "end", path))));
      } catch (const SchemaViolationError&) {
        throw;
      } catch (const Error& e) {
        throw SchemaViolationError(path, e.what());
      }
    }
    workflow.requested_intervals = TimeIntervalSet::from_intervals(std::move(parsed));
  }

  return workflow;
}

}  // namespace streamflow
