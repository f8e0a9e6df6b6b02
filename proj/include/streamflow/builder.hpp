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

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "streamflow/workflow.hpp"

namespace streamflow {

// Fluent construction mirroring how plates nest: create_plate gives a handle
// usable as the parent of inner plates and as the home of nodes.
//
//   WorkflowBuilder b("demo", "Demo");
//   auto continents = b.create_plate("C", "continent");
//   auto countries = b.create_plate("CC", "country", continents);
//   b.create_node("temp", "memory", countries);
//   b.create_raw_factor({"csv_import", "*", params}, "temp");
//   Workflow w = b.build();
class WorkflowBuilder {
 public:
  struct PlateHandle {
    std::string plate_id;
  };
  struct NodeHandle {
    std::string node_id;
  };

  WorkflowBuilder(std::string workflow_id, std::string name)
      : workflow_{std::move(workflow_id), std::move(name), "", {}, {}, {}, {},
                  WorkflowMode::offline_only} {}

  WorkflowBuilder& describe(std::string description) {
    workflow_.description = std::move(description);
    return *this;
  }

  WorkflowBuilder& online() {
    workflow_.mode = WorkflowMode::online;
    return *this;
  }

  PlateHandle create_plate(const std::string& plate_id, const std::string& meta_data_key,
                           std::optional<PlateHandle> parent = std::nullopt,
                           std::optional<std::vector<std::string>> values = std::nullopt) {
    PlateDefinition plate;
    plate.plate_id = plate_id;
    plate.meta_data_key = meta_data_key;
    if (parent) plate.parent_plate = parent->plate_id;
    plate.values_filter = std::move(values);
    workflow_.plates.push_back(std::move(plate));
    return PlateHandle{plate_id};
  }

  NodeHandle create_node(const std::string& node_id, const std::string& channel,
                         std::optional<PlateHandle> plate = std::nullopt) {
    Node node;
    node.node_id = node_id;
    node.channel = channel;
    if (plate) node.plate_id = plate->plate_id;
    workflow_.nodes.push_back(std::move(node));
    return NodeHandle{node_id};
  }

  WorkflowBuilder& create_raw_factor(ToolRef tool, const NodeHandle& sink) {
    workflow_.factors.push_back(Factor{FactorKind::raw, std::move(tool), {}, sink.node_id, {}});
    return *this;
  }

  WorkflowBuilder& create_factor(ToolRef tool, const std::vector<NodeHandle>& sources,
                                 const NodeHandle& sink) {
    std::vector<std::string> source_ids;
    for (const auto& source : sources) source_ids.push_back(source.node_id);
    workflow_.factors.push_back(
        Factor{FactorKind::basic, std::move(tool), std::move(source_ids), sink.node_id, {}});
    return *this;
  }

  WorkflowBuilder& create_multi_output_factor(ToolRef tool, const NodeHandle& source,
                                              const NodeHandle& sink,
                                              const PlateHandle& output_plate) {
    workflow_.factors.push_back(Factor{FactorKind::multi_output, std::move(tool),
                                       {source.node_id}, sink.node_id, output_plate.plate_id});
    return *this;
  }

  WorkflowBuilder& request(TimeInterval interval) {
    workflow_.requested_intervals =
        set_union(workflow_.requested_intervals, TimeIntervalSet(interval));
    return *this;
  }

  Workflow build() const { return workflow_; }

 private:
  Workflow workflow_;
};

}  // namespace streamflow
