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

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "streamflow/errors.hpp"
#include "streamflow/stream.hpp"
#include "streamflow/value.hpp"

namespace streamflow {

// Rooted tree of meta-data identifiers: each node is (tag, identifier) under
// a parent, identifiers unique among siblings with the same tag. The tree is
// what plates loop over; nesting in the tree is what plate nesting follows.
class MetaDataTree {
 public:
  static constexpr std::size_t kRoot = 0;

  MetaDataTree() { nodes_.push_back(TreeNode{"", "", kRoot, {}}); }

  // Inserts (tag, identifier) under parent, registering the tag; returns the
  // existing node when already present, so insertion is idempotent.
  std::size_t insert(std::size_t parent, const std::string& tag, const std::string& identifier) {
    declared_tags_.insert(tag);
    if (auto existing = find(parent, tag, identifier)) return *existing;
    nodes_.push_back(TreeNode{tag, identifier, parent, {}});
    nodes_[parent].children.push_back(nodes_.size() - 1);
    return nodes_.size() - 1;
  }

  // Registers a tag with no identifiers yet; a plate over it expands to [].
  void declare_tag(const std::string& tag) { declared_tags_.insert(tag); }

  bool tag_declared(const std::string& tag) const { return declared_tags_.count(tag) > 0; }

  std::optional<std::size_t> find(std::size_t parent, const std::string& tag,
                                  const std::string& identifier) const {
    for (std::size_t child : nodes_[parent].children)
      if (nodes_[child].tag == tag && nodes_[child].identifier == identifier) return child;
    return std::nullopt;
  }

  std::vector<std::size_t> children_with_tag(std::size_t parent, const std::string& tag) const {
    std::vector<std::size_t> out;
    for (std::size_t child : nodes_[parent].children)
      if (nodes_[child].tag == tag) out.push_back(child);
    return out;
  }

  const std::string& tag_of(std::size_t node) const { return nodes_[node].tag; }
  const std::string& identifier_of(std::size_t node) const { return nodes_[node].identifier; }
  std::size_t parent_of(std::size_t node) const { return nodes_[node].parent; }
  std::size_t size() const { return nodes_.size(); }

  // (tag, identifier) pairs collected from the root down to `node`.
  MetaData assignment_of(std::size_t node) const {
    std::vector<std::pair<std::string, std::string>> pairs;
    for (std::size_t n = node; n != kRoot; n = nodes_[n].parent)
      pairs.emplace_back(nodes_[n].tag, nodes_[n].identifier);
    return MetaData::from_pairs(std::move(pairs));
  }

  // Declarative form: [{"tag", "identifier", "children": [...]}, ...].
  static MetaDataTree from_json(const Value& v) {
    MetaDataTree tree;
    if (!v.is_array()) throw Error(ErrorCode::parse_failure, "meta_data must be an array");
    for (const auto& entry : v) tree.insert_json(kRoot, entry);
    return tree;
  }

  Value to_json() const { return children_to_json(kRoot); }

 private:
  struct TreeNode {
    std::string tag;
    std::string identifier;
    std::size_t parent;
    std::vector<std::size_t> children;
  };

  void insert_json(std::size_t parent, const Value& entry) {
    if (!entry.is_object() || !entry.contains("tag") || !entry.contains("identifier"))
      throw Error(ErrorCode::parse_failure, "meta_data entry needs tag and identifier");
    const std::size_t node = insert(parent, entry.at("tag").get<std::string>(),
                                    entry.at("identifier").get<std::string>());
    if (entry.contains("children"))
      for (const auto& child : entry.at("children")) insert_json(node, child);
  }

  Value children_to_json(std::size_t node) const {
    Value out = Value::array();
    for (std::size_t child : nodes_[node].children) {
      Value entry{{"identifier", nodes_[child].identifier}, {"tag", nodes_[child].tag}};
      Value children = children_to_json(child);
      if (!children.empty()) entry["children"] = children;
      out.push_back(entry);
    }
    return out;
  }

  std::vector<TreeNode> nodes_;
  std::set<std::string> declared_tags_;
};

// A "for loop" over one meta-data tag, optionally nested inside a parent
// plate and optionally restricted to an explicit identifier list.
struct PlateDefinition {
  std::string plate_id;
  std::string meta_data_key;
  std::optional<std::string> parent_plate;
  std::optional<std::vector<std::string>> values_filter;

  bool operator==(const PlateDefinition&) const = default;
};

// One iteration of a plate: an assignment with exactly the ancestry chain's
// meta-data keys.
struct PlateValue {
  MetaData assignment;

  std::string canonical() const { return assignment.canonical_suffix(); }

  bool operator==(const PlateValue&) const = default;
};

using PlateMap = std::map<std::string, PlateDefinition>;

inline PlateMap plate_map(const std::vector<PlateDefinition>& plates) {
  PlateMap out;
  for (const auto& plate : plates) out[plate.plate_id] = plate;
  return out;
}

// Meta-data keys along the ancestry chain, outermost first.
inline std::vector<std::string> plate_key_chain(const std::string& plate_id, const PlateMap& plates) {
  std::vector<std::string> chain;
  std::set<std::string> seen;
  std::string current = plate_id;
  while (true) {
    auto it = plates.find(current);
    if (it == plates.end()) throw Error(ErrorCode::unknown_plate, current);
    if (!seen.insert(current).second)
      throw Error(ErrorCode::invalid_workflow, "plate parent cycle at " + current);
    chain.push_back(it->second.meta_data_key);
    if (!it->second.parent_plate) break;
    current = *it->second.parent_plate;
  }
  std::reverse(chain.begin(), chain.end());
  return chain;
}

namespace detail {

inline void expand_into(const PlateDefinition& plate, const PlateMap& plates,
                        const MetaDataTree& tree, std::size_t tree_node, const MetaData& prefix,
                        std::vector<PlateValue>& out) {
  for (std::size_t child : tree.children_with_tag(tree_node, plate.meta_data_key)) {
    const std::string& identifier = tree.identifier_of(child);
    if (plate.values_filter &&
        std::find(plate.values_filter->begin(), plate.values_filter->end(), identifier) ==
            plate.values_filter->end())
      continue;
    out.push_back(PlateValue{prefix.merged_with(plate.meta_data_key, identifier)});
  }
}

inline std::vector<std::pair<std::size_t, MetaData>> expand_nodes(const PlateDefinition& plate,
                                                                  const PlateMap& plates,
                                                                  const MetaDataTree& tree);

}  // namespace detail

// All iterations of a plate against the tree, ordered lexicographically by
// canonical form. Nested plates yield the cross-assignments implied by the
// tree (children under each parent node), not a free cartesian product.
inline std::vector<PlateValue> expand(const PlateDefinition& plate, const PlateMap& plates,
                                      const MetaDataTree& tree) {
  if (!tree.tag_declared(plate.meta_data_key))
    throw Error(ErrorCode::unknown_tag, plate.meta_data_key);
  std::vector<PlateValue> out;
  for (auto& [node, prefix] : detail::expand_nodes(plate, plates, tree))
    detail::expand_into(plate, plates, tree, node, prefix, out);
  std::sort(out.begin(), out.end(),
            [](const PlateValue& a, const PlateValue& b) { return a.canonical() < b.canonical(); });
  return out;
}

namespace detail {

// Tree nodes under which the plate's own tag is looped, paired with the
// parent assignment accumulated so far.
inline std::vector<std::pair<std::size_t, MetaData>> expand_nodes(const PlateDefinition& plate,
                                                                  const PlateMap& plates,
                                                                  const MetaDataTree& tree) {
  if (!plate.parent_plate) return {{MetaDataTree::kRoot, MetaData{}}};
  auto it = plates.find(*plate.parent_plate);
  if (it == plates.end()) throw Error(ErrorCode::unknown_plate, *plate.parent_plate);
  const PlateDefinition& parent = it->second;
  std::vector<std::pair<std::size_t, MetaData>> out;
  for (auto& [node, prefix] : expand_nodes(parent, plates, tree)) {
    for (std::size_t child : tree.children_with_tag(node, parent.meta_data_key)) {
      const std::string& identifier = tree.identifier_of(child);
      if (parent.values_filter &&
          std::find(parent.values_filter->begin(), parent.values_filter->end(), identifier) ==
              parent.values_filter->end())
        continue;
      out.emplace_back(child, prefix.merged_with(parent.meta_data_key, identifier));
    }
  }
  return out;
}

}  // namespace detail

// One StreamId per plate value: name = node_name, meta-data = assignment.
// Without a plate the node is a single stream with empty meta-data.
inline std::vector<StreamId> streams_for_node(const std::string& node_name,
                                              const std::optional<PlateDefinition>& plate,
                                              const PlateMap& plates, const MetaDataTree& tree) {
  if (!is_valid_stream_name(node_name))
    throw Error(ErrorCode::invalid_name, "node name must match [a-z0-9_]+, got '" + node_name + "'");
  if (!plate) return {StreamId(node_name, {})};
  std::vector<StreamId> out;
  for (const auto& value : expand(*plate, plates, tree))
    out.emplace_back(node_name, value.assignment);
  return out;
}

}  // namespace streamflow
