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

#include "streamflow/plates.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

using namespace streamflow;

namespace {

// Tree with continents Europe {UK, FR} and Asia {JP}.
MetaDataTree continents_tree() {
  MetaDataTree tree;
  const auto europe = tree.insert(MetaDataTree::kRoot, "continent", "Europe");
  const auto asia = tree.insert(MetaDataTree::kRoot, "continent", "Asia");
  tree.insert(europe, "country", "UK");
  tree.insert(europe, "country", "FR");
  tree.insert(asia, "country", "JP");
  return tree;
}

PlateMap continents_plates() {
  return plate_map({{"C", "continent", std::nullopt, std::nullopt},
                    {"CC", "country", "C", std::nullopt}});
}

// Independent oracle: walk the raw tree structure directly and build every
// (ancestor-chain) assignment whose leaf tag matches the plate's key chain.
std::vector<std::string> tree_walk_oracle(const MetaDataTree& tree,
                                          const std::vector<std::string>& key_chain) {
  std::vector<std::string> out;
  struct Frame {
    std::size_t node;
    std::vector<std::pair<std::string, std::string>> pairs;
  };
  std::vector<Frame> stack{{MetaDataTree::kRoot, {}}};
  while (!stack.empty()) {
    Frame frame = stack.back();
    stack.pop_back();
    const std::size_t depth = frame.pairs.size();
    if (depth == key_chain.size()) {
      out.push_back(MetaData::from_pairs(frame.pairs).canonical_suffix());
      continue;
    }
    for (std::size_t child = 1; child < tree.size(); ++child) {
      if (tree.parent_of(child) != frame.node) continue;
      if (tree.tag_of(child) != key_chain[depth]) continue;
      Frame next = frame;
      next.node = child;
      next.pairs.emplace_back(tree.tag_of(child), tree.identifier_of(child));
      stack.push_back(next);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::string> canonicals(const std::vector<PlateValue>& values) {
  std::vector<std::string> out;
  for (const auto& value : values) out.push_back(value.canonical());
  return out;
}

}  // namespace

TEST(Plates, OuterPlateLoopsOverContinents) {
  const auto tree = continents_tree();
  const auto plates = continents_plates();
  const auto values = expand(plates.at("C"), plates, tree);
  EXPECT_EQ(canonicals(values),
            (std::vector<std::string>{"(continent=Asia)", "(continent=Europe)"}));
}

TEST(Plates, NestedPlateFollowsTheTree) {
  const auto tree = continents_tree();
  const auto plates = continents_plates();
  const auto values = expand(plates.at("CC"), plates, tree);
  // Cross-assignments implied by the tree: no (Asia, UK) pair exists.
  EXPECT_EQ(canonicals(values),
            (std::vector<std::string>{"(continent=Asia)(country=JP)",
                                      "(continent=Europe)(country=FR)",
                                      "(continent=Europe)(country=UK)"}));
  EXPECT_EQ(canonicals(values), tree_walk_oracle(tree, {"continent", "country"}));
}

TEST(Plates, ValuesFilterRestrictsExpansion) {
  const auto tree = continents_tree();
  auto plates = continents_plates();
  plates.at("CC").values_filter = std::vector<std::string>{"UK"};
  EXPECT_EQ(canonicals(expand(plates.at("CC"), plates, tree)),
            (std::vector<std::string>{"(continent=Europe)(country=UK)"}));
}

TEST(Plates, UnknownPlateAndTagAreErrors) {
  const auto tree = continents_tree();
  auto plates = continents_plates();
  plates.at("CC").parent_plate = "missing";
  EXPECT_THROW(expand(plates.at("CC"), plates, tree), Error);

  const PlateDefinition rogue{"R", "city", std::nullopt, std::nullopt};
  try {
    expand(rogue, plates, tree);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::unknown_tag);
  }
}

TEST(Plates, DeclaredTagWithNoIdentifiersExpandsToNothing) {
  MetaDataTree tree;
  tree.declare_tag("house");
  const auto plates = plate_map({{"H", "house", std::nullopt, std::nullopt}});
  EXPECT_TRUE(expand(plates.at("H"), plates, tree).empty());
  EXPECT_TRUE(streams_for_node("temp", plates.at("H"), plates, tree).empty());
}

TEST(Plates, StreamsForNodeMirrorsExpansion) {
  const auto tree = continents_tree();
  const auto plates = continents_plates();
  const auto streams = streams_for_node("temp", plates.at("CC"), plates, tree);
  ASSERT_EQ(streams.size(), expand(plates.at("CC"), plates, tree).size());
  EXPECT_EQ(streams[0].canonical(), "temp(continent=Asia)(country=JP)");
  EXPECT_EQ(streams[2].canonical(), "temp(continent=Europe)(country=UK)");

  const auto offplate = streams_for_node("temp", std::nullopt, plates, tree);
  ASSERT_EQ(offplate.size(), 1u);
  EXPECT_EQ(offplate[0].canonical(), "temp");
}

TEST(Plates, ExpansionIsInsertionOrderInvariant) {
  std::mt19937_64 rng(3);
  std::vector<std::pair<std::string, std::vector<std::string>>> spec = {
      {"Europe", {"UK", "FR", "DE"}}, {"Asia", {"JP", "CN"}}, {"Africa", {"EG"}}};
  const auto plates = continents_plates();
  std::vector<std::string> reference;
  for (int round = 0; round < 20; ++round) {
    std::shuffle(spec.begin(), spec.end(), rng);
    MetaDataTree tree;
    for (auto& [continent, countries] : spec) {
      std::shuffle(countries.begin(), countries.end(), rng);
      const auto node = tree.insert(MetaDataTree::kRoot, "continent", continent);
      for (const auto& country : countries) tree.insert(node, "country", country);
    }
    const auto values = canonicals(expand(plates.at("CC"), plates, tree));
    ASSERT_EQ(std::set<std::string>(values.begin(), values.end()).size(), values.size());
    if (round == 0) reference = values;
    else ASSERT_EQ(values, reference);
  }
}

TEST(Plates, ProjectionConsistencyForNestedPlates) {
  const auto tree = continents_tree();
  const auto plates = continents_plates();
  const auto outer = expand(plates.at("C"), plates, tree);
  for (const auto& value : expand(plates.at("CC"), plates, tree)) {
    const auto projected = value.assignment.project({"continent"});
    EXPECT_TRUE(std::any_of(outer.begin(), outer.end(), [&](const PlateValue& parent) {
      return parent.assignment == projected;
    }));
  }
}

TEST(Plates, InsertIsIdempotentAndTreeSerializes) {
  MetaDataTree tree;
  const auto a = tree.insert(MetaDataTree::kRoot, "house", "1");
  const auto b = tree.insert(MetaDataTree::kRoot, "house", "1");
  EXPECT_EQ(a, b);
  tree.insert(a, "wearable", "w1");

  const auto round_tripped = MetaDataTree::from_json(tree.to_json());
  EXPECT_EQ(round_tripped.to_json(), tree.to_json());
  EXPECT_TRUE(round_tripped.tag_declared("wearable"));
  EXPECT_EQ(round_tripped.assignment_of(*round_tripped.find(
                *round_tripped.find(MetaDataTree::kRoot, "house", "1"), "wearable", "w1")),
            MetaData::from_pairs({{"house", "1"}, {"wearable", "w1"}}));
}
