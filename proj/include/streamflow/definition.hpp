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
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include "streamflow/builtin_tools.hpp"
#include "streamflow/file_channel.hpp"
#include "streamflow/memory_channel.hpp"
#include "streamflow/plugins.hpp"
#include "streamflow/store_channel.hpp"
#include "streamflow/workflow.hpp"

namespace streamflow {

// Where the built-in channels keep their data. Every path is optional in the
// definition file; unset paths fall back under the data root, which is
// STREAMFLOW_HOME when set and ./streamflow_data otherwise.
struct ChannelConfig {
  std::optional<std::filesystem::path> file_root;
  std::optional<std::filesystem::path> store_path;
  std::optional<std::filesystem::path> assets_root;
  std::optional<std::filesystem::path> plugins_manifest;

  static std::filesystem::path default_data_root() {
    if (const char* home = std::getenv("STREAMFLOW_HOME"); home && *home)
      return std::filesystem::path(home);
    return std::filesystem::path("streamflow_data");
  }

  std::filesystem::path effective_file_root() const {
    return file_root ? *file_root : default_data_root() / "streams";
  }
  std::filesystem::path effective_store_path() const {
    return store_path ? *store_path : default_data_root() / "store.db";
  }
  std::filesystem::path effective_assets_root() const {
    return assets_root ? *assets_root : default_data_root() / "assets";
  }
};

// A parsed workflow definition file: the workflow itself plus the
// environment sections (meta-data tree declarations and channel paths).
struct Definition {
  Workflow workflow;
  MetaDataTree tree;
  ChannelConfig channels;
  std::filesystem::path base_dir;
};

namespace detail {

// "{definition_dir}" in string parameters resolves to the directory holding
// the definition file, keeping fixture and data references relocatable.
inline void substitute_definition_dir(Value& value, const std::string& dir) {
  if (value.is_string()) {
    std::string text = value.get<std::string>();
    const std::string token = "{definition_dir}";
    std::size_t at;
    while ((at = text.find(token)) != std::string::npos) text.replace(at, token.size(), dir);
    value = text;
  } else if (value.is_array() || value.is_object()) {
    for (auto& item : value) substitute_definition_dir(item, dir);
  }
}

inline std::filesystem::path resolve_path(const std::string& text,
                                          const std::filesystem::path& base_dir) {
  const std::filesystem::path p(text);
  return p.is_absolute() ? p : base_dir / p;
}

}  // namespace detail

inline Definition parse_definition(const Value& payload,
                                   const std::filesystem::path& base_dir = ".") {
  Definition def;
  def.base_dir = base_dir;
  def.workflow = deserialize(payload);

  for (auto& factor : def.workflow.factors)
    detail::substitute_definition_dir(factor.tool.parameters, base_dir.string());

  if (payload.contains("meta_data")) def.tree = MetaDataTree::from_json(payload.at("meta_data"));
  for (const auto& plate : def.workflow.plates) def.tree.declare_tag(plate.meta_data_key);

  if (payload.contains("channels")) {
    const Value& channels = payload.at("channels");
    if (!channels.is_object()) throw SchemaViolationError("/channels", "expected an object");
    detail::check_known_keys(channels, {"file_root", "store_path", "assets_root", "plugins"},
                             "/channels");
    if (auto v = detail::optional_string(channels, "file_root", "/channels"))
      def.channels.file_root = detail::resolve_path(*v, base_dir);
    if (auto v = detail::optional_string(channels, "store_path", "/channels"))
      def.channels.store_path = detail::resolve_path(*v, base_dir);
    if (auto v = detail::optional_string(channels, "assets_root", "/channels"))
      def.channels.assets_root = detail::resolve_path(*v, base_dir);
    if (auto v = detail::optional_string(channels, "plugins", "/channels"))
      def.channels.plugins_manifest = detail::resolve_path(*v, base_dir);
  }
  return def;
}

// Reads and parses a definition file; JSON syntax errors carry the 1-based
// line computed from the parser's byte offset.
inline Definition load_definition(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  Value payload;
  try {
    payload = Value::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const std::size_t offset = std::min(e.byte, text.size());
    const std::uint64_t line = 1 + std::count(text.begin(), text.begin() + offset, '\n');
    throw ParseFailureError(path.string() + ": " + e.what(), line);
  }
  check_value_model(payload, "definition");
  return parse_definition(payload, path.parent_path().empty() ? std::filesystem::path(".")
                                                             : path.parent_path());
}

// The standard channel line-up: memory, file, store, assets and tools, plus
// whatever the plugin manifest adds.
inline ChannelSet make_channels(const ChannelConfig& config, ToolRegistry& registry) {
  ChannelSet channels;
  channels.add(std::make_shared<MemoryChannel>());
  channels.add(std::make_shared<FileChannel>(config.effective_file_root()));
  channels.add(std::make_shared<StoreChannel>(config.effective_store_path()));
  channels.add(make_assets_channel(config.effective_assets_root()));
  if (config.plugins_manifest) load_plugin_manifest_file(*config.plugins_manifest, registry, channels);
  channels.add(std::make_shared<ToolChannel>(std::make_shared<ToolRegistry>(registry)));
  return channels;
}

}  // namespace streamflow
