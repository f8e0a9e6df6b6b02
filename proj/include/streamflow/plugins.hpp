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

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <sstream>
#include <string>

#include "streamflow/channel.hpp"
#include "streamflow/tool.hpp"

namespace streamflow {

// Compile-time plugin registry: host code registers factories under entry
// point identifiers; a plugins.json manifest binds names to entry points at
// load time. Loading tools from source files at runtime is deliberately not
// a thing here.
class PluginHost {
 public:
  using ToolFactory = std::function<std::shared_ptr<const Tool>()>;
  using ChannelFactory = std::function<std::shared_ptr<Channel>(const std::string& name,
                                                                const Value& config)>;

  static PluginHost& instance() {
    static PluginHost host;
    return host;
  }

  void register_tool_entry(const std::string& entry_id, ToolFactory factory) {
    tool_entries_[entry_id] = std::move(factory);
  }

  void register_channel_entry(const std::string& entry_id, ChannelFactory factory) {
    channel_entries_[entry_id] = std::move(factory);
  }

  std::shared_ptr<const Tool> make_tool(const std::string& entry_id) const {
    auto it = tool_entries_.find(entry_id);
    if (it == tool_entries_.end())
      throw Error(ErrorCode::unknown_tool, "no tool entry point '" + entry_id + "'");
    return it->second();
  }

  std::shared_ptr<Channel> make_channel(const std::string& entry_id, const std::string& name,
                                        const Value& config) const {
    auto it = channel_entries_.find(entry_id);
    if (it == channel_entries_.end())
      throw Error(ErrorCode::unknown_channel, "no channel entry point '" + entry_id + "'");
    return it->second(name, config);
  }

 private:
  std::map<std::string, ToolFactory> tool_entries_;
  std::map<std::string, ChannelFactory> channel_entries_;
};

// Manifest schema:
//   {"tools": {"<tool name>": "<entry id>", ...},
//    "channels": {"<channel name>": {"entry": "<entry id>", "config": {...}}, ...}}
inline void load_plugin_manifest(const Value& manifest, ToolRegistry& registry,
                                 ChannelSet& channels) {
  if (!manifest.is_object())
    throw Error(ErrorCode::parse_failure, "plugin manifest must be an object");
  if (manifest.contains("tools")) {
    for (const auto& [name, entry] : manifest.at("tools").items()) {
      auto tool = PluginHost::instance().make_tool(entry.get<std::string>());
      if (tool->descriptor().name != name)
        throw Error(ErrorCode::parameter_invalid,
                    "plugin tool entry '" + entry.get<std::string>() + "' provides '" +
                        tool->descriptor().name + "', manifest says '" + name + "'");
      registry.register_tool(std::move(tool));
    }
  }
  if (manifest.contains("channels")) {
    for (const auto& [name, spec] : manifest.at("channels").items()) {
      const std::string entry = spec.at("entry").get<std::string>();
      const Value config = spec.contains("config") ? spec.at("config") : Value::object();
      channels.add(PluginHost::instance().make_channel(entry, name, config));
    }
  }
}

inline void load_plugin_manifest_file(const std::filesystem::path& path, ToolRegistry& registry,
                                      ChannelSet& channels) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot open plugin manifest " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  load_plugin_manifest(parse_value(buffer.str()), registry, channels);
}

}  // namespace streamflow
