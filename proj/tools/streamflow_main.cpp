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

#include <CLI11.hpp>

#include <atomic>
#include <csignal>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "streamflow/streamflow.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitIo = 1;       // unreadable or unparseable input
constexpr int kExitInvalid = 2;  // validation failure or unknown entity
constexpr int kExitRuntime = 3;  // an execution entry failed
constexpr int kExitUsage = 64;

std::atomic<bool> g_stop{false};

void handle_signal(int) { g_stop.store(true); }

using namespace streamflow;

LogSink make_log_sink(bool verbose) {
  if (!verbose) return {};
  return [](const Value& event) { std::cerr << canonical_json(event) << "\n"; };
}

// Inverse of StreamId::canonical(): "name(key=value)(key=value)".
StreamId parse_stream_id(const std::string& text) {
  const auto paren = text.find('(');
  const std::string name = text.substr(0, paren);
  std::vector<std::pair<std::string, std::string>> pairs;
  std::size_t i = (paren == std::string::npos) ? text.size() : paren;
  while (i < text.size()) {
    const auto eq = text.find('=', i);
    const auto close = text.find(')', i);
    if (text[i] != '(' || eq == std::string::npos || close == std::string::npos || eq > close)
      throw Error(ErrorCode::invalid_name, "malformed stream id '" + text + "'");
    pairs.emplace_back(text.substr(i + 1, eq - i - 1), text.substr(eq + 1, close - eq - 1));
    i = close + 1;
  }
  return make_stream_id(name, std::move(pairs));
}

struct LoadedDefinition {
  Definition definition;
  ToolRegistry registry;
  ChannelSet channels;
};

LoadedDefinition load_and_wire(const std::string& path) {
  LoadedDefinition loaded;
  loaded.definition = load_definition(path);
  loaded.registry = builtin_tool_registry();
  loaded.channels = make_channels(loaded.definition.channels, loaded.registry);
  return loaded;
}

int print_violations(const std::vector<Violation>& violations) {
  for (const auto& violation : violations)
    std::cout << violation.code << " " << violation.subject << ": " << violation.detail << "\n";
  return violations.empty() ? kExitOk : kExitInvalid;
}

void print_report(const ExecutionReport& report) {
  for (const auto& entry : report.entries) {
    std::printf("%-40s %-8s %-20s %6zu  %s\n", entry.sink.canonical().c_str(),
                entry.sink_channel.c_str(), to_string(entry.outcome), entry.instances_written,
                to_string(entry.intervals_marked).c_str());
  }
  std::printf("total: computed=%zu served_from_storage=%zu failed=%zu tool_invocations=%zu\n",
              report.count(EntryOutcome::computed),
              report.count(EntryOutcome::served_from_storage),
              report.count(EntryOutcome::failed), report.tool_invocations);
  for (const auto& entry : report.entries)
    if (entry.outcome == EntryOutcome::failed)
      std::printf("failed %s: %s\n", entry.sink.canonical().c_str(), entry.error.c_str());
}

int cmd_validate(const std::string& path) {
  auto loaded = load_and_wire(path);
  const auto violations = validate(loaded.definition.workflow, loaded.registry);
  if (violations.empty()) {
    std::cout << "OK\n";
    return kExitOk;
  }
  return print_violations(violations);
}

int cmd_run(const std::string& path, const std::optional<std::string>& start,
            const std::optional<std::string>& end, bool verbose) {
  auto loaded = load_and_wire(path);
  const auto violations = validate(loaded.definition.workflow, loaded.registry);
  if (!violations.empty()) return print_violations(violations);

  TimeIntervalSet requested = loaded.definition.workflow.requested_intervals;
  if (start || end) {
    if (!start || !end) {
      std::cerr << "--start and --end must be given together\n";
      return kExitUsage;
    }
    Timestamp from, to;
    try {
      from = parse_timestamp(*start);
      to = parse_timestamp(*end);
    } catch (const Error& e) {
      std::cerr << e.what() << "\n";
      return kExitUsage;
    }
    if (!(from < to)) {
      std::cerr << "--start must precede --end\n";
      return kExitUsage;
    }
    requested = TimeIntervalSet(TimeInterval(from, to));
  }

  EngineConfig config;
  config.log_sink = make_log_sink(verbose);
  config.stop = &g_stop;
  Engine engine(loaded.channels, loaded.registry, config);
  const auto report =
      engine.execute(loaded.definition.workflow, loaded.definition.tree, requested);
  print_report(report);
  return report.all_ok() ? kExitOk : kExitRuntime;
}

int cmd_serve(const std::vector<std::string>& paths, const std::string& poll,
              const std::string& lag, bool verbose) {
  OnlineConfig online;
  online.poll_period = parse_duration(poll);
  online.watermark_lag = parse_duration(lag);
  if (online.poll_period <= Duration::zero()) {
    std::cerr << "--poll must be positive\n";
    return kExitUsage;
  }

  std::vector<std::pair<Workflow, MetaDataTree>> workflows;
  std::optional<LoadedDefinition> wiring;
  for (const auto& path : paths) {
    auto loaded = load_and_wire(path);
    const auto violations = validate(loaded.definition.workflow, loaded.registry);
    if (!violations.empty()) {
      std::cerr << path << ":\n";
      return print_violations(violations);
    }
    if (loaded.definition.workflow.mode != WorkflowMode::online) {
      std::cerr << path << ": workflow '" << loaded.definition.workflow.workflow_id
                << "' is offline_only\n";
      return kExitInvalid;
    }
    workflows.emplace_back(loaded.definition.workflow, loaded.definition.tree);
    if (!wiring) wiring = std::move(loaded);  // definitions share the channel wiring
  }

  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);
  EngineConfig config;
  config.log_sink = make_log_sink(verbose);
  config.stop = &g_stop;
  Engine engine(wiring->channels, wiring->registry, config);
  engine.run_online(std::move(workflows), online, g_stop);
  std::cout << "stopped\n";
  return kExitOk;
}

ChannelSet streams_channels(const std::optional<std::string>& definition_path,
                            ToolRegistry& registry) {
  ChannelConfig config;
  if (definition_path) config = load_definition(*definition_path).channels;
  return make_channels(config, registry);
}

std::vector<std::string> persistent_channel_names(const ChannelSet& channels) {
  std::vector<std::string> out;
  for (const auto& name : channels.names())
    if (channels.get(name).capabilities().persistent) out.push_back(name);
  return out;
}

int cmd_streams_list(const std::optional<std::string>& definition_path) {
  ToolRegistry registry = builtin_tool_registry();
  const auto channels = streams_channels(definition_path, registry);
  for (const auto& name : persistent_channel_names(channels)) {
    for (const auto& record : channels.get(name).list_streams()) {
      std::printf("%-40s %-8s %s\n", record.id.canonical().c_str(), name.c_str(),
                  to_string(record.calculated_intervals).c_str());
    }
  }
  return kExitOk;
}

int cmd_streams_intervals(const std::string& id_text,
                          const std::optional<std::string>& definition_path,
                          const std::optional<std::string>& channel_name) {
  ToolRegistry registry = builtin_tool_registry();
  const auto channels = streams_channels(definition_path, registry);
  const StreamId id = parse_stream_id(id_text);
  bool found = false;
  for (const auto& name : persistent_channel_names(channels)) {
    if (channel_name && name != *channel_name) continue;
    if (const auto record = channels.get(name).find_stream(id)) {
      found = true;
      std::printf("%s %s\n", name.c_str(), to_string(record->calculated_intervals).c_str());
    }
  }
  if (!found) {
    std::cerr << "UnknownStream: " << id.canonical() << "\n";
    return kExitInvalid;
  }
  return kExitOk;
}

int cmd_streams_purge(const std::string& id_text,
                      const std::optional<std::string>& definition_path,
                      const std::optional<std::string>& channel_name) {
  ToolRegistry registry = builtin_tool_registry();
  const auto channels = streams_channels(definition_path, registry);
  const StreamId id = parse_stream_id(id_text);
  bool found = false;
  for (const auto& name : persistent_channel_names(channels)) {
    if (channel_name && name != *channel_name) continue;
    Channel& channel = channels.get(name);
    if (!channel.capabilities().supports_purge) continue;
    if (channel.find_stream(id)) {
      channel.purge(id);
      found = true;
      std::printf("purged %s in %s\n", id.canonical().c_str(), name.c_str());
    }
  }
  if (!found) {
    std::cerr << "UnknownStream: " << id.canonical() << "\n";
    return kExitInvalid;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"streamflow: stream-processing workflows, computed on request"};
  app.require_subcommand(1);

  std::string path;
  std::vector<std::string> paths;
  std::optional<std::string> start, end;
  std::string poll = "1s", lag = "5s";
  bool verbose = false;
  std::string stream_id;
  std::optional<std::string> def_file, channel;

  auto* validate_cmd = app.add_subcommand("validate", "check a workflow definition file");
  validate_cmd->add_option("file", path, "workflow definition file")->required();

  auto* run_cmd = app.add_subcommand("run", "execute a workflow over its requested intervals");
  run_cmd->add_option("file", path, "workflow definition file")->required();
  run_cmd->add_option("--start", start, "override interval start (RFC 3339)");
  run_cmd->add_option("--end", end, "override interval end (RFC 3339)");
  run_cmd->add_flag("--verbose", verbose, "structured JSON logs on stderr");

  auto* serve_cmd = app.add_subcommand("serve", "run online workflows continuously");
  serve_cmd->add_option("files", paths, "workflow definition files")->required();
  serve_cmd->add_option("--poll", poll, "poll period (e.g. 100ms, 1s)");
  serve_cmd->add_option("--lag", lag, "watermark lag (e.g. 5s)");
  serve_cmd->add_flag("--verbose", verbose, "structured JSON logs on stderr");

  auto* streams_cmd = app.add_subcommand("streams", "inspect stored streams");
  auto* list_cmd = streams_cmd->add_subcommand("list", "list streams with ledger coverage");
  list_cmd->add_option("--file", def_file, "definition file providing channel paths");
  auto* intervals_cmd = streams_cmd->add_subcommand("intervals", "print a stream's computed set");
  intervals_cmd->add_option("stream", stream_id, "canonical stream id")->required();
  intervals_cmd->add_option("--file", def_file, "definition file providing channel paths");
  intervals_cmd->add_option("--channel", channel, "restrict to one channel");
  auto* purge_cmd = streams_cmd->add_subcommand("purge", "clear a stream's instances and ledger");
  purge_cmd->add_option("stream", stream_id, "canonical stream id")->required();
  purge_cmd->add_option("--file", def_file, "definition file providing channel paths");
  purge_cmd->add_option("--channel", channel, "restrict to one channel");
  streams_cmd->require_subcommand(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (validate_cmd->parsed()) return cmd_validate(path);
    if (run_cmd->parsed()) return cmd_run(path, start, end, verbose);
    if (serve_cmd->parsed()) return cmd_serve(paths, poll, lag, verbose);
    if (list_cmd->parsed()) return cmd_streams_list(def_file);
    if (intervals_cmd->parsed()) return cmd_streams_intervals(stream_id, def_file, channel);
    if (purge_cmd->parsed()) return cmd_streams_purge(stream_id, def_file, channel);
  } catch (const ParseFailureError& e) {
    std::cerr << e.what() << "\n";
    return kExitIo;
  } catch (const SchemaViolationError& e) {
    std::cerr << e.what() << "\n";
    return kExitIo;
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    switch (e.code()) {
      case ErrorCode::io_error:
      case ErrorCode::parse_failure:
      case ErrorCode::unsupported_schema_version:
        return kExitIo;
      default:
        return kExitInvalid;
    }
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
