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

#include <atomic>
#include <chrono>
#include <functional>
#include <future>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "streamflow/builtin_tools.hpp"
#include "streamflow/channel.hpp"
#include "streamflow/plates.hpp"
#include "streamflow/tool.hpp"
#include "streamflow/workflow.hpp"

namespace streamflow {

using LogSink = std::function<void(const Value&)>;

struct EngineConfig {
  // Independent plate values of one factor may run on separate threads;
  // writes stay single-writer-per-stream because sinks are distinct.
  bool parallel_plate_values = false;
  std::size_t retry_limit = 3;       // online quarantine threshold per entry
  LogSink log_sink;                  // one JSON object per event, or empty
  const std::atomic<bool>* stop = nullptr;  // honored at entry boundaries
};

struct OnlineConfig {
  Duration poll_period = Duration::seconds(1);
  Duration watermark_lag = Duration::seconds(5);
};

// One (factor, plate value) unit of planned work.
struct PlanEntry {
  std::size_t factor_index = 0;
  PlateValue plate_value;
  StreamId sink;  // the coverage-marker stream for multi-output factors
  std::string sink_channel;
  TimeIntervalSet intervals_to_compute;
  std::vector<std::pair<StreamId, TimeIntervalSet>> source_reads;
  bool served_from_storage = false;  // nothing to compute as of planning
};

struct ExecutionPlan {
  Workflow workflow;
  MetaDataTree tree;  // declared + hydrated runtime discoveries
  TimeIntervalSet requested;
  std::vector<PlanEntry> entries;
};

enum class EntryOutcome { computed, served_from_storage, failed };

inline const char* to_string(EntryOutcome outcome) {
  switch (outcome) {
    case EntryOutcome::computed: return "computed";
    case EntryOutcome::served_from_storage: return "served_from_storage";
    case EntryOutcome::failed: return "failed";
  }
  return "?";
}

struct ReportEntry {
  std::size_t factor_index = 0;
  std::string tool_name;
  PlateValue plate_value;
  StreamId sink;
  std::string sink_channel;
  std::size_t instances_written = 0;
  std::size_t tool_invocations = 0;
  TimeIntervalSet intervals_marked;
  double duration_ms = 0.0;
  EntryOutcome outcome = EntryOutcome::served_from_storage;
  std::string error;
};

struct ExecutionReport {
  std::vector<ReportEntry> entries;
  std::size_t tool_invocations = 0;

  std::size_t count(EntryOutcome outcome) const {
    std::size_t n = 0;
    for (const auto& entry : entries)
      if (entry.outcome == outcome) ++n;
    return n;
  }
  bool all_ok() const { return count(EntryOutcome::failed) == 0; }

  Value to_json() const {
    Value entries_json = Value::array();
    for (const auto& entry : entries) {
      Value e{{"sink", entry.sink.canonical()},
              {"channel", entry.sink_channel},
              {"tool", entry.tool_name},
              {"outcome", streamflow::to_string(entry.outcome)},
              {"instances_written", entry.instances_written},
              {"intervals_marked", streamflow::to_json(entry.intervals_marked)},
              {"duration_ms", entry.duration_ms}};
      if (!entry.error.empty()) e["error"] = entry.error;
      entries_json.push_back(e);
    }
    return Value{{"entries", entries_json},
                 {"tool_invocations", tool_invocations},
                 {"computed", count(EntryOutcome::computed)},
                 {"served_from_storage", count(EntryOutcome::served_from_storage)},
                 {"failed", count(EntryOutcome::failed)}};
  }
};

// Compute-on-request executor: plans the minimal intervals per sink stream,
// runs factors in topological order, and extends ledgers as results land.
// The engine is stateless between calls; computation history lives entirely
// in the channels.
class Engine {
 public:
  Engine(ChannelSet channels, ToolRegistry registry, EngineConfig config = {})
      : channels_(std::move(channels)), registry_(std::move(registry)), config_(std::move(config)) {}

  const ChannelSet& channels() const { return channels_; }
  const ToolRegistry& registry() const { return registry_; }

  // Snapshot plan: one entry per factor x plate value in execution order,
  // with intervals_to_compute = requested minus the sink's current ledger.
  ExecutionPlan plan(const Workflow& workflow, const MetaDataTree& declared_tree,
                     const TimeIntervalSet& requested) const {
    require_valid(workflow);
    ExecutionPlan out{workflow, declared_tree, requested, {}};
    hydrate_tree(workflow, out.tree);
    for (std::size_t fi : topological_order(workflow)) {
      for (auto& entry : derive_entries(workflow, fi, out.tree, requested))
        out.entries.push_back(std::move(entry));
    }
    log(Value{{"event", "plan"},
              {"workflow", workflow.workflow_id},
              {"requested", streamflow::to_json(requested)},
              {"entries", out.entries.size()}});
    return out;
  }

  // Runs a plan. Entries are re-derived per factor against current ledgers
  // and the current meta-data tree, so plans stale with respect to either
  // are re-planned internally, and plate values discovered by upstream
  // multi-output factors in this very run are picked up downstream.
  ExecutionReport execute(const ExecutionPlan& plan) {
    ExecutionReport report;
    MetaDataTree tree = plan.tree;
    FailureSet failures;
    for (std::size_t fi : topological_order(plan.workflow)) {
      if (stopped()) break;
      auto entries = derive_entries(plan.workflow, fi, tree, plan.requested);
      const Factor& factor = plan.workflow.factors[fi];
      const bool parallel = config_.parallel_plate_values &&
                            factor.kind != FactorKind::multi_output && entries.size() > 1;
      if (parallel) {
        std::vector<std::future<ReportEntry>> futures;
        futures.reserve(entries.size());
        for (auto& entry : entries)
          futures.push_back(std::async(std::launch::async, [&, entry]() {
            return run_entry(plan.workflow, entry, tree, failures);
          }));
        for (auto& future : futures) finish_entry(report, failures, plan.workflow, future.get());
      } else {
        for (auto& entry : entries) {
          if (stopped()) break;
          finish_entry(report, failures, plan.workflow,
                       run_entry(plan.workflow, entry, tree, failures));
        }
      }
    }
    return report;
  }

  ExecutionReport execute(const Workflow& workflow, const MetaDataTree& declared_tree,
                          const TimeIntervalSet& requested) {
    return execute(plan(workflow, declared_tree, requested));
  }

  // Continuous mode: each iteration requests everything from the workflow's
  // resume point up to now minus the watermark lag, which the planner
  // reduces to exactly the uncovered work. Failed entries therefore retry on
  // the next iteration until the retry limit quarantines them. Data older
  // than the watermark at first sight is never requested, i.e. dropped.
  void run_online(std::vector<std::pair<Workflow, MetaDataTree>> workflows,
                  const OnlineConfig& online, const std::atomic<bool>& stop) {
    std::vector<Timestamp> window_low(workflows.size());
    for (std::size_t i = 0; i < workflows.size(); ++i) {
      require_valid(workflows[i].first);
      const auto resume = resume_point(workflows[i].first);
      window_low[i] = resume ? *resume : now() - online.watermark_lag;
      log(Value{{"event", "online_start"},
                {"workflow", workflows[i].first.workflow_id},
                {"window_low", format_timestamp(window_low[i])},
                {"resumed", resume.has_value()}});
    }
    while (!stop.load()) {
      const Timestamp iteration_start = now();
      for (std::size_t i = 0; i < workflows.size() && !stop.load(); ++i) {
        const Timestamp high = now() - online.watermark_lag;
        if (!(window_low[i] < high)) continue;
        const TimeIntervalSet requested{TimeInterval(window_low[i], high)};
        try {
          run_iteration(workflows[i].first, workflows[i].second, requested);
        } catch (const Error& e) {
          log(Value{{"event", "failure"},
                    {"workflow", workflows[i].first.workflow_id},
                    {"error", e.what()}});
        }
      }
      sleep_until(iteration_start + online.poll_period, stop);
    }
  }

  static Timestamp now() {
    return Timestamp::from_unix_millis(
        std::chrono::duration_cast<std::chrono::milliseconds>(
            std::chrono::system_clock::now().time_since_epoch())
            .count());
  }

 private:
  // (node, assignment) pairs whose computation failed this run; a dependent
  // entry is skipped when one of its sources extends a failed assignment.
  using FailureSet = std::vector<std::pair<std::string, MetaData>>;

  void require_valid(const Workflow& workflow) const {
    const auto violations = validate(workflow, registry_);
    if (violations.empty()) {
      for (const auto& node : workflow.nodes)
        if (!channels_.contains(node.channel))
          throw Error(ErrorCode::unknown_channel,
                      node.channel + " (node '" + node.node_id + "')");
      return;
    }
    for (const auto& violation : violations)
      if (violation.code == "CycleDetected")
        throw Error(ErrorCode::cycle_detected, violation.detail);
    throw Error(ErrorCode::invalid_workflow,
                violations.front().code + " on " + violations.front().subject + ": " +
                    violations.front().detail);
  }

  bool stopped() const { return config_.stop && config_.stop->load(); }

  void log(const Value& event) const {
    if (config_.log_sink) config_.log_sink(event);
  }

  static std::string marker_name(const std::string& sink_node) { return sink_node + "__cover"; }

  // Re-populates runtime-discovered plate identifiers from the streams that
  // multi-output factors have already materialized, so a restarted engine
  // resumes with the same plate expansion it had before.
  void hydrate_tree(const Workflow& workflow, MetaDataTree& tree) const {
    const PlateMap plates = plate_map(workflow.plates);
    for (const auto& plate : workflow.plates) tree.declare_tag(plate.meta_data_key);
    for (const auto& factor : workflow.factors) {
      if (factor.kind != FactorKind::multi_output) continue;
      const Node* sink = workflow.find_node(factor.sink);
      const auto chain = plate_key_chain(*sink->plate_id, plates);
      Channel& channel = channels_.get(sink->channel);
      for (const auto& record : channel.list_streams()) {
        if (record.id.name() != factor.sink) continue;
        const auto& pairs = record.id.meta_data().pairs();
        if (pairs.size() != chain.size()) continue;
        std::size_t node = MetaDataTree::kRoot;
        bool matches = true;
        for (const auto& key : chain) {
          const auto value = record.id.meta_data().find(key);
          if (!value) { matches = false; break; }
          if (&key == &chain.back()) break;  // leaf inserted below
          const auto next = tree.find(node, key, *value);
          node = next ? *next : tree.insert(node, key, *value);
        }
        if (matches) tree.insert(node, chain.back(), *record.id.meta_data().find(chain.back()));
      }
    }
  }

  std::vector<PlanEntry> derive_entries(const Workflow& workflow, std::size_t factor_index,
                                        const MetaDataTree& tree,
                                        const TimeIntervalSet& requested) const {
    const Factor& factor = workflow.factors[factor_index];
    const PlateMap plates = plate_map(workflow.plates);
    const Node* sink_node = workflow.find_node(factor.sink);
    Channel& channel = channels_.get(sink_node->channel);
    const ToolInvocation invocation =
        registry_.make_invocation(factor.tool.name, factor.tool.version_req, factor.tool.parameters);

    // Multi-output factors iterate the source's plate; everything else
    // iterates the sink's.
    const Node* iteration_node =
        factor.kind == FactorKind::multi_output ? workflow.find_node(factor.sources[0]) : sink_node;
    std::vector<PlateValue> values;
    if (iteration_node->plate_id)
      values = expand(plates.at(*iteration_node->plate_id), plates, tree);
    else
      values = {PlateValue{}};

    std::vector<PlanEntry> entries;
    entries.reserve(values.size());
    for (const auto& value : values) {
      PlanEntry entry;
      entry.factor_index = factor_index;
      entry.plate_value = value;
      entry.sink_channel = sink_node->channel;
      entry.sink = factor.kind == FactorKind::multi_output
                       ? StreamId(marker_name(factor.sink), value.assignment)
                       : StreamId(factor.sink, value.assignment);
      const auto existing = channel.find_stream(entry.sink);
      entry.intervals_to_compute = existing
          ? set_difference(requested, existing->calculated_intervals)
          : requested;
      entry.served_from_storage = entry.intervals_to_compute.empty();

      const TimeIntervalSet expanded =
          expand_by_lookback(entry.intervals_to_compute, invocation.lookback());
      for (const auto& source_name : factor.sources) {
        const Node* source_node = workflow.find_node(source_name);
        MetaData projected;
        if (source_node->plate_id)
          projected = value.assignment.project(plate_key_chain(*source_node->plate_id, plates));
        entry.source_reads.emplace_back(StreamId(source_name, std::move(projected)), expanded);
      }
      entries.push_back(std::move(entry));
    }
    return entries;
  }

  static TimeIntervalSet expand_by_lookback(const TimeIntervalSet& set, Duration lookback) {
    if (lookback <= Duration::zero()) return set;
    std::vector<TimeInterval> intervals;
    intervals.reserve(set.size());
    for (const auto& interval : set.intervals())
      intervals.emplace_back(interval.start() - lookback, interval.end());
    return TimeIntervalSet::from_intervals(std::move(intervals));
  }

  void finish_entry(ExecutionReport& report, FailureSet& failures, const Workflow& workflow,
                    ReportEntry entry) {
    report.tool_invocations += entry.tool_invocations;
    if (entry.outcome == EntryOutcome::failed) {
      const Factor& factor = workflow.factors[entry.factor_index];
      failures.emplace_back(factor.sink, entry.plate_value.assignment);
      log(Value{{"event", "failure"},
                {"workflow", workflow.workflow_id},
                {"sink", entry.sink.canonical()},
                {"error", entry.error}});
    }
    report.entries.push_back(std::move(entry));
  }

  bool upstream_failed(const Workflow& workflow, const PlanEntry& entry,
                       const FailureSet& failures) const {
    const Factor& factor = workflow.factors[entry.factor_index];
    for (std::size_t s = 0; s < factor.sources.size(); ++s) {
      const auto& source_id = entry.source_reads[s].first;
      for (const auto& [failed_node, failed_assignment] : failures) {
        if (failed_node != source_id.name()) continue;
        if (source_id.meta_data().includes(failed_assignment)) return true;
      }
    }
    return false;
  }

  std::string entry_key(const Workflow& workflow, const PlanEntry& entry) const {
    return workflow.workflow_id + "|" + std::to_string(entry.factor_index) + "|" +
           entry.plate_value.canonical();
  }

  ReportEntry run_entry(const Workflow& workflow, const PlanEntry& entry, MetaDataTree& tree,
                        const FailureSet& failures) {
    const auto started = std::chrono::steady_clock::now();
    const Factor& factor = workflow.factors[entry.factor_index];
    ReportEntry result;
    result.factor_index = entry.factor_index;
    result.tool_name = factor.tool.name;
    result.plate_value = entry.plate_value;
    result.sink = entry.sink;
    result.sink_channel = entry.sink_channel;
    log(Value{{"event", "entry_start"},
              {"workflow", workflow.workflow_id},
              {"sink", entry.sink.canonical()},
              {"tool", factor.tool.name},
              {"intervals", streamflow::to_json(entry.intervals_to_compute)}});

    try {
      auto quarantined = failure_counts_.find(entry_key(workflow, entry));
      if (quarantined != failure_counts_.end() && quarantined->second >= config_.retry_limit)
        throw Error(ErrorCode::upstream_failed,
                    entry.sink.canonical() + " is quarantined after " +
                        std::to_string(quarantined->second) + " failures");
      if (upstream_failed(workflow, entry, failures))
        throw Error(ErrorCode::upstream_failed, "a source of " + entry.sink.canonical() +
                                                    " failed earlier in this run");
      Channel& channel = channels_.get(entry.sink_channel);
      channel.ensure_stream(entry.sink);
      if (entry.intervals_to_compute.empty()) {
        result.outcome = EntryOutcome::served_from_storage;
      } else {
        const ToolInvocation invocation = registry_.make_invocation(
            factor.tool.name, factor.tool.version_req, factor.tool.parameters);
        for (const auto& interval : entry.intervals_to_compute.intervals()) {
          const auto buffers = read_sources(workflow, factor, entry, interval, invocation.lookback());
          std::vector<std::span<const StreamInstance>> spans(buffers.begin(), buffers.end());
          if (factor.kind == FactorKind::multi_output) {
            result.instances_written += run_split_interval(workflow, factor, entry, invocation,
                                                           spans, interval, tree, channel, result);
          } else {
            auto outputs = invocation.execute(spans, interval, entry.plate_value.assignment);
            ++result.tool_invocations;
            drop_already_covered(channel, entry.sink, outputs);
            channel.write(entry.sink, outputs, TimeIntervalSet(interval), invocation.provenance());
            result.instances_written += outputs.size();
          }
          result.intervals_marked = set_union(result.intervals_marked, TimeIntervalSet(interval));
        }
        result.outcome = EntryOutcome::computed;
      }
    } catch (const Error& e) {
      result.outcome = EntryOutcome::failed;
      result.error = e.what();
    } catch (const std::exception& e) {
      result.outcome = EntryOutcome::failed;
      result.error = std::string("unexpected: ") + e.what();
    }

    result.duration_ms = std::chrono::duration<double, std::milli>(
                             std::chrono::steady_clock::now() - started)
                             .count();
    log(Value{{"event", "entry_end"},
              {"workflow", workflow.workflow_id},
              {"sink", entry.sink.canonical()},
              {"outcome", streamflow::to_string(result.outcome)},
              {"instances_written", result.instances_written},
              {"duration_ms", result.duration_ms}});
    return result;
  }

  // Reads each source over the interval plus as much of the lookback prefix
  // as that source has actually computed. The interval itself must be fully
  // covered; missing lookback history is clipped rather than fabricated, so
  // ordered incremental runs see exactly the same data as one-shot runs.
  std::vector<std::vector<StreamInstance>> read_sources(const Workflow& workflow,
                                                        const Factor& factor,
                                                        const PlanEntry& entry,
                                                        const TimeInterval& interval,
                                                        Duration lookback) const {
    std::vector<std::vector<StreamInstance>> buffers;
    buffers.reserve(factor.sources.size());
    for (std::size_t s = 0; s < factor.sources.size(); ++s) {
      const auto& source_id = entry.source_reads[s].first;
      const Node* source_node = workflow.find_node(factor.sources[s]);
      Channel& channel = channels_.get(source_node->channel);
      const auto record = channel.find_stream(source_id);
      if (!record)
        throw Error(ErrorCode::source_not_computed,
                    source_id.canonical() + " does not exist in channel '" +
                        source_node->channel + "'");
      if (!record->calculated_intervals.contains(interval))
        throw Error(ErrorCode::source_not_computed,
                    source_id.canonical() + " missing " +
                        streamflow::to_string(set_difference(TimeIntervalSet(interval),
                                                             record->calculated_intervals)));
      TimeIntervalSet reads{TimeIntervalSet(interval)};
      if (lookback > Duration::zero()) {
        // The lookback prefix, clipped to available history.
        const TimeInterval prefix(interval.start() - lookback, interval.start());
        reads = set_union(reads, set_intersection(TimeIntervalSet(prefix),
                                                  record->calculated_intervals));
      }
      std::vector<StreamInstance> buffer;
      for (const auto& piece : reads.intervals()) {
        auto part = channel.read(source_id, piece);
        buffer.insert(buffer.end(), std::make_move_iterator(part.begin()),
                      std::make_move_iterator(part.end()));
      }
      buffers.push_back(std::move(buffer));
    }
    return buffers;
  }

  // One interval of a multi-output factor: partition outputs, materialize
  // newly discovered sub-streams (backfilled to the marker's coverage so
  // every sub-stream's ledger stays equal to the marker's), advance every
  // known sub-stream, then extend the marker as the commit point.
  std::size_t run_split_interval(const Workflow& workflow, const Factor& factor,
                                 const PlanEntry& entry, const ToolInvocation& invocation,
                                 std::vector<std::span<const StreamInstance>>& spans,
                                 const TimeInterval& interval, MetaDataTree& tree,
                                 Channel& channel, ReportEntry& result) {
    const PlateMap plates = plate_map(workflow.plates);
    const Node* sink_node = workflow.find_node(factor.sink);
    const PlateDefinition& sink_plate = plates.at(*sink_node->plate_id);
    const std::string& output_key = sink_plate.meta_data_key;

    auto outputs = invocation.execute_multi(spans, interval, output_key,
                                            entry.plate_value.assignment);
    ++result.tool_invocations;

    const TimeIntervalSet marker_coverage = channel.get_record(entry.sink).calculated_intervals;

    // Every sub-stream that must advance this interval: the discovered
    // identifiers plus all previously materialized ones under this value.
    std::set<std::string> identifiers;
    for (const auto& [identifier, _] : outputs) identifiers.insert(identifier);
    for (const auto& record : channel.list_streams()) {
      if (record.id.name() != factor.sink) continue;
      const auto& meta = record.id.meta_data();
      if (meta.size() != entry.plate_value.assignment.size() + 1) continue;
      if (!meta.includes(entry.plate_value.assignment)) continue;
      if (const auto identifier = meta.find(output_key)) identifiers.insert(*identifier);
    }

    std::size_t written = 0;
    for (const auto& identifier : identifiers) {
      const StreamId sub_id(factor.sink,
                            entry.plate_value.assignment.merged_with(output_key, identifier));
      insert_assignment(tree, sub_id.meta_data());
      if (!channel.find_stream(sub_id)) {
        channel.create_stream(sub_id);
        if (!marker_coverage.empty()) channel.write(sub_id, {}, marker_coverage);
      }
      auto instances = std::move(outputs[identifier]);
      drop_already_covered(channel, sub_id, instances);
      channel.write(sub_id, instances, TimeIntervalSet(interval), invocation.provenance());
      written += instances.size();
    }
    channel.write(entry.sink, {}, TimeIntervalSet(interval), invocation.provenance());
    return written;
  }

  static void insert_assignment(MetaDataTree& tree, const MetaData& assignment) {
    std::size_t node = MetaDataTree::kRoot;
    for (const auto& [key, value] : assignment.pairs()) node = tree.insert(node, key, value);
  }

  // Safety net for re-execution after a partial failure: determinism means
  // an instance whose timestamp the ledger already covers is the instance
  // already stored, so it is dropped instead of tripping DuplicateTimestamp.
  static void drop_already_covered(Channel& channel, const StreamId& id,
                                   std::vector<StreamInstance>& instances) {
    const auto record = channel.find_stream(id);
    if (!record || record->calculated_intervals.empty()) return;
    std::erase_if(instances, [&](const StreamInstance& instance) {
      return record->calculated_intervals.contains(instance.timestamp);
    });
  }

  void run_iteration(const Workflow& workflow, const MetaDataTree& tree,
                     const TimeIntervalSet& requested) {
    ExecutionPlan iteration_plan = plan(workflow, tree, requested);
    // Quarantine: entries that keep failing stop consuming the loop.
    ExecutionReport report = execute_with_quarantine(iteration_plan);
    log(Value{{"event", "iteration"},
              {"workflow", workflow.workflow_id},
              {"report", report.to_json()}});
  }

  ExecutionReport execute_with_quarantine(const ExecutionPlan& plan_value) {
    ExecutionReport report = execute(plan_value);
    for (const auto& entry : report.entries) {
      if (entry.outcome != EntryOutcome::failed) continue;
      const std::string key = plan_value.workflow.workflow_id + "|" +
                              std::to_string(entry.factor_index) + "|" +
                              entry.plate_value.canonical();
      if (++failure_counts_[key] == config_.retry_limit)
        log(Value{{"event", "quarantine"},
                  {"workflow", plan_value.workflow.workflow_id},
                  {"sink", entry.sink.canonical()},
                  {"failures", failure_counts_[key]}});
    }
    return report;
  }

  // Earliest low-water mark across the workflow's persistent streams: the
  // point from which a restarted online engine must re-request so that no
  // gap can form. Already-covered ranges cost nothing to re-request.
  std::optional<Timestamp> resume_point(const Workflow& workflow) const {
    std::optional<Timestamp> low;
    for (const auto& node : workflow.nodes) {
      Channel& channel = channels_.get(node.channel);
      if (!channel.capabilities().persistent) continue;
      for (const auto& record : channel.list_streams()) {
        if (record.id.name() != node.node_id && record.id.name() != marker_name(node.node_id))
          continue;
        if (record.calculated_intervals.empty()) continue;
        const Timestamp stream_low = record.calculated_intervals.low();
        if (!low || stream_low < *low) low = stream_low;
      }
    }
    return low;
  }

  static void sleep_until(Timestamp deadline, const std::atomic<bool>& stop) {
    while (!stop.load() && now() < deadline) {
      const std::int64_t remaining = (deadline - now()).count_milliseconds();
      std::this_thread::sleep_for(
          std::chrono::milliseconds(std::min<std::int64_t>(std::max<std::int64_t>(remaining, 1), 20)));
    }
  }

  ChannelSet channels_;
  ToolRegistry registry_;
  EngineConfig config_;
  std::map<std::string, std::size_t> failure_counts_;
};

}  // namespace streamflow
