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

#include "streamflow/builtin_tools.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <random>

#include "support/test_util.hpp"

using namespace streamflow;
using namespace streamflow::testing;

namespace {

const ToolRegistry& registry() {
  static const ToolRegistry instance = builtin_tool_registry();
  return instance;
}

ToolInvocation invoke(const std::string& name, const Value& params) {
  return registry().make_invocation(name, "*", params);
}

std::vector<StreamInstance> numeric_series(std::initializer_list<std::pair<std::int64_t, double>> points) {
  std::vector<StreamInstance> out;
  for (const auto& [ms, v] : points) out.push_back(StreamInstance{ts(ms), Value(v)});
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

std::string serialized(const std::vector<StreamInstance>& instances) {
  std::string out;
  for (const auto& instance : instances) out += canonical_instance_line(instance) + "\n";
  return out;
}

}  // namespace

TEST(ClockTool, EmitsRightClosedTicks) {
  const auto clock = invoke("clock", Value{{"stride", "1s"}});
  const auto out = clock.execute({}, iv(0, 5000));
  ASSERT_EQ(out.size(), 5u);
  for (int i = 0; i < 5; ++i) {
    EXPECT_EQ(out[i].timestamp, ts((i + 1) * 1000));
    EXPECT_EQ(out[i].value, Value(format_timestamp(ts((i + 1) * 1000))));
  }
}

TEST(ClockTool, TicksAreEpochAligned) {
  const auto clock = invoke("clock", Value{{"stride", "2s"}});
  const auto out = clock.execute({}, iv(900, 6100));
  ASSERT_EQ(out.size(), 3u);
  EXPECT_EQ(out[0].timestamp, ts(2000));
  EXPECT_EQ(out[2].timestamp, ts(6000));
  EXPECT_THROW(invoke("clock", Value{{"stride", "0s"}}), Error);
}

TEST(SumListTool, SumsPerDocument) {
  std::vector<StreamInstance> docs{
      {ts(1000), Value::array({1.0, 2.0, 3.0})},
      {ts(2000), Value::array()},
      {ts(3000), Value::array({2, 3})},  // integers sum as float
  };
  const auto sum = invoke("sum_list", Value::object());
  const auto out = sum.execute({docs}, iv(0, 5000));
  ASSERT_EQ(out.size(), 3u);
  EXPECT_EQ(out[0].value, Value(6.0));
  EXPECT_EQ(out[1].value, Value(0.0));  // empty-sum convention
  EXPECT_EQ(out[2].value, Value(5.0));
  EXPECT_EQ(out[0].timestamp, ts(1000));
}

TEST(SumListTool, RejectsNonNumericElements) {
  std::vector<StreamInstance> docs{{ts(1000), Value::array({1.0, "x"})}};
  const auto sum = invoke("sum_list", Value::object());
  try {
    sum.execute({docs}, iv(0, 2000));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::malformed_document);
  }
}

TEST(SumListTool, EmptyButCoveredSourceYieldsEmptyOutput) {
  const auto sum = invoke("sum_list", Value::object());
  EXPECT_TRUE(sum.execute({std::vector<StreamInstance>{}}, iv(0, 5000)).empty());
}

TEST(SlidingWindowTool, EmitsBoundaryDocuments) {
  const auto windows = invoke("sliding_window", Value{{"width", "5s"}, {"stride", "5s"}});
  const auto out = windows.execute({}, iv(0, 10'000));
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].timestamp, ts(5000));
  EXPECT_EQ(out[0].value, (Value{{"end", "1970-01-01T00:00:05.000Z"},
                                 {"start", "1970-01-01T00:00:00.000Z"}}));
}

TEST(SlidingApplyTool, MatchesBruteForceOracleOnRandomPoints) {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<std::int64_t> when(1, 100'000);
  std::uniform_int_distribution<int> magnitude(-100, 100);
  std::map<Timestamp, double> points;
  while (points.size() < 100)
    points.emplace(ts(when(rng)), 0.25 * magnitude(rng));
  std::vector<StreamInstance> source;
  for (const auto& [t, v] : points) source.push_back(StreamInstance{t, Value(v)});

  const auto interval = iv(0, 100'000);
  for (const std::string aggregate : {"mean", "max", "min", "count", "sum"}) {
    const auto apply = invoke("sliding_apply", Value{{"width", "5s"},
                                                     {"stride", "1s"},
                                                     {"aggregate", aggregate}});
    const auto out = apply.execute({source}, interval);
    ASSERT_EQ(out.size(), 100u);

    // Brute-force oracle recomputing every window from the raw list.
    for (const auto& produced : out) {
      const Timestamp t = produced.timestamp;
      std::vector<double> window;
      for (const auto& [pt, pv] : points)
        if (t - Duration::seconds(5) < pt && pt <= t) window.push_back(pv);
      Value expected;
      if (window.empty()) {
        expected = nullptr;
      } else if (aggregate == "count") {
        expected = static_cast<std::int64_t>(window.size());
      } else if (aggregate == "mean") {
        double sum = 0;
        for (double v : window) sum += v;
        expected = sum / static_cast<double>(window.size());
      } else if (aggregate == "max") {
        expected = *std::max_element(window.begin(), window.end());
      } else if (aggregate == "min") {
        expected = *std::min_element(window.begin(), window.end());
      } else {
        double sum = 0;
        for (double v : window) sum += v;
        expected = sum;
      }
      ASSERT_EQ(canonical_json(produced.value), canonical_json(expected))
          << aggregate << " at " << format_timestamp(t);
    }
  }
}

TEST(SlidingApplyTool, EmptyWindowEmitsNullAndNullsAreSkipped) {
  const auto apply = invoke("sliding_apply", Value{{"width", "2s"}, {"aggregate", "mean"}});
  std::vector<StreamInstance> source{{ts(1500), Value(4.0)}, {ts(1800), Value(nullptr)}};
  const auto out = apply.execute({source}, iv(0, 6000));
  ASSERT_EQ(out.size(), 3u);  // stride defaults to width: ticks at 2s, 4s, 6s
  EXPECT_EQ(out[0].value, Value(4.0));
  EXPECT_EQ(out[1].value, Value(nullptr));
  EXPECT_EQ(out[2].value, Value(nullptr));

  const auto count = invoke("sliding_apply", Value{{"width", "2s"}, {"aggregate", "count"}});
  const auto counted = count.execute({source}, iv(0, 6000));
  EXPECT_EQ(counted[0].value, Value(std::int64_t{2}));  // count counts every document
  EXPECT_EQ(counted[1].value, Value(nullptr));          // no documents at all
}

TEST(SlidingApplyTool, UsesLookbackData) {
  const auto apply = invoke("sliding_apply", Value{{"width", "5s"}, {"aggregate", "sum"}});
  // Data lies before the interval but inside the first window's lookback.
  std::vector<StreamInstance> source{{ts(8000), Value(1.0)}, {ts(9000), Value(2.0)}};
  const auto out = apply.execute({source}, iv(10'000, 15'000));
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].timestamp, ts(15'000));
  EXPECT_EQ(out[0].value, Value(nullptr));  // (10s,15s] window sees nothing

  const auto wide = apply.execute({source}, iv(9000, 15'000));
  // Tick at 10s: window (5s,10s] catches both lookback points.
  ASSERT_EQ(wide.size(), 2u);
  EXPECT_EQ(wide[0].timestamp, ts(10'000));
  EXPECT_EQ(wide[0].value, Value(3.0));
  EXPECT_EQ(apply.lookback(), Duration::seconds(5));
}

TEST(SlidingApplyTool, RejectsBadAggregate) {
  EXPECT_THROW(invoke("sliding_apply", Value{{"width", "5s"}, {"aggregate", "median"}}), Error);
}

TEST(ComponentTool, ProjectsField) {
  std::vector<StreamInstance> docs{
      {ts(1000), Value{{"angle", 0.5}, {"uid", "a"}}},
      {ts(2000), Value{{"uid", "b"}}},
  };
  const auto component = invoke("component", Value{{"field", "angle"}});
  const auto out = component.execute({docs}, iv(0, 3000));
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].value, Value(0.5));
  EXPECT_EQ(out[1].value, Value(nullptr));  // absent field projects to null

  std::vector<StreamInstance> bad{{ts(1000), Value(3)}};
  EXPECT_THROW(component.execute({bad}, iv(0, 2000)), Error);
}

TEST(SplitterTool, PartitionsByIdentifier) {
  std::vector<StreamInstance> docs{
      {ts(1000), Value{{"uid", "a"}, {"angle", 0.5}}},
      {ts(2000), Value{{"uid", "b"}, {"angle", 0.25}}},
      {ts(3000), Value{{"uid", "a"}, {"angle", 0.75}}},
  };
  const auto splitter = invoke("splitter", Value{{"key_field", "uid"}});
  const auto out = splitter.execute_multi({docs}, iv(0, 5000), "wearable");
  ASSERT_EQ(out.size(), 2u);
  ASSERT_EQ(out.at("a").size(), 2u);
  ASSERT_EQ(out.at("b").size(), 1u);
  EXPECT_EQ(out.at("a")[1].value.at("angle"), Value(0.75));
}

TEST(SplitterTool, SingleIdentifierAndMissingKey) {
  std::vector<StreamInstance> same{{ts(1000), Value{{"uid", "a"}}}, {ts(2000), Value{{"uid", "a"}}}};
  const auto splitter = invoke("splitter", Value{{"key_field", "uid"}});
  EXPECT_EQ(splitter.execute_multi({same}, iv(0, 3000), "w").size(), 1u);

  std::vector<StreamInstance> missing{{ts(1000), Value{{"other", 1}}}};
  try {
    splitter.execute_multi({missing}, iv(0, 2000), "w");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::split_key_missing);
  }
}

TEST(SplitterTool, OutputKeyParameterMustAgree) {
  const auto splitter = invoke("splitter", Value{{"key_field", "uid"}, {"output_key", "wearable"}});
  std::vector<StreamInstance> docs{{ts(1000), Value{{"uid", "a"}}}};
  EXPECT_NO_THROW(splitter.execute_multi({docs}, iv(0, 2000), "wearable"));
  EXPECT_THROW(splitter.execute_multi({docs}, iv(0, 2000), "house"), Error);
}

TEST(CsvImportTool, ImportsRowsInsideInterval) {
  TempDir dir;
  write_file(dir.path() / "data.csv",
             "time,a,b,c\n"
             "1970-01-01T00:00:01Z,1.25,2.5,0.75\n"
             "1970-01-01T00:00:02Z,1,2,3\n"
             "1970-01-01T00:00:09Z,9,9,9\n");
  const auto csv = invoke("csv_import", Value{{"path", (dir.path() / "data.csv").string()},
                                              {"time_column", "time"},
                                              {"time_format", "%Y-%m-%dT%H:%M:%S%z"}});
  const auto out = csv.execute({}, iv(0, 5000));
  ASSERT_EQ(out.size(), 2u);  // the 9s row is outside
  EXPECT_EQ(out[0].timestamp, ts(1000));
  EXPECT_EQ(canonical_json(out[0].value), "[1.25,2.5,0.75]");
  EXPECT_EQ(canonical_json(out[1].value), "[1,2,3]");  // integers stay integers
}

TEST(CsvImportTool, MapEmissionQuotingAndEmptyCells) {
  TempDir dir;
  write_file(dir.path() / "data.csv",
             "time,uid,note,angle\n"
             "1970-01-01 00:00:01,a,\"hello, \"\"world\"\"\",0.5\n"
             "1970-01-01 00:00:02,b,,0.25\n");
  const auto csv = invoke("csv_import", Value{{"path", (dir.path() / "data.csv").string()},
                                              {"time_column", "time"},
                                              {"time_format", "%Y-%m-%d %H:%M:%S"},
                                              {"emit", "map"}});
  const auto out = csv.execute({}, iv(0, 5000));
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(canonical_json(out[0].value), R"({"angle":0.5,"note":"hello, \"world\"","uid":"a"})");
  EXPECT_EQ(canonical_json(out[1].value), R"({"angle":0.25,"uid":"b"})");  // empty cell omitted
}

TEST(CsvImportTool, MalformedRowCitesRecordNumber) {
  TempDir dir;
  write_file(dir.path() / "data.csv",
             "time,v\n"
             "1970-01-01T00:00:01Z,1\n"
             "not-a-time,2\n");
  const auto csv = invoke("csv_import", Value{{"path", (dir.path() / "data.csv").string()},
                                              {"time_column", "time"},
                                              {"time_format", "%Y-%m-%dT%H:%M:%S%z"}});
  try {
    csv.execute({}, iv(0, 5000));
    FAIL();
  } catch (const ParseFailureError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(CsvImportTool, MissingFileAndDuplicateTimestamps) {
  TempDir dir;
  const auto missing = invoke("csv_import", Value{{"path", (dir.path() / "nope.csv").string()},
                                                  {"time_column", "t"},
                                                  {"time_format", "%Y"}});
  try {
    missing.execute({}, iv(0, 1000));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::external_resource_unavailable);
  }

  write_file(dir.path() / "dup.csv",
             "time,v\n"
             "1970-01-01T00:00:01Z,1\n"
             "1970-01-01T00:00:01Z,2\n");
  const auto dup = invoke("csv_import", Value{{"path", (dir.path() / "dup.csv").string()},
                                              {"time_column", "time"},
                                              {"time_format", "%Y-%m-%dT%H:%M:%S%z"}});
  EXPECT_THROW(dup.execute({}, iv(0, 5000)), ParseFailureError);
}

TEST(CsvImportTool, PathPlaceholdersFillFromPlate) {
  TempDir dir;
  write_file(dir.path() / "house_2.csv", "time,v\n1970-01-01T00:00:01Z,7\n");
  const auto csv = invoke("csv_import", Value{{"path", (dir.path() / "house_{house}.csv").string()},
                                              {"time_column", "time"},
                                              {"time_format", "%Y-%m-%dT%H:%M:%S%z"}});
  const auto out = csv.execute({}, iv(0, 2000), MetaData::from_pairs({{"house", "2"}}));
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(canonical_json(out[0].value), "[7]");
}

TEST(ToolInvocation, ParameterValidation) {
  EXPECT_THROW(invoke("clock", Value{{"stride", "1s"}, {"bogus", 1}}), Error);
  EXPECT_THROW(invoke("clock", Value::object()), Error);  // missing required
  EXPECT_THROW(invoke("clock", Value{{"stride", true}}), Error);
  EXPECT_THROW(invoke("sliding_apply", Value{{"width", "5s"}, {"aggregate", 3}}), Error);
  try {
    invoke("clock", Value::object());
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::parameter_invalid);
  }
}

TEST(ToolInvocation, ArityIsEnforced) {
  const auto sum = invoke("sum_list", Value::object());
  try {
    sum.execute({}, iv(0, 1000));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::arity_mismatch);
  }
  const auto clock = invoke("clock", Value{{"stride", "1s"}});
  std::vector<StreamInstance> dummy;
  EXPECT_THROW(clock.execute({dummy}, iv(0, 1000)), Error);
}

TEST(ToolInvocation, ProvenanceDigestTracksParameters) {
  const auto a = invoke("clock", Value{{"stride", "1s"}});
  const auto b = invoke("clock", Value{{"stride", "2s"}});
  EXPECT_EQ(a.provenance().tool_name, "clock");
  EXPECT_EQ(a.provenance().tool_version, "1.0.0");
  EXPECT_NE(a.parameter_digest(), b.parameter_digest());
  EXPECT_EQ(a.parameter_digest(), invoke("clock", Value{{"stride", "1s"}}).parameter_digest());
}

// Interval containment: every output timestamp t satisfies start < t <= end,
// for every built-in, on randomized inputs.
TEST(ToolProperties, OutputsStayInsideTheInterval) {
  std::mt19937_64 rng(23);
  TempDir dir;
  write_file(dir.path() / "d.csv", "time,v\n1970-01-01T00:00:03Z,1\n1970-01-01T00:00:07Z,2\n");
  for (int round = 0; round < 50; ++round) {
    const std::int64_t a = std::uniform_int_distribution<std::int64_t>(0, 8000)(rng);
    const std::int64_t b = a + std::uniform_int_distribution<std::int64_t>(500, 6000)(rng);
    const auto interval = iv(a, b);
    std::vector<StreamInstance> source;
    for (std::int64_t t = 500; t <= 14'000; t += 700)
      source.push_back(StreamInstance{ts(t), Value(0.5)});

    std::vector<std::vector<StreamInstance>> outputs;
    outputs.push_back(invoke("clock", Value{{"stride", "700ms"}}).execute({}, interval));
    outputs.push_back(invoke("sliding_window", Value{{"width", "1s"}, {"stride", "900ms"}})
                          .execute({}, interval));
    outputs.push_back(invoke("sliding_apply", Value{{"width", "2s"}, {"aggregate", "mean"}})
                          .execute({source}, interval));
    outputs.push_back(invoke("csv_import", Value{{"path", (dir.path() / "d.csv").string()},
                                                 {"time_column", "time"},
                                                 {"time_format", "%Y-%m-%dT%H:%M:%S%z"}})
                          .execute({}, interval));
    std::vector<StreamInstance> lists;
    for (const auto& s : source) lists.push_back(StreamInstance{s.timestamp, Value::array({1, 2})});
    outputs.push_back(invoke("sum_list", Value::object()).execute({lists}, interval));
    for (const auto& out : outputs) {
      for (std::size_t i = 0; i < out.size(); ++i) {
        ASSERT_TRUE(interval.contains(out[i].timestamp));
        if (i > 0) ASSERT_LT(out[i - 1].timestamp, out[i].timestamp);
      }
    }
  }
}

// Composability: executing over (a,b] then (b,c] and concatenating equals
// executing over (a,c], given lookback-expanded source availability.
TEST(ToolProperties, IncrementalEquivalence) {
  std::mt19937_64 rng(29);
  std::vector<StreamInstance> source;
  for (std::int64_t t = 250; t <= 30'000; t += 250)
    source.push_back(StreamInstance{ts(t), Value(0.25 * ((t / 250) % 7))});

  for (int round = 0; round < 30; ++round) {
    const std::int64_t a = std::uniform_int_distribution<std::int64_t>(0, 5000)(rng);
    const std::int64_t c = a + std::uniform_int_distribution<std::int64_t>(4000, 20'000)(rng);
    const std::int64_t b = std::uniform_int_distribution<std::int64_t>(a + 1000, c - 1000)(rng);

    std::vector<StreamInstance> objects;
    for (const auto& s : source)
      objects.push_back(StreamInstance{s.timestamp, Value{{"x", s.value}, {"uid", "a"}}});

    const auto check = [&](const ToolInvocation& tool,
                           const std::vector<StreamInstance>* with_source) {
      std::vector<std::span<const StreamInstance>> sources;
      if (with_source) sources.push_back(*with_source);
      const auto whole = tool.execute(sources, iv(a, c));
      auto first = tool.execute(sources, iv(a, b));
      const auto second = tool.execute(sources, iv(b, c));
      first.insert(first.end(), second.begin(), second.end());
      ASSERT_EQ(serialized(first), serialized(whole));
    };
    check(invoke("clock", Value{{"stride", "1s"}}), nullptr);
    check(invoke("sliding_window", Value{{"width", "2s"}, {"stride", "500ms"}}), nullptr);
    check(invoke("sliding_apply", Value{{"width", "3s"}, {"aggregate", "mean"}}), &source);
    check(invoke("sliding_apply", Value{{"width", "2s"}, {"stride", "750ms"}, {"aggregate", "count"}}),
          &source);
    check(invoke("component", Value{{"field", "x"}}), &objects);

    // Same property for the multi-output splitter, keyed per identifier.
    const auto splitter = invoke("splitter", Value{{"key_field", "uid"}});
    const auto whole = splitter.execute_multi({objects}, iv(a, c), "w");
    auto first = splitter.execute_multi({objects}, iv(a, b), "w");
    const auto second = splitter.execute_multi({objects}, iv(b, c), "w");
    for (const auto& [key, instances] : second) {
      auto& bucket = first[key];
      bucket.insert(bucket.end(), instances.begin(), instances.end());
    }
    ASSERT_EQ(first.size(), whole.size());
    for (const auto& [key, instances] : whole) ASSERT_EQ(serialized(first[key]), serialized(instances));
  }
}

// Determinism: same inputs, byte-identical serialized outputs.
TEST(ToolProperties, ExecutionIsDeterministic) {
  std::vector<StreamInstance> source;
  for (std::int64_t t = 500; t <= 10'000; t += 500)
    source.push_back(StreamInstance{ts(t), Value(0.125 * (t % 13))});
  const auto apply = invoke("sliding_apply", Value{{"width", "2s"}, {"aggregate", "mean"}});
  EXPECT_EQ(serialized(apply.execute({source}, iv(0, 10'000))),
            serialized(apply.execute({source}, iv(0, 10'000))));
  const auto clock = invoke("clock", Value{{"stride", "333ms"}});
  EXPECT_EQ(serialized(clock.execute({}, iv(0, 9999))), serialized(clock.execute({}, iv(0, 9999))));
}
