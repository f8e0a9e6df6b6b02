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

#include "streamflow/value.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace streamflow;

namespace {

// Random document generator to nesting depth 6, covering every branch of the
// value model.
Value random_value(std::mt19937_64& rng, int depth) {
  std::uniform_int_distribution<int> pick(0, depth > 0 ? 6 : 4);
  switch (pick(rng)) {
    case 0: return nullptr;
    case 1: return std::uniform_int_distribution<int>(0, 1)(rng) == 1;
    case 2: {
      static const std::int64_t interesting[] = {0, 1, -1, 42, -9'007'199'254'740'993LL,
                                                 INT64_MAX, INT64_MIN};
      std::uniform_int_distribution<std::size_t> i(0, std::size(interesting) - 1);
      return interesting[i(rng)];
    }
    case 3: {
      std::uniform_real_distribution<double> d(-1e6, 1e6);
      const double x = d(rng);
      return std::uniform_int_distribution<int>(0, 3)(rng) == 0 ? 0.5 : x;
    }
    case 4: {
      std::uniform_int_distribution<int> len(0, 8);
      std::string s;
      for (int i = len(rng); i > 0; --i)
        s += static_cast<char>('a' + std::uniform_int_distribution<int>(0, 25)(rng));
      if (std::uniform_int_distribution<int>(0, 4)(rng) == 0) s += "\" \\ \n \t é";
      return s;
    }
    case 5: {
      Value arr = Value::array();
      std::uniform_int_distribution<int> len(0, 4);
      for (int i = len(rng); i > 0; --i) arr.push_back(random_value(rng, depth - 1));
      return arr;
    }
    default: {
      Value obj = Value::object();
      std::uniform_int_distribution<int> len(0, 4);
      for (int i = len(rng); i > 0; --i) {
        std::string key;
        for (int k = std::uniform_int_distribution<int>(1, 6)(rng); k > 0; --k)
          key += static_cast<char>('a' + std::uniform_int_distribution<int>(0, 25)(rng));
        obj[key] = random_value(rng, depth - 1);
      }
      return obj;
    }
  }
}

}  // namespace

TEST(Value, CanonicalFormIsCompactWithSortedKeys) {
  const Value v{{"zebra", 1}, {"apple", Value{{"y", 2}, {"x", 1}}}, {"mango", Value::array({1, 2})}};
  EXPECT_EQ(canonical_json(v), R"({"apple":{"x":1,"y":2},"mango":[1,2],"zebra":1})");
}

TEST(Value, IntegerAndFloatKeepTheirTypesThroughSerialization) {
  EXPECT_EQ(canonical_json(Value(1)), "1");
  EXPECT_EQ(canonical_json(Value(1.0)), "1.0");
  EXPECT_EQ(canonical_json(Value(6.6000000000000005)), "6.6000000000000005");
  EXPECT_TRUE(parse_value("1.0").is_number_float());
  EXPECT_TRUE(parse_value("1").is_number_integer() || parse_value("1").is_number_unsigned());
}

TEST(Value, RoundTripRandomDocumentsDepthSix) {
  std::mt19937_64 rng(2024);
  for (int round = 0; round < 2000; ++round) {
    const Value v = random_value(rng, 6);
    const std::string text = canonical_json(v);
    const Value back = parse_value(text);
    ASSERT_EQ(back, v) << text;
    ASSERT_EQ(canonical_json(back), text);
  }
}

TEST(Value, ModelRejectsOutOfRangeAndNonFinite) {
  EXPECT_THROW(check_value_model(Value(std::numeric_limits<double>::infinity())), Error);
  EXPECT_THROW(check_value_model(Value(std::nan(""))), Error);
  EXPECT_THROW(parse_value("18446744073709551615"), Error);  // > int64 max
  EXPECT_NO_THROW(parse_value("9223372036854775807"));
  EXPECT_THROW(check_value_model(Value::binary({1, 2, 3})), Error);
  Value nested = Value{{"a", Value::array({Value(std::numeric_limits<double>::infinity())})}};
  EXPECT_THROW(check_value_model(nested), Error);
}

TEST(Value, ParseRejectsMalformedJson) {
  EXPECT_THROW(parse_value("{"), Error);
  EXPECT_THROW(parse_value(""), Error);
  EXPECT_THROW(parse_value("[1, 2,"), Error);
}

TEST(Value, StableDigestIsDeterministic) {
  const auto d1 = stable_digest(R"({"width":"5s"})");
  const auto d2 = stable_digest(R"({"width":"5s"})");
  EXPECT_EQ(d1, d2);
  EXPECT_EQ(d1.size(), 16u);
  EXPECT_NE(d1, stable_digest(R"({"width":"6s"})"));
  // Pinned so any change to the digest function is caught loudly.
  EXPECT_EQ(stable_digest(""), "cbf29ce484222325");
}
