#include <gtest/gtest.h>

#include <json.hpp>
#include <sstream>

#include "freeaccess/bench.hpp"

using namespace freeaccess;

TEST(Mix, ParseTable) {
  EXPECT_EQ(parse_mix("50:25:25"), (Mix{50, 25, 25}));
  EXPECT_EQ(parse_mix("100:0:0"), (Mix{100, 0, 0}));
  EXPECT_FALSE(parse_mix("50:25:24"));
  EXPECT_FALSE(parse_mix("50:25"));
  EXPECT_FALSE(parse_mix("50:25:25:0"));
  EXPECT_FALSE(parse_mix("a:b:c"));
  EXPECT_FALSE(parse_mix(""));
  EXPECT_EQ(to_string(Mix{80, 10, 10}), "80:10:10");
}

TEST(OpGenerator, SameSeedSameSequence) {
  OpGenerator a(7, 0, 3, 1000, Mix{}), b(7, 0, 3, 1000, Mix{}), c(7, 0, 4, 1000, Mix{});
  bool differs = false;
  for (int i = 0; i < 1000; ++i) {
    auto x = a.next(), y = b.next(), z = c.next();
    EXPECT_EQ(x, y);
    differs = differs || x != z;
  }
  EXPECT_TRUE(differs);
}

TEST(OpGenerator, MixFidelity) {
  OpGenerator g(1, 0, 0, 256, Mix{60, 30, 10});
  std::size_t n = 200000, counts[3] = {0, 0, 0};
  for (std::size_t i = 0; i < n; ++i) {
    auto [op, key] = g.next();
    ASSERT_GE(key, 0);
    ASSERT_LT(key, 256);
    ++counts[static_cast<int>(op)];
  }
  EXPECT_NEAR(100.0 * counts[0] / n, 60, 1);
  EXPECT_NEAR(100.0 * counts[1] / n, 30, 1);
  EXPECT_NEAR(100.0 * counts[2] / n, 10, 1);
}

TEST(Prefill, HalfTheRange) {
  auto k = prefill_keys(10000, 1);
  EXPECT_EQ(k.size(), 5000u);
  EXPECT_EQ(std::set<std::int64_t>(k.begin(), k.end()).size(), 5000u);
  EXPECT_EQ(prefill_keys(256, 3).size(), 128u);
  EXPECT_EQ(prefill_keys(10000, 1), k);
}

TEST(Ci95, StudentT) {
  EXPECT_EQ(ci95_half_width({5.0}), 0.0);
  // n=2, sd=sqrt(2), t(0.975,1)=12.7062 -> 12.7062 * sqrt(2)/sqrt(2)
  EXPECT_NEAR(ci95_half_width({1.0, 3.0}), 12.7062, 1e-3);
  EXPECT_NEAR(ci95_half_width({1, 2, 3, 4, 5}), 2.776445 * std::sqrt(2.5) / std::sqrt(5.0), 1e-4);
}

namespace {

BenchConfig quick(Scheme s, std::int64_t range, Structure st = Structure::kList) {
  BenchConfig c;
  c.scheme = s;
  c.range = range;
  c.structure = st;
  c.duration_secs = 0.05;
  c.repeats = 2;
  c.buckets = 1000;
  return c;
}

}  // namespace

TEST(RunBenchmark, SteadyStateSizes) {
  for (auto [range, size] : {std::pair{10000, 5000}, std::pair{256, 128}}) {
    auto r = run_benchmark(quick(Scheme::kFa, range));
    EXPECT_EQ(r.prefilled, static_cast<std::size_t>(size));
    EXPECT_GT(r.mean, 0);
    EXPECT_TRUE(r.diagnostic.empty());
  }
  auto h = run_benchmark(quick(Scheme::kFa, 2000, Structure::kHash));
  EXPECT_EQ(h.prefilled, 1000u);  // load factor 1 on 1000 buckets
}

TEST(Report, RatioCsvJson) {
  std::vector<BenchResult> rs = {run_benchmark(quick(Scheme::kNr, 256)), run_benchmark(quick(Scheme::kFa, 256))};
  attach_nr_ratios(rs);
  ASSERT_TRUE(rs[1].ratio_nr);
  EXPECT_DOUBLE_EQ(*rs[1].ratio_nr, rs[1].mean / rs[0].mean);

  std::string csv = report(rs, "csv");
  std::istringstream in(csv);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_EQ(lines[0], kCsvHeader);

  auto j = nlohmann::json::parse(report(rs, "json"));
  ASSERT_EQ(j.size(), 2u);
  EXPECT_EQ(j[1]["scheme"], "fa");
  EXPECT_DOUBLE_EQ(j[1]["mean_ops"].get<double>(), rs[1].mean);
  EXPECT_DOUBLE_EQ(j[1]["ratio_nr"].get<double>(), *rs[1].ratio_nr);
  EXPECT_EQ(j[0]["range"], 256);

  EXPECT_NE(report(rs, "table").find("ratio_nr"), std::string::npos);
  EXPECT_THROW(report(rs, "xml"), std::invalid_argument);
}

TEST(BenchConfig, Validation) {
  BenchConfig c;
  c.threads = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c.threads = 1;
  c.scheme = Scheme::kEbr;
  c.variant = ListVariant::kHhs;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}
