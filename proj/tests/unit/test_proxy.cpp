#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "cfaudit/common/error.hpp"
#include "cfaudit/fairmetrics/flips.hpp"
#include "cfaudit/proxy/proxy.hpp"
#include "oracles.hpp"
#include "testing.hpp"

using namespace cfaudit;
using namespace cfaudit::proxy;

namespace {

// f_s: privileged when job is manager, otherwise weak on income.
double fs_score(std::span<const double> e) { return e[3] > 0.5 ? 0.9 : 0.1 + 0.001 * e[0]; }

}  // namespace

TEST(Proxy, DeltaShiftSign) {
  EXPECT_DOUBLE_EQ(delta_shift(0.1, 0.7), 0.6);
  EXPECT_DOUBLE_EQ(delta_shift(0.7, 0.3), -0.4);
  const auto schema = testing_support::mixed_schema();
  const auto fs = testing_support::rule_probe(schema, fs_score);
  const std::vector<double> x{100, 30, 0, 0}, c{100, 30, 1, 0};
  EXPECT_NEAR(delta_shift(x, c, fs), 0.9 - 0.2, 1e-15);
}

TEST(Proxy, CorrelationsMatchOracle) {
  const auto schema = testing_support::mixed_schema();
  data::Encoder enc(schema);
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g(0, 1);
  Matrix eps(50, enc.width(), 0.0);
  std::vector<double> delta(50);
  for (std::size_t i = 0; i < 50; ++i) {
    eps(i, 0) = g(rng);
    eps(i, 1) = double(rng() % 5);
    eps(i, 5) = g(rng);
    delta[i] = 0.5 * eps(i, 0) + g(rng);
  }
  const auto r = proxy_correlations(eps, delta, enc.column_map());
  ASSERT_EQ(r.entries.size(), enc.width());
  for (std::size_t c : {0u, 1u, 5u}) {
    EXPECT_NEAR(*r.entries[c].rho, *oracle::pearson(eps.column(c), delta), 1e-12);
  }
  EXPECT_FALSE(r.entries[2].rho.defined());  // constant column
  ASSERT_EQ(r.features.size(), 4u);
  EXPECT_EQ(r.features[2].feature, "job");
  EXPECT_FALSE(r.features[2].rho.defined());
}

TEST(Proxy, AggregateTakesStrongestLevel) {
  data::ColumnMap cols{{0, "job", data::FeatureKind::categorical, "a"},
                       {0, "job", data::FeatureKind::categorical, "b"},
                       {1, "age", data::FeatureKind::numeric, std::nullopt}};
  Matrix eps(4, 3, std::vector<double>{1, 0, 1, 0, 1, 2, 0, 0, 3, 1, -1, 5});
  const std::vector<double> delta{0.5, -0.4, 0.0, 0.1};
  const auto r = proxy_correlations(eps, delta, cols);
  ASSERT_EQ(r.features.size(), 2u);
  const double a = *r.entries[0].rho, b = *r.entries[1].rho;
  EXPECT_EQ(*r.features[0].rho, std::abs(a) >= std::abs(b) ? a : b);
  EXPECT_EQ(r.features[0].level, std::abs(a) >= std::abs(b) ? "a" : "b");
}

TEST(Proxy, TooFewPairs) {
  data::ColumnMap cols{{0, "x", data::FeatureKind::numeric, std::nullopt}};
  EXPECT_THROW(proxy_correlations(Matrix(2, 1, 1.0), std::vector<double>{1, 2}, cols), ValidationError);
}

TEST(Proxy, TopKOrderingAndWarning) {
  ProxyReport r;
  auto entry = [](std::string f, std::optional<double> rho) {
    ProxyEntry e;
    e.feature = std::move(f);
    e.rho = rho ? Statistic::of(*rho) : Statistic::undefined("zero variance");
    return e;
  };
  r.entries = {entry("a", 0.2), entry("b", -0.8), entry("c", std::nullopt), entry("d", 0.8), entry("e", 0.1)};
  std::string warning;
  const auto top = top_k(r, 3, &warning);
  ASSERT_EQ(top.size(), 3u);
  EXPECT_EQ(top[0].feature, "b");
  EXPECT_EQ(top[1].feature, "d");
  EXPECT_EQ(top[2].feature, "a");
  EXPECT_TRUE(warning.empty());
  ProxyReport none;
  none.entries = {entry("c", std::nullopt)};
  EXPECT_TRUE(top_k(none, 3, &warning).empty());
  EXPECT_FALSE(warning.empty());
}

TEST(Proxy, PairsComeFromIncludedRecordsOnly) {
  const auto schema = testing_support::mixed_schema();
  data::Encoder enc(schema);
  const auto fs = testing_support::rule_probe(schema, fs_score);
  std::vector<cfgen::CounterfactualSet> sets;
  std::vector<fairmetrics::FlipRecord> records;
  std::mt19937_64 rng(1);
  for (std::size_t i = 0; i < 30; ++i) {
    cfgen::CounterfactualSet s;
    s.sample_id = i;
    s.origin = {double(rng() % 100), 30, double(rng() % 3), 1};
    for (int m = 0; m < 4; ++m) {
      s.members.push_back({{double(rng() % 100), 30, double(rng() % 3), double(rng() % 3)}, 0, true});
    }
    const int origin_label = s.origin[2] == 1 ? 1 : 0;
    // Every third record claims the other group so it is excluded.
    const int group = i % 3 == 0 ? 1 - origin_label : origin_label;
    records.push_back(fairmetrics::cflips_sample(s, group, fs));
    sets.push_back(std::move(s));
  }
  const auto all = proxy_correlations(enc, sets, records, false);
  EXPECT_EQ(all.n_pairs, 20u * 4u);
  const auto flipped = proxy_correlations(enc, sets, records, true);
  std::size_t expect = 0;
  for (const auto& r : records) {
    if (r.included) expect += r.flipped();
  }
  EXPECT_EQ(flipped.n_pairs, expect);
  EXPECT_TRUE(flipped.flipped_only);

  // job=manager drives f_s, so it dominates.
  const auto top = top_k(all, 1);
  ASSERT_EQ(top.size(), 1u);
  EXPECT_EQ(top[0].label(), "job=manager");
  EXPECT_GT(*top[0].rho, 0.8);
}

TEST(Proxy, MisalignedInputsRejected) {
  const auto schema = testing_support::mixed_schema();
  data::Encoder enc(schema);
  std::vector<cfgen::CounterfactualSet> sets(1);
  sets[0].sample_id = 1;
  std::vector<fairmetrics::FlipRecord> records(1);
  records[0].sample_id = 2;
  EXPECT_THROW(proxy_correlations(enc, sets, records), ValidationError);
  records.clear();
  EXPECT_THROW(proxy_correlations(enc, sets, records), ValidationError);
}

TEST(Proxy, CsvLayout) {
  data::ColumnMap cols{{0, "job", data::FeatureKind::categorical, "a,b"},
                       {1, "age", data::FeatureKind::numeric, std::nullopt}};
  Matrix eps(3, 2, std::vector<double>{1, 0, 0, 0, 1, 0});
  const auto r = proxy_correlations(eps, std::vector<double>{1, 0, 1}, cols);
  std::ostringstream out;
  write_proxy_csv(out, r);
  EXPECT_EQ(out.str(), "feature,level,rho,n_pairs\njob,\"a,b\",1,3\nage,,,3\n");
}
