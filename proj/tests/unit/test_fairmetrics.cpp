#include <gtest/gtest.h>

#include <random>

#include "cfaudit/common/error.hpp"
#include "cfaudit/fairmetrics/flips.hpp"
#include "cfaudit/fairmetrics/group_metrics.hpp"
#include "oracles.hpp"
#include "testing.hpp"

using namespace cfaudit;
using namespace cfaudit::fairmetrics;

namespace {

FlipRecord record(int group, int origin, std::vector<int> members) {
  std::vector<double> probas(members.size(), 0.5);
  return make_flip_record(0, group, origin, 0.5, std::move(members), std::move(probas));
}

std::optional<double> oracle_gap(const std::vector<int>& pred, const std::vector<int>& y,
                                 const std::vector<int>& g, std::optional<int> label) {
  const auto a = oracle::rate(pred, y, g, 1, label);
  const auto b = oracle::rate(pred, y, g, 0, label);
  if (!a || !b) return std::nullopt;
  return std::abs(*a - *b);
}

}  // namespace

TEST(Flips, HandExample) {
  // Origin privileged; both counterfactuals read as unprivileged.
  const auto full = record(1, 1, {0, 0});
  EXPECT_EQ(*full.cflips, 1.0);
  EXPECT_EQ(full.flipped(), 2u);
  EXPECT_TRUE(full.included);
  const auto none = record(1, 1, {1, 1, 1});
  EXPECT_EQ(*none.cflips, 0.0);
  const auto partial = record(0, 0, {1, 0, 1, 1});
  EXPECT_EQ(*partial.cflips, 0.75);
  EXPECT_EQ(*cflips_prefix(partial, 2), 0.5);
  EXPECT_EQ(*cflips_prefix(partial, 100), 0.75);
}

TEST(Flips, ExclusionRules) {
  const auto empty = record(1, 1, {});
  EXPECT_FALSE(empty.cflips.defined());
  EXPECT_FALSE(empty.included);
  const auto mispredicted = record(1, 0, {1, 1});
  EXPECT_TRUE(mispredicted.cflips.defined());
  EXPECT_FALSE(mispredicted.included);

  std::vector<FlipRecord> rs{record(1, 1, {0, 0}), empty, mispredicted, record(0, 0, {0, 1}), record(0, 1, {0})};
  const auto p = cflips_group(rs, Group::privileged);
  EXPECT_EQ(p.records, 3u);
  EXPECT_EQ(p.included, 1u);
  EXPECT_EQ(p.excluded_empty, 1u);
  EXPECT_EQ(p.excluded_misprediction, 1u);
  EXPECT_EQ(*p.mean, 1.0);
  const auto u = cflips_group(rs, Group::unprivileged);
  EXPECT_EQ(u.included, 1u);
  EXPECT_EQ(*u.mean, 0.5);
  EXPECT_DOUBLE_EQ(*delta_cflips(u, p), 50.0);
}

TEST(Flips, UndefinedPropagates) {
  std::vector<FlipRecord> rs{record(1, 1, {0})};
  const auto u = cflips_group(rs, Group::unprivileged);
  EXPECT_FALSE(u.mean.defined());
  EXPECT_NE(u.mean.undefined_reason.find("unprivileged"), std::string::npos);
  EXPECT_FALSE(delta_cflips(u, cflips_group(rs, Group::privileged)).defined());
}

TEST(Flips, DeltaInPercentagePoints) {
  GroupFlipSummary u, p;
  u.mean = Statistic::of(0.79);
  p.mean = Statistic::of(0.09);
  EXPECT_NEAR(*delta_cflips(u, p), 70.0, 1e-9);
  EXPECT_NEAR(*delta_cflips(p, u), 70.0, 1e-9);
}

TEST(Flips, AblationPrefixes) {
  std::vector<FlipRecord> rs{record(0, 0, {1, 1, 0, 0}), record(1, 1, {1, 0, 0, 0})};
  const std::vector<std::size_t> lengths{1, 2, 4};
  const auto rows = ablation_curve(rs, lengths);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(*rows[0].unprivileged, 1.0);
  EXPECT_EQ(*rows[0].privileged, 0.0);
  EXPECT_EQ(*rows[0].delta, 100.0);
  EXPECT_EQ(*rows[1].privileged, 0.5);
  EXPECT_EQ(*rows[2].delta, 25.0);
}

TEST(Flips, MismatchedProbabilitiesRejected) {
  EXPECT_THROW(make_flip_record(0, 1, 1, 0.5, {0, 1}, {0.5}), ValidationError);
  EXPECT_THROW(make_flip_record(0, 2, 1, 0.5, {0}, {0.5}), ValidationError);
}

TEST(Flips, SampleUsesSensitiveClassifier) {
  const auto schema = testing_support::mixed_schema();
  // f_s reads income above 50 as privileged.
  const auto fs = testing_support::rule_probe(schema, [](std::span<const double> e) { return e[0] > 50 ? 0.9 : 0.2; });
  cfgen::CounterfactualSet set;
  set.origin = {60, 30, 0, 0};
  set.members = {{{40, 30, 0, 0}, 0, true}, {{70, 30, 0, 0}, 0, true}, {{10, 30, 0, 0}, 0, true}};
  const auto r = cflips_sample(set, 1, fs);
  EXPECT_EQ(r.origin_label, 1);
  EXPECT_EQ(r.origin_proba, 0.9);
  EXPECT_EQ(r.member_labels, (std::vector<int>{0, 1, 0}));
  EXPECT_DOUBLE_EQ(*r.cflips, 2.0 / 3.0);
}

TEST(GroupMetrics, MatchOracleOnRandomInstances) {
  std::mt19937_64 rng(2024);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 1 + rng() % 80;
    std::vector<int> pred(n), y(n), g(n);
    for (std::size_t i = 0; i < n; ++i) {
      pred[i] = int(rng() % 2);
      y[i] = int(rng() % 2);
      g[i] = int(rng() % 2);
    }
    const auto sp = oracle_gap(pred, y, g, std::nullopt);
    const auto eo = oracle_gap(pred, y, g, 1);
    const auto fp = oracle_gap(pred, y, g, 0);
    const auto got_sp = dsp(pred, g), got_eo = deo(pred, y, g), got_ao = dao(pred, y, g);
    ASSERT_EQ(got_sp.defined(), sp.has_value());
    ASSERT_EQ(got_eo.defined(), eo.has_value());
    ASSERT_EQ(got_ao.defined(), eo && fp);
    if (sp) EXPECT_NEAR(*got_sp, *sp, 1e-12);
    if (eo) EXPECT_NEAR(*got_eo, *eo, 1e-12);
    if (eo && fp) EXPECT_NEAR(*got_ao, (*eo + *fp) / 2, 1e-12);

    std::vector<FlipRecord> rs;
    std::vector<double> sums(2, 0), counts(2, 0);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<int> members(rng() % 6);
      for (auto& m : members) m = int(rng() % 2);
      const int group = g[i], origin = int(rng() % 2);
      if (!members.empty() && origin == group) {
        sums[group] += oracle::cflips(origin, members);
        counts[group] += 1;
      }
      rs.push_back(record(group, origin, members));
    }
    const auto u = cflips_group(rs, Group::unprivileged), p = cflips_group(rs, Group::privileged);
    ASSERT_EQ(u.mean.defined(), counts[0] > 0);
    ASSERT_EQ(p.mean.defined(), counts[1] > 0);
    if (counts[0] > 0) EXPECT_NEAR(*u.mean, sums[0] / counts[0], 1e-12);
    if (counts[1] > 0) EXPECT_NEAR(*p.mean, sums[1] / counts[1], 1e-12);
    if (counts[0] > 0 && counts[1] > 0) {
      EXPECT_NEAR(*delta_cflips(u, p), 100 * std::abs(sums[0] / counts[0] - sums[1] / counts[1]), 1e-10);
    }
  }
}

TEST(GroupMetrics, EmptyCellIsNamed) {
  const std::vector<int> pred{1, 0}, y{0, 0}, g{1, 0};
  const auto eo = deo(pred, y, g);
  EXPECT_FALSE(eo.defined());
  EXPECT_EQ(eo.undefined_reason, "empty cell S=1, Y=1");
  EXPECT_FALSE(dao(pred, y, g).defined());
  EXPECT_EQ(*dsp(pred, g), 1.0);
  EXPECT_THROW(dsp(pred, std::vector<int>{1}), ValidationError);
}

TEST(GroupMetrics, InvariantUnderGroupRelabel) {
  std::mt19937_64 rng(3);
  std::vector<int> pred(200), y(200), g(200), h(200);
  for (int i = 0; i < 200; ++i) {
    pred[i] = int(rng() % 2);
    y[i] = int(rng() % 2);
    g[i] = int(rng() % 2);
    h[i] = 1 - g[i];
  }
  EXPECT_EQ(*dsp(pred, g), *dsp(pred, h));
  EXPECT_EQ(*deo(pred, y, g), *deo(pred, y, h));
  EXPECT_EQ(*dao(pred, y, g), *dao(pred, y, h));
  std::vector<int> same(200, 1);
  EXPECT_EQ(*dsp(same, g), 0.0);
}
