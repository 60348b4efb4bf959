#include "cfaudit/fairmetrics/flips.hpp"

#include <algorithm>
#include <cmath>

#include "cfaudit/common/error.hpp"

namespace cfaudit::fairmetrics {

std::string_view to_string(Group g) { return g == Group::privileged ? "privileged" : "unprivileged"; }

std::size_t FlipRecord::flipped() const {
  return static_cast<std::size_t>(
      std::count_if(member_labels.begin(), member_labels.end(), [&](int l) { return l != origin_label; }));
}

Statistic cflips_prefix(const FlipRecord& record, std::size_t prefix) {
  const std::size_t n = std::min(prefix, record.member_labels.size());
  if (n == 0) return Statistic::undefined("no counterfactual members");
  std::size_t flips = 0;
  for (std::size_t i = 0; i < n; ++i) flips += record.member_labels[i] != record.origin_label ? 1 : 0;
  return Statistic::of(static_cast<double>(flips) / static_cast<double>(n));
}

FlipRecord make_flip_record(std::size_t sample_id, int group, int origin_label, double origin_proba,
                            std::vector<int> member_labels, std::vector<double> member_probas) {
  if (group != 0 && group != 1) throw ValidationError("group must be 0 or 1");
  if (!member_probas.empty() && member_probas.size() != member_labels.size()) {
    throw ValidationError("member labels and probabilities differ in length");
  }
  FlipRecord r;
  r.sample_id = sample_id;
  r.group = group;
  r.origin_label = origin_label;
  r.origin_proba = origin_proba;
  r.member_labels = std::move(member_labels);
  r.member_probas = std::move(member_probas);
  r.cflips = cflips_prefix(r, r.member_labels.size());
  r.included = !r.member_labels.empty() && origin_label == group;
  return r;
}

FlipRecord cflips_sample(const cfgen::CounterfactualSet& set, int group, const cfgen::DecisionProbe& fs) {
  Matrix rows;
  rows.reserve_rows(set.members.size() + 1);
  rows.append_row(set.origin);
  for (const auto& m : set.members) rows.append_row(m.values);
  auto pred = fs.evaluate(rows);
  std::vector<int> labels(pred.labels.begin() + 1, pred.labels.end());
  std::vector<double> probas(pred.probas.begin() + 1, pred.probas.end());
  return make_flip_record(set.sample_id, group, pred.labels[0], pred.probas[0], std::move(labels),
                          std::move(probas));
}

GroupFlipSummary cflips_group(std::span<const FlipRecord> records, Group group,
                              std::span<const std::size_t> prefix_lengths) {
  GroupFlipSummary s;
  s.group = group;
  const int g = static_cast<int>(group);
  double sum = 0.0;
  std::vector<double> prefix_sums(prefix_lengths.size(), 0.0);
  for (const auto& r : records) {
    if (r.group != g) continue;
    ++s.records;
    if (r.member_labels.empty()) {
      ++s.excluded_empty;
      continue;
    }
    if (r.origin_label != g) {
      ++s.excluded_misprediction;
      continue;
    }
    ++s.included;
    sum += *r.cflips;
    for (std::size_t i = 0; i < prefix_lengths.size(); ++i) prefix_sums[i] += *cflips_prefix(r, prefix_lengths[i]);
  }
  const std::string reason = "no included " + std::string(to_string(group)) + " records";
  const auto n = static_cast<double>(s.included);
  s.mean = s.included ? Statistic::of(sum / n) : Statistic::undefined(reason);
  for (std::size_t i = 0; i < prefix_lengths.size(); ++i) {
    s.ablation.push_back({prefix_lengths[i], s.included ? Statistic::of(prefix_sums[i] / n)
                                                        : Statistic::undefined(reason)});
  }
  return s;
}

namespace {

Statistic gap_points(const Statistic& a, const Statistic& b) {
  if (!a.defined()) return Statistic::undefined(a.undefined_reason);
  if (!b.defined()) return Statistic::undefined(b.undefined_reason);
  return Statistic::of(100.0 * std::abs(*a - *b));
}

}  // namespace

Statistic delta_cflips(const GroupFlipSummary& a, const GroupFlipSummary& b) { return gap_points(a.mean, b.mean); }

std::vector<AblationRow> ablation_curve(std::span<const FlipRecord> records,
                                        std::span<const std::size_t> prefix_lengths) {
  const auto u = cflips_group(records, Group::unprivileged, prefix_lengths);
  const auto p = cflips_group(records, Group::privileged, prefix_lengths);
  std::vector<AblationRow> rows;
  for (std::size_t i = 0; i < prefix_lengths.size(); ++i) {
    rows.push_back({prefix_lengths[i], u.ablation[i].mean, p.ablation[i].mean,
                    gap_points(u.ablation[i].mean, p.ablation[i].mean)});
  }
  return rows;
}

}  // namespace cfaudit::fairmetrics
