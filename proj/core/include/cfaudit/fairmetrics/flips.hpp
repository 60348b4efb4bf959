#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "cfaudit/cfgen/counterfactual.hpp"
#include "cfaudit/common/statistic.hpp"

namespace cfaudit::fairmetrics {

/// Groups are encoded as 1 = privileged, 0 = unprivileged throughout.
enum class Group { unprivileged = 0, privileged = 1 };

std::string_view to_string(Group g);

/// Flip statistics of one negatively predicted sample. Labels and
/// probabilities come from the sensitive classifier f_s, oriented so that
/// 1 / P(.) refer to the privileged group.
struct FlipRecord {
  std::size_t sample_id = 0;
  int group = 0;  ///< true group of the origin
  int origin_label = 0;
  double origin_proba = 0.0;
  std::vector<int> member_labels;
  std::vector<double> member_probas;
  Statistic cflips;
  bool included = false;

  std::size_t flipped() const;
};

/// Builds a record from f_s outputs. cflips is undefined without members;
/// the record is included only when it has members and f_s(x) equals the
/// true group.
FlipRecord make_flip_record(std::size_t sample_id, int group, int origin_label, double origin_proba,
                            std::vector<int> member_labels, std::vector<double> member_probas);

/// Evaluates f_s on the origin and every member of `set`.
FlipRecord cflips_sample(const cfgen::CounterfactualSet& set, int group, const cfgen::DecisionProbe& fs);

/// Fraction of the first `prefix` members whose label differs from the
/// origin's (all members when prefix exceeds the count).
Statistic cflips_prefix(const FlipRecord& record, std::size_t prefix);

struct AblationPoint {
  std::size_t length = 0;
  Statistic mean;
};

struct GroupFlipSummary {
  Group group = Group::privileged;
  std::size_t records = 0;   ///< records whose true group matches
  std::size_t included = 0;
  std::size_t excluded_misprediction = 0;  ///< f_s(x) differs from the true group
  std::size_t excluded_empty = 0;          ///< no counterfactual members
  Statistic mean;
  std::vector<AblationPoint> ablation;
};

/// Mean cflips over included records of `group`; undefined when none is
/// included. `prefix_lengths` fills the ablation curve.
GroupFlipSummary cflips_group(std::span<const FlipRecord> records, Group group,
                              std::span<const std::size_t> prefix_lengths = {});

/// |unprivileged mean - privileged mean| in percentage points.
Statistic delta_cflips(const GroupFlipSummary& a, const GroupFlipSummary& b);

struct AblationRow {
  std::size_t length = 0;
  Statistic unprivileged;
  Statistic privileged;
  Statistic delta;  ///< percentage points
};

std::vector<AblationRow> ablation_curve(std::span<const FlipRecord> records,
                                        std::span<const std::size_t> prefix_lengths);

}  // namespace cfaudit::fairmetrics
