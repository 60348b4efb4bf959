#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

namespace cfaudit::data {

enum class FeatureKind { numeric, ordinal, categorical };

std::string_view to_string(FeatureKind kind);
FeatureKind feature_kind_from_string(std::string_view text);

/// One model-visible column. Categorical and ordinal values are stored in
/// schema space as the index of their level.
struct FeatureSpec {
  std::string name;
  FeatureKind kind = FeatureKind::numeric;
  std::vector<std::string> levels;
  /// Numeric values are whole numbers (counterfactual search rounds them).
  bool integer = false;
  /// Never altered by counterfactual search.
  bool immutable = false;
  /// Optional feasible range for counterfactual search.
  std::optional<std::pair<double, double>> range;

  bool has_levels() const { return kind != FeatureKind::numeric; }
  std::optional<std::size_t> level_index(std::string_view value) const;
};

struct TargetSpec {
  std::string column;
  std::string positive;
};

/// A binary sensitive column. Every ingested value must be one of the two.
struct SensitiveSpec {
  std::string column;
  std::string privileged;
  std::string unprivileged;
};

/// Selects which value of a sensitive column is s+ for one audit.
struct GroupSpec {
  std::string column;
  std::string privileged;
  std::string unprivileged;
};

/// Value rewrite applied to a raw CSV column before type conversion.
/// Either an explicit value map or a numeric threshold binning.
struct RemapRule {
  std::string column;
  std::map<std::string, std::string, std::less<>> values;
  std::optional<double> threshold;
  std::string above;
  std::string at_or_below;

  std::string apply(std::string_view raw) const;
};

/// Physical layout of the CSV file(s).
struct CsvLayout {
  bool header = true;
  /// Column names for header-less files.
  std::vector<std::string> columns;
  char delimiter = ',';
  /// Lines starting with this prefix are skipped (e.g. "|" in adult.test).
  std::string comment_prefix;
  std::vector<std::string> missing{"?"};
};

class FeatureSchema {
 public:
  std::vector<FeatureSpec> features;
  TargetSpec target;
  std::vector<SensitiveSpec> sensitive;
  /// Columns present in the file but unused.
  std::vector<std::string> ignored;
  std::vector<RemapRule> remaps;
  CsvLayout layout;

  /// Throws ValidationError when an invariant is broken.
  void validate() const;

  std::size_t feature_count() const { return features.size(); }
  std::optional<std::size_t> feature_index(std::string_view name) const;
  std::optional<std::size_t> sensitive_index(std::string_view column) const;
  const RemapRule* remap_for(std::string_view column) const;

  /// Resolves a group selection against the declared sensitive columns.
  std::size_t resolve_group(const GroupSpec& group) const;
  /// The declared orientation of the sensitive column.
  GroupSpec default_group(std::string_view column) const;

  static FeatureSchema from_json(const nlohmann::ordered_json& j);
  nlohmann::ordered_json to_json() const;
  static FeatureSchema load(const std::filesystem::path& path);

  friend bool operator==(const FeatureSchema&, const FeatureSchema&);
};

bool operator==(const FeatureSpec& a, const FeatureSpec& b);

}  // namespace cfaudit::data
