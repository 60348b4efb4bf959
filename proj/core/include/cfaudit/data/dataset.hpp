#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "cfaudit/common/matrix.hpp"
#include "cfaudit/data/schema.hpp"

namespace cfaudit::data {

struct Provenance {
  std::vector<std::filesystem::path> sources;
  std::size_t rows_read = 0;
  std::size_t rows_dropped = 0;
  std::vector<std::string> log;
};

/// Samples in schema space: non-sensitive features, the binary target and
/// the sensitive columns are stored separately, so a feature row never
/// contains a sensitive value.
class Dataset {
 public:
  Dataset() = default;

  /// `sensitive[j][i]` is 0 when row i holds the declared privileged value
  /// of sensitive column j and 1 for the unprivileged value.
  Dataset(std::shared_ptr<const FeatureSchema> schema, Matrix features,
          std::vector<int> target, std::vector<std::vector<int>> sensitive,
          Provenance provenance = {});

  const FeatureSchema& schema() const { return *schema_; }
  std::shared_ptr<const FeatureSchema> schema_ptr() const { return schema_; }

  std::size_t size() const { return features_.rows(); }
  bool empty() const { return size() == 0; }

  const Matrix& features() const { return features_; }
  std::span<const double> row(std::size_t i) const { return features_.row(i); }
  std::span<const int> target() const { return target_; }
  std::span<const int> sensitive(std::size_t column) const { return sensitive_.at(column); }
  const Provenance& provenance() const { return provenance_; }

  /// 1 where the row belongs to group.privileged, 0 for group.unprivileged.
  std::vector<int> group_indicator(const GroupSpec& group) const;

  /// Human-readable value of feature `feature` in row `i`.
  std::string value_string(std::size_t i, std::size_t feature) const;

  Dataset subset(std::span<const std::size_t> rows) const;

 private:
  std::shared_ptr<const FeatureSchema> schema_;
  Matrix features_;
  std::vector<int> target_;
  std::vector<std::vector<int>> sensitive_;
  Provenance provenance_;
};

/// Reads one or more CSV files (concatenated in order) under `schema`.
/// Rows holding a missing value in any column are dropped and counted.
Dataset load_csv(const std::filesystem::path& path, const FeatureSchema& schema);
Dataset load_csv(std::span<const std::filesystem::path> paths, const FeatureSchema& schema);

/// Splits one CSV record. Supports double-quoted fields with "" escapes.
std::vector<std::string> split_csv_line(std::string_view line, char delimiter);

}  // namespace cfaudit::data
