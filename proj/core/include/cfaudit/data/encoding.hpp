#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cfaudit/common/matrix.hpp"
#include "cfaudit/data/dataset.hpp"
#include "json.hpp"

namespace cfaudit::data {

/// One model-facing column: either a numeric/ordinal pass-through (no level)
/// or the indicator of one categorical level.
struct EncodedColumn {
  std::size_t feature = 0;
  std::string name;
  FeatureKind kind = FeatureKind::numeric;
  std::optional<std::string> level;

  std::string label() const { return level ? name + "=" + *level : name; }
  friend bool operator==(const EncodedColumn&, const EncodedColumn&) = default;
};

using ColumnMap = std::vector<EncodedColumn>;

nlohmann::ordered_json column_map_to_json(const ColumnMap& map);
ColumnMap column_map_from_json(const nlohmann::ordered_json& j);

struct EncodedMatrix {
  Matrix values;
  std::shared_ptr<const ColumnMap> columns;

  std::size_t rows() const { return values.rows(); }
  std::size_t cols() const { return values.cols(); }
};

/// One-hot encoder for a schema. Ordinal levels map to their index.
class Encoder {
 public:
  explicit Encoder(const FeatureSchema& schema);

  std::size_t width() const { return columns_->size(); }
  const ColumnMap& column_map() const { return *columns_; }
  std::shared_ptr<const ColumnMap> column_map_ptr() const { return columns_; }
  /// First encoded column of each feature.
  std::span<const std::size_t> offsets() const { return offsets_; }

  void encode_row(std::span<const double> schema_row, std::span<double> out) const;
  std::vector<double> encode_row(std::span<const double> schema_row) const;
  EncodedMatrix encode(const Matrix& schema_rows) const;

  /// Inverse of encode_row. Throws when a one-hot block is not a unit vector.
  std::vector<double> decode_row(std::span<const double> encoded) const;

 private:
  std::vector<FeatureSpec> features_;
  std::shared_ptr<const ColumnMap> columns_;
  std::vector<std::size_t> offsets_;
};

EncodedMatrix encode(const Dataset& dataset);

}  // namespace cfaudit::data
