#include "cfaudit/data/encoding.hpp"

#include "cfaudit/common/error.hpp"

namespace cfaudit::data {

nlohmann::ordered_json column_map_to_json(const ColumnMap& map) {
  auto out = nlohmann::ordered_json::array();
  for (const auto& c : map) {
    nlohmann::ordered_json j;
    j["feature"] = c.feature;
    j["name"] = c.name;
    j["kind"] = std::string(to_string(c.kind));
    if (c.level) j["level"] = *c.level;
    out.push_back(std::move(j));
  }
  return out;
}

ColumnMap column_map_from_json(const nlohmann::ordered_json& j) {
  ColumnMap map;
  for (const auto& c : j) {
    EncodedColumn col;
    col.feature = c.at("feature").get<std::size_t>();
    col.name = c.at("name").get<std::string>();
    col.kind = feature_kind_from_string(c.at("kind").get<std::string>());
    if (c.contains("level")) col.level = c.at("level").get<std::string>();
    map.push_back(std::move(col));
  }
  return map;
}

Encoder::Encoder(const FeatureSchema& schema) : features_(schema.features) {
  auto columns = std::make_shared<ColumnMap>();
  for (std::size_t f = 0; f < features_.size(); ++f) {
    const auto& spec = features_[f];
    offsets_.push_back(columns->size());
    if (spec.kind == FeatureKind::categorical) {
      for (const auto& level : spec.levels) {
        columns->push_back(EncodedColumn{f, spec.name, spec.kind, level});
      }
    } else {
      columns->push_back(EncodedColumn{f, spec.name, spec.kind, std::nullopt});
    }
  }
  columns_ = std::move(columns);
}

void Encoder::encode_row(std::span<const double> schema_row, std::span<double> out) const {
  if (schema_row.size() != features_.size() || out.size() != width()) {
    throw ValidationError("encode_row: width mismatch");
  }
  for (std::size_t f = 0; f < features_.size(); ++f) {
    const std::size_t o = offsets_[f];
    if (features_[f].kind == FeatureKind::categorical) {
      const std::size_t L = features_[f].levels.size();
      for (std::size_t l = 0; l < L; ++l) out[o + l] = 0.0;
      out[o + static_cast<std::size_t>(schema_row[f])] = 1.0;
    } else {
      out[o] = schema_row[f];
    }
  }
}

std::vector<double> Encoder::encode_row(std::span<const double> schema_row) const {
  std::vector<double> out(width());
  encode_row(schema_row, out);
  return out;
}

EncodedMatrix Encoder::encode(const Matrix& schema_rows) const {
  Matrix values(schema_rows.rows(), width());
  for (std::size_t i = 0; i < schema_rows.rows(); ++i) {
    encode_row(schema_rows.row(i), values.row(i));
  }
  return EncodedMatrix{std::move(values), columns_};
}

std::vector<double> Encoder::decode_row(std::span<const double> encoded) const {
  if (encoded.size() != width()) throw ValidationError("decode_row: width mismatch");
  std::vector<double> out(features_.size());
  for (std::size_t f = 0; f < features_.size(); ++f) {
    const std::size_t o = offsets_[f];
    if (features_[f].kind == FeatureKind::categorical) {
      std::optional<std::size_t> hot;
      for (std::size_t l = 0; l < features_[f].levels.size(); ++l) {
        const double v = encoded[o + l];
        if (v == 1.0 && !hot) {
          hot = l;
        } else if (v != 0.0) {
          throw ValidationError("one-hot block of '" + features_[f].name + "' is not a unit vector");
        }
      }
      if (!hot) throw ValidationError("one-hot block of '" + features_[f].name + "' is empty");
      out[f] = static_cast<double>(*hot);
    } else {
      out[f] = encoded[o];
    }
  }
  return out;
}

EncodedMatrix encode(const Dataset& dataset) {
  if (dataset.empty()) throw ValidationError("encode: dataset is empty");
  return Encoder(dataset.schema()).encode(dataset.features());
}

}  // namespace cfaudit::data
