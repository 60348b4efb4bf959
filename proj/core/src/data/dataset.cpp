#include "cfaudit/data/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "cfaudit/common/error.hpp"
#include "cfaudit/common/format.hpp"

namespace cfaudit::data {

Dataset::Dataset(std::shared_ptr<const FeatureSchema> schema, Matrix features,
                 std::vector<int> target, std::vector<std::vector<int>> sensitive,
                 Provenance provenance)
    : schema_(std::move(schema)),
      features_(std::move(features)),
      target_(std::move(target)),
      sensitive_(std::move(sensitive)),
      provenance_(std::move(provenance)) {
  if (!schema_) throw ValidationError("dataset without schema");
  const std::size_t n = features_.rows();
  if (n > 0 && features_.cols() != schema_->feature_count()) {
    throw ValidationError("feature matrix width does not match the schema");
  }
  if (features_.cols() == 0) features_ = Matrix(0, schema_->feature_count());
  if (target_.size() != n) throw ValidationError("target length does not match rows");
  if (sensitive_.size() != schema_->sensitive.size()) {
    throw ValidationError("sensitive column count does not match the schema");
  }
  for (const auto& col : sensitive_) {
    if (col.size() != n) throw ValidationError("sensitive column length does not match rows");
  }
  for (std::size_t f = 0; f < schema_->feature_count(); ++f) {
    const auto& spec = schema_->features[f];
    for (std::size_t i = 0; i < n; ++i) {
      double v = features_(i, f);
      if (!std::isfinite(v)) throw DataError("non-finite value in '" + spec.name + "'", i);
      if (spec.has_levels() &&
          (v < 0 || v >= static_cast<double>(spec.levels.size()) || v != std::floor(v))) {
        throw DataError("level index out of range in '" + spec.name + "'", i);
      }
    }
  }
}

std::vector<int> Dataset::group_indicator(const GroupSpec& group) const {
  const std::size_t col = schema_->resolve_group(group);
  const auto& declared = schema_->sensitive[col];
  // Stored 0 = declared privileged value.
  const bool same_orientation = declared.privileged == group.privileged;
  std::vector<int> out(size());
  for (std::size_t i = 0; i < size(); ++i) {
    const bool declared_privileged = sensitive_[col][i] == 0;
    out[i] = (declared_privileged == same_orientation) ? 1 : 0;
  }
  return out;
}

std::string Dataset::value_string(std::size_t i, std::size_t feature) const {
  const auto& spec = schema_->features.at(feature);
  const double v = features_(i, feature);
  if (spec.has_levels()) return spec.levels.at(static_cast<std::size_t>(v));
  return format_double(v);
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  std::vector<int> target;
  target.reserve(rows.size());
  std::vector<std::vector<int>> sens(sensitive_.size());
  for (auto r : rows) {
    target.push_back(target_.at(r));
    for (std::size_t j = 0; j < sensitive_.size(); ++j) sens[j].push_back(sensitive_[j][r]);
  }
  Provenance prov = provenance_;
  prov.log.push_back("subset of " + std::to_string(rows.size()) + " rows");
  return Dataset(schema_, features_.select_rows(rows), std::move(target), std::move(sens),
                 std::move(prov));
}

std::vector<std::string> split_csv_line(std::string_view line, char delimiter) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  bool was_quoted = false;
  auto finish = [&] {
    if (!was_quoted) {
      auto b = field.find_first_not_of(" \t\r");
      auto e = field.find_last_not_of(" \t\r");
      field = b == std::string::npos ? std::string() : field.substr(b, e - b + 1);
    }
    fields.push_back(std::move(field));
    field.clear();
    was_quoted = false;
  };
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"' && field.find_first_not_of(" \t") == std::string::npos) {
      field.clear();
      quoted = true;
      was_quoted = true;
    } else if (c == delimiter) {
      finish();
    } else if (!(was_quoted && (c == ' ' || c == '\t' || c == '\r'))) {
      field.push_back(c);
    }
  }
  if (quoted) throw DataError("unterminated quoted field");
  finish();
  return fields;
}

namespace {

enum class Role { feature, target, sensitive, ignored };

struct ColumnBinding {
  Role role = Role::ignored;
  std::size_t index = 0;
  const RemapRule* remap = nullptr;
};

std::vector<ColumnBinding> bind_columns(const std::vector<std::string>& header,
                                        const FeatureSchema& schema,
                                        const std::filesystem::path& path) {
  std::vector<ColumnBinding> bindings(header.size());
  std::set<std::string, std::less<>> seen;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const auto& name = header[c];
    if (!seen.insert(name).second) {
      throw DataError(path.string() + ": duplicate column '" + name + "'");
    }
    ColumnBinding b;
    b.remap = schema.remap_for(name);
    if (auto f = schema.feature_index(name)) {
      b.role = Role::feature;
      b.index = *f;
    } else if (name == schema.target.column) {
      b.role = Role::target;
    } else if (auto s = schema.sensitive_index(name)) {
      b.role = Role::sensitive;
      b.index = *s;
    } else if (std::find(schema.ignored.begin(), schema.ignored.end(), name) !=
               schema.ignored.end()) {
      b.role = Role::ignored;
    } else {
      throw DataError(path.string() + ": unknown column '" + name + "'");
    }
    bindings[c] = b;
  }
  auto require = [&](const std::string& name) {
    if (!seen.contains(name)) {
      throw DataError(path.string() + ": declared column '" + name + "' not found in file");
    }
  };
  for (const auto& f : schema.features) require(f.name);
  require(schema.target.column);
  for (const auto& s : schema.sensitive) require(s.column);
  return bindings;
}

bool parse_number(std::string_view text, double& out) {
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc{} && ptr == text.data() + text.size() && std::isfinite(out);
}

}  // namespace

Dataset load_csv(const std::filesystem::path& path, const FeatureSchema& schema) {
  return load_csv(std::span<const std::filesystem::path>(&path, 1), schema);
}

Dataset load_csv(std::span<const std::filesystem::path> paths, const FeatureSchema& schema) {
  schema.validate();
  auto shared_schema = std::make_shared<const FeatureSchema>(schema);
  const std::size_t n_features = schema.feature_count();
  const auto& layout = schema.layout;

  Matrix features(0, n_features);
  std::vector<int> target;
  std::vector<std::vector<int>> sensitive(schema.sensitive.size());
  Provenance prov;
  std::size_t record = 0;

  std::vector<double> row(n_features);
  std::vector<int> sens_row(schema.sensitive.size());

  for (const auto& path : paths) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path.string());
    prov.sources.push_back(path);

    std::vector<std::string> header = layout.columns;
    std::string line;
    bool header_pending = layout.header;
    std::vector<ColumnBinding> bindings;
    if (!header_pending) bindings = bind_columns(header, schema, path);

    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.find_first_not_of(" \t") == std::string::npos) continue;
      if (!layout.comment_prefix.empty() && line.starts_with(layout.comment_prefix)) continue;
      auto fields = split_csv_line(line, layout.delimiter);
      if (header_pending) {
        header = std::move(fields);
        bindings = bind_columns(header, schema, path);
        header_pending = false;
        continue;
      }
      const std::size_t this_record = record++;
      ++prov.rows_read;
      if (fields.size() != header.size()) {
        throw DataError(path.string() + ": expected " + std::to_string(header.size()) +
                            " fields, got " + std::to_string(fields.size()),
                        this_record);
      }
      bool missing = false;
      for (const auto& v : fields) {
        if (v.empty() ||
            std::find(layout.missing.begin(), layout.missing.end(), v) != layout.missing.end()) {
          missing = true;
          break;
        }
      }
      if (missing) {
        ++prov.rows_dropped;
        continue;
      }
      int label = 0;
      for (std::size_t c = 0; c < fields.size(); ++c) {
        const auto& b = bindings[c];
        if (b.role == Role::ignored) continue;
        std::string value = b.remap ? b.remap->apply(fields[c]) : fields[c];
        switch (b.role) {
          case Role::feature: {
            const auto& spec = schema.features[b.index];
            if (spec.has_levels()) {
              auto level = spec.level_index(value);
              if (!level) {
                throw DataError("value '" + value + "' of '" + spec.name +
                                    "' is not a declared level",
                                this_record);
              }
              row[b.index] = static_cast<double>(*level);
            } else if (!parse_number(value, row[b.index])) {
              throw DataError("unparseable numeric '" + value + "' in '" + spec.name + "'",
                              this_record);
            }
            break;
          }
          case Role::target:
            label = value == schema.target.positive ? 1 : 0;
            break;
          case Role::sensitive: {
            const auto& s = schema.sensitive[b.index];
            if (value == s.privileged) {
              sens_row[b.index] = 0;
            } else if (value == s.unprivileged) {
              sens_row[b.index] = 1;
            } else {
              throw DataError("sensitive value '" + value + "' of '" + s.column +
                                  "' is neither privileged nor unprivileged",
                              this_record);
            }
            break;
          }
          case Role::ignored:
            break;
        }
      }
      features.append_row(row);
      target.push_back(label);
      for (std::size_t j = 0; j < sens_row.size(); ++j) sensitive[j].push_back(sens_row[j]);
    }
    if (header_pending) throw DataError(path.string() + ": missing header row");
  }
  prov.log.push_back("rows_read=" + std::to_string(prov.rows_read));
  prov.log.push_back("dropped=" + std::to_string(prov.rows_dropped));
  if (features.cols() == 0) features = Matrix(0, n_features);
  return Dataset(std::move(shared_schema), std::move(features), std::move(target),
                 std::move(sensitive), std::move(prov));
}

}  // namespace cfaudit::data
