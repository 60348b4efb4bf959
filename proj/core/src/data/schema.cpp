#include "cfaudit/data/schema.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>

#include "cfaudit/common/error.hpp"

namespace cfaudit::data {

using nlohmann::ordered_json;

std::string_view to_string(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::numeric: return "numeric";
    case FeatureKind::ordinal: return "ordinal";
    case FeatureKind::categorical: return "categorical";
  }
  return "numeric";
}

FeatureKind feature_kind_from_string(std::string_view text) {
  if (text == "numeric") return FeatureKind::numeric;
  if (text == "ordinal") return FeatureKind::ordinal;
  if (text == "categorical") return FeatureKind::categorical;
  throw ValidationError("unknown feature kind '" + std::string(text) + "'");
}

std::optional<std::size_t> FeatureSpec::level_index(std::string_view value) const {
  auto it = std::find(levels.begin(), levels.end(), value);
  if (it == levels.end()) return std::nullopt;
  return static_cast<std::size_t>(it - levels.begin());
}

bool operator==(const FeatureSpec& a, const FeatureSpec& b) {
  return a.name == b.name && a.kind == b.kind && a.levels == b.levels &&
         a.integer == b.integer && a.immutable == b.immutable && a.range == b.range;
}

std::string RemapRule::apply(std::string_view raw) const {
  if (threshold) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), v);
    if (ec != std::errc{} || ptr != raw.data() + raw.size()) {
      throw DataError("column '" + column + "': cannot bin non-numeric value '" +
                      std::string(raw) + "'");
    }
    return v > *threshold ? above : at_or_below;
  }
  auto it = values.find(raw);
  return it == values.end() ? std::string(raw) : it->second;
}

std::optional<std::size_t> FeatureSchema::feature_index(std::string_view name) const {
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].name == name) return i;
  }
  return std::nullopt;
}

std::optional<std::size_t> FeatureSchema::sensitive_index(std::string_view column) const {
  for (std::size_t i = 0; i < sensitive.size(); ++i) {
    if (sensitive[i].column == column) return i;
  }
  return std::nullopt;
}

const RemapRule* FeatureSchema::remap_for(std::string_view column) const {
  for (const auto& rule : remaps) {
    if (rule.column == column) return &rule;
  }
  return nullptr;
}

std::size_t FeatureSchema::resolve_group(const GroupSpec& group) const {
  auto idx = sensitive_index(group.column);
  if (!idx) {
    throw ValidationError("group column '" + group.column + "' is not a declared sensitive column");
  }
  const auto& s = sensitive[*idx];
  if (group.privileged == group.unprivileged) {
    throw ValidationError("group '" + group.column + "': privileged and unprivileged values coincide");
  }
  auto known = [&](const std::string& v) { return v == s.privileged || v == s.unprivileged; };
  if (!known(group.privileged) || !known(group.unprivileged)) {
    throw ValidationError("group '" + group.column + "' must use the values '" + s.privileged +
                          "' and '" + s.unprivileged + "'");
  }
  return *idx;
}

GroupSpec FeatureSchema::default_group(std::string_view column) const {
  auto idx = sensitive_index(column);
  if (!idx) throw ValidationError("unknown sensitive column '" + std::string(column) + "'");
  const auto& s = sensitive[*idx];
  return GroupSpec{s.column, s.privileged, s.unprivileged};
}

void FeatureSchema::validate() const {
  if (features.empty()) throw ValidationError("schema declares no features");
  std::set<std::string, std::less<>> names;
  for (const auto& f : features) {
    if (f.name.empty()) throw ValidationError("feature with empty name");
    if (!names.insert(f.name).second) {
      throw ValidationError("duplicate feature name '" + f.name + "'");
    }
    if (f.has_levels()) {
      if (f.levels.empty()) throw ValidationError("feature '" + f.name + "' has no levels");
      std::set<std::string> seen(f.levels.begin(), f.levels.end());
      if (seen.size() != f.levels.size()) {
        throw ValidationError("feature '" + f.name + "' has duplicate levels");
      }
    } else if (!f.levels.empty()) {
      throw ValidationError("numeric feature '" + f.name + "' declares levels");
    }
    if (f.range && f.range->first > f.range->second) {
      throw ValidationError("feature '" + f.name + "' has an empty range");
    }
  }
  if (target.column.empty()) throw ValidationError("schema declares no target column");
  if (names.contains(target.column)) {
    throw ValidationError("target column '" + target.column + "' is also a feature");
  }
  std::set<std::string, std::less<>> sensitive_names;
  for (const auto& s : sensitive) {
    if (names.contains(s.column)) {
      throw ValidationError("sensitive column '" + s.column + "' is also a feature");
    }
    if (s.column == target.column) {
      throw ValidationError("sensitive column '" + s.column + "' is the target");
    }
    if (s.privileged == s.unprivileged) {
      throw ValidationError("sensitive column '" + s.column + "': privileged equals unprivileged");
    }
    if (!sensitive_names.insert(s.column).second) {
      throw ValidationError("duplicate sensitive column '" + s.column + "'");
    }
  }
  for (const auto& col : ignored) {
    if (names.contains(col) || sensitive_names.contains(col) || col == target.column) {
      throw ValidationError("ignored column '" + col + "' is also used");
    }
  }
  if (!layout.header && layout.columns.empty()) {
    throw ValidationError("header-less CSV layout needs explicit column names");
  }
  for (const auto& r : remaps) {
    if (r.threshold && (r.above.empty() || r.at_or_below.empty())) {
      throw ValidationError("threshold remap on '" + r.column + "' needs both labels");
    }
  }
}

namespace {

std::vector<std::string> string_list(const ordered_json& j, const char* what) {
  if (!j.is_array()) throw ValidationError(std::string(what) + " must be a list");
  std::vector<std::string> out;
  for (const auto& v : j) out.push_back(v.get<std::string>());
  return out;
}

}  // namespace

FeatureSchema FeatureSchema::from_json(const ordered_json& j) {
  FeatureSchema s;
  try {
    if (j.contains("csv")) {
      const auto& c = j.at("csv");
      s.layout.header = c.value("header", true);
      if (c.contains("columns")) s.layout.columns = string_list(c.at("columns"), "csv.columns");
      auto delim = c.value("delimiter", std::string(","));
      if (delim.size() != 1) throw ValidationError("csv.delimiter must be one character");
      s.layout.delimiter = delim[0];
      s.layout.comment_prefix = c.value("comment_prefix", std::string());
      if (c.contains("missing")) s.layout.missing = string_list(c.at("missing"), "csv.missing");
    }
    for (const auto& f : j.at("features")) {
      FeatureSpec spec;
      spec.name = f.at("name").get<std::string>();
      spec.kind = feature_kind_from_string(f.value("kind", std::string("numeric")));
      if (f.contains("levels")) spec.levels = string_list(f.at("levels"), "levels");
      spec.integer = f.value("integer", false);
      spec.immutable = f.value("immutable", false);
      if (f.contains("range")) {
        const auto& r = f.at("range");
        if (!r.is_array() || r.size() != 2) throw ValidationError("range must be [min, max]");
        spec.range = std::pair{r[0].get<double>(), r[1].get<double>()};
      }
      s.features.push_back(std::move(spec));
    }
    const auto& t = j.at("target");
    s.target.column = t.at("column").get<std::string>();
    s.target.positive = t.at("positive").get<std::string>();
    if (j.contains("sensitive")) {
      for (const auto& sv : j.at("sensitive")) {
        s.sensitive.push_back(SensitiveSpec{sv.at("column").get<std::string>(),
                                            sv.at("privileged").get<std::string>(),
                                            sv.at("unprivileged").get<std::string>()});
      }
    }
    if (j.contains("ignore")) s.ignored = string_list(j.at("ignore"), "ignore");
    if (j.contains("remap")) {
      for (const auto& r : j.at("remap")) {
        RemapRule rule;
        rule.column = r.at("column").get<std::string>();
        if (r.contains("values")) {
          for (const auto& [from, to] : r.at("values").items()) {
            rule.values.emplace(from, to.get<std::string>());
          }
        }
        if (r.contains("threshold")) {
          rule.threshold = r.at("threshold").get<double>();
          rule.above = r.at("above").get<std::string>();
          rule.at_or_below = r.at("at_or_below").get<std::string>();
        }
        s.remaps.push_back(std::move(rule));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed schema: ") + e.what());
  }
  s.validate();
  return s;
}

ordered_json FeatureSchema::to_json() const {
  ordered_json j;
  ordered_json csv;
  csv["header"] = layout.header;
  if (!layout.columns.empty()) csv["columns"] = layout.columns;
  csv["delimiter"] = std::string(1, layout.delimiter);
  if (!layout.comment_prefix.empty()) csv["comment_prefix"] = layout.comment_prefix;
  csv["missing"] = layout.missing;
  j["csv"] = std::move(csv);

  ordered_json feats = ordered_json::array();
  for (const auto& f : features) {
    ordered_json fj;
    fj["name"] = f.name;
    fj["kind"] = std::string(to_string(f.kind));
    if (f.has_levels()) fj["levels"] = f.levels;
    if (f.integer) fj["integer"] = true;
    if (f.immutable) fj["immutable"] = true;
    if (f.range) fj["range"] = {f.range->first, f.range->second};
    feats.push_back(std::move(fj));
  }
  j["features"] = std::move(feats);
  j["target"] = {{"column", target.column}, {"positive", target.positive}};
  ordered_json sens = ordered_json::array();
  for (const auto& s : sensitive) {
    sens.push_back({{"column", s.column}, {"privileged", s.privileged}, {"unprivileged", s.unprivileged}});
  }
  j["sensitive"] = std::move(sens);
  if (!ignored.empty()) j["ignore"] = ignored;
  if (!remaps.empty()) {
    ordered_json rs = ordered_json::array();
    for (const auto& r : remaps) {
      ordered_json rj;
      rj["column"] = r.column;
      if (!r.values.empty()) {
        ordered_json vals = ordered_json::object();
        for (const auto& [from, to] : r.values) vals[from] = to;
        rj["values"] = std::move(vals);
      }
      if (r.threshold) {
        rj["threshold"] = *r.threshold;
        rj["above"] = r.above;
        rj["at_or_below"] = r.at_or_below;
      }
      rs.push_back(std::move(rj));
    }
    j["remap"] = std::move(rs);
  }
  return j;
}

FeatureSchema FeatureSchema::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open schema file " + path.string());
  ordered_json j;
  try {
    j = ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("schema " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

bool operator==(const FeatureSchema& a, const FeatureSchema& b) {
  return a.features == b.features && a.target.column == b.target.column &&
         a.target.positive == b.target.positive && a.sensitive.size() == b.sensitive.size() &&
         std::equal(a.sensitive.begin(), a.sensitive.end(), b.sensitive.begin(),
                    [](const SensitiveSpec& x, const SensitiveSpec& y) {
                      return x.column == y.column && x.privileged == y.privileged &&
                             x.unprivileged == y.unprivileged;
                    });
}

}  // namespace cfaudit::data
