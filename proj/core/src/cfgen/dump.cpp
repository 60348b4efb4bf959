#include "cfaudit/cfgen/dump.hpp"

#include <string>

#include "cfaudit/common/error.hpp"

namespace cfaudit::cfgen {

nlohmann::ordered_json row_to_json(const data::FeatureSchema& schema, std::span<const double> row) {
  if (row.size() != schema.feature_count()) throw ValidationError("row width does not match the schema");
  nlohmann::ordered_json out = nlohmann::ordered_json::object();
  for (std::size_t j = 0; j < row.size(); ++j) {
    const auto& spec = schema.features[j];
    if (spec.has_levels()) {
      out[spec.name] = spec.levels.at(static_cast<std::size_t>(row[j]));
    } else {
      out[spec.name] = row[j];
    }
  }
  return out;
}

std::vector<double> row_from_json(const data::FeatureSchema& schema, const nlohmann::ordered_json& j) {
  std::vector<double> row(schema.feature_count());
  for (std::size_t f = 0; f < row.size(); ++f) {
    const auto& spec = schema.features[f];
    if (!j.contains(spec.name)) throw DataError("dump row lacks feature '" + spec.name + "'");
    const auto& v = j.at(spec.name);
    if (spec.has_levels()) {
      const auto idx = spec.level_index(v.get<std::string>());
      if (!idx) throw DataError("dump row has an undeclared level for '" + spec.name + "'");
      row[f] = static_cast<double>(*idx);
    } else {
      row[f] = v.get<double>();
    }
  }
  return row;
}

void write_dump(std::ostream& out, const CounterfactualDump& dump) {
  nlohmann::ordered_json header{{"type", "header"}, {"schema", dump.schema.to_json()}, {"group", nullptr}};
  if (dump.group) {
    header["group"] = {{"column", dump.group->column},
                       {"privileged", dump.group->privileged},
                       {"unprivileged", dump.group->unprivileged}};
  }
  out << header.dump() << '\n';
  for (std::size_t i = 0; i < dump.sets.size(); ++i) {
    const auto& set = dump.sets[i];
    nlohmann::ordered_json members = nlohmann::ordered_json::array();
    for (const auto& m : set.members) {
      members.push_back({{"values", row_to_json(dump.schema, m.values)}, {"distance", m.distance}, {"valid", m.valid}});
    }
    nlohmann::ordered_json line{{"type", "sample"},
                                {"sample_id", set.sample_id},
                                {"strategy", std::string(to_string(set.strategy))},
                                {"seed", set.seed},
                                {"desired", set.desired},
                                {"requested", set.requested},
                                {"true_group", nullptr},
                                {"origin", row_to_json(dump.schema, set.origin)},
                                {"members", std::move(members)}};
    if (i < dump.true_groups.size() && dump.true_groups[i]) line["true_group"] = *dump.true_groups[i];
    out << line.dump() << '\n';
  }
}

CounterfactualDump read_dump(std::istream& in) {
  CounterfactualDump dump;
  std::string text;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, text)) {
    ++line_no;
    if (text.empty()) continue;
    nlohmann::ordered_json j;
    try {
      j = nlohmann::ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw DataError("dump line " + std::to_string(line_no) + ": " + e.what());
    }
    const auto type = j.value("type", std::string{});
    if (!have_header) {
      if (type != "header") throw DataError("dump must start with a header line");
      dump.schema = data::FeatureSchema::from_json(j.at("schema"));
      if (!j.at("group").is_null()) {
        const auto& g = j.at("group");
        dump.group = data::GroupSpec{g.at("column").get<std::string>(), g.at("privileged").get<std::string>(),
                                     g.at("unprivileged").get<std::string>()};
      }
      have_header = true;
      continue;
    }
    if (type != "sample") throw DataError("dump line " + std::to_string(line_no) + ": expected a sample record");
    CounterfactualSet set;
    set.sample_id = j.at("sample_id").get<std::size_t>();
    set.strategy = strategy_from_string(j.at("strategy").get<std::string>());
    set.seed = j.at("seed").get<std::uint64_t>();
    set.desired = j.at("desired").get<int>();
    set.requested = j.at("requested").get<std::size_t>();
    set.origin = row_from_json(dump.schema, j.at("origin"));
    for (const auto& m : j.at("members")) {
      set.members.push_back({row_from_json(dump.schema, m.at("values")), m.at("distance").get<double>(),
                             m.at("valid").get<bool>()});
    }
    dump.true_groups.push_back(j.at("true_group").is_null() ? std::nullopt
                                                             : std::optional<int>(j.at("true_group").get<int>()));
    dump.sets.push_back(std::move(set));
  }
  if (!have_header) throw DataError("empty counterfactual dump");
  return dump;
}

}  // namespace cfaudit::cfgen
