#pragma once

#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "cfaudit/cfgen/counterfactual.hpp"
#include "cfaudit/data/schema.hpp"

namespace cfaudit::cfgen {

/// Line-delimited JSON: a header line {"type":"header","schema":...,"group":...}
/// followed by one {"type":"sample",...} line per counterfactual set with
/// the origin row, strategy, seed, members (values, distance, valid) and,
/// when known, the origin's true group (1 = privileged).
struct CounterfactualDump {
  data::FeatureSchema schema;
  std::optional<data::GroupSpec> group;
  std::vector<CounterfactualSet> sets;
  std::vector<std::optional<int>> true_groups;
};

void write_dump(std::ostream& out, const CounterfactualDump& dump);
CounterfactualDump read_dump(std::istream& in);

nlohmann::ordered_json row_to_json(const data::FeatureSchema& schema, std::span<const double> row);
std::vector<double> row_from_json(const data::FeatureSchema& schema, const nlohmann::ordered_json& j);

}  // namespace cfaudit::cfgen
