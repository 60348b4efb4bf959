#include "cfaudit/cfgen/counterfactual.hpp"

#include <string>

#include "cfaudit/common/error.hpp"

namespace cfaudit::cfgen {

std::string_view to_string(Strategy s) { return s == Strategy::kdtree ? "kdtree" : "genetic"; }

Strategy strategy_from_string(std::string_view text) {
  if (text == "kdtree") return Strategy::kdtree;
  if (text == "genetic") return Strategy::genetic;
  throw ValidationError("unknown counterfactual strategy '" + std::string(text) + "'");
}

DecisionProbe::DecisionProbe(model::ClassifierHandle model, data::Encoder encoder)
    : model_(std::move(model)), encoder_(std::move(encoder)) {
  if (!model_.valid()) throw ValidationError("decision probe without a model");
  model_.check_columns(encoder_.column_map());
}

model::Prediction DecisionProbe::evaluate(const Matrix& schema_rows) const {
  if (schema_rows.empty()) return {};
  return model_.predict(encoder_.encode(schema_rows));
}

int DecisionProbe::label(std::span<const double> schema_row) const {
  Matrix one(1, schema_row.size(), std::vector<double>(schema_row.begin(), schema_row.end()));
  return evaluate(one).labels.at(0);
}

std::size_t revalidate(CounterfactualSet& set, const DecisionProbe& f) {
  if (set.members.empty()) return 0;
  Matrix rows;
  rows.reserve_rows(set.members.size());
  for (const auto& m : set.members) rows.append_row(m.values);
  const auto pred = f.evaluate(rows);
  std::size_t invalid = 0;
  for (std::size_t i = 0; i < set.members.size(); ++i) {
    set.members[i].valid = pred.labels[i] == set.desired;
    if (!set.members[i].valid) ++invalid;
  }
  return invalid;
}

}  // namespace cfaudit::cfgen
