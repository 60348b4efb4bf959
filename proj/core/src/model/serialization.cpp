#include "cfaudit/model/serialization.hpp"

#include <fstream>

#include "cfaudit/common/error.hpp"
#include "cfaudit/model/external_adapter.hpp"
#include "cfaudit/model/learners.hpp"

namespace cfaudit::model {

nlohmann::ordered_json model_to_json(const ClassifierHandle& handle) {
  nlohmann::ordered_json j;
  j["format"] = "cfaudit-model";
  j["version"] = 1;
  j["family"] = std::string(to_string(handle.family()));
  j["hyperparameters"] = handle.classifier().hyperparameters();
  j["parameters"] = handle.classifier().parameters();
  j["columns"] = data::column_map_to_json(handle.column_map());
  j["seed"] = handle.seed();
  j["threshold"] = handle.threshold();
  return j;
}

ClassifierHandle model_from_json(const nlohmann::ordered_json& j) {
  try {
    if (j.value("format", std::string()) != "cfaudit-model") throw ValidationError("not a cfaudit model document");
    const auto family = family_from_string(j.at("family").get<std::string>());
    const auto& hyper = j.at("hyperparameters");
    const auto& params = j.at("parameters");
    auto columns = std::make_shared<const ColumnMap>(data::column_map_from_json(j.at("columns")));
    std::shared_ptr<const Classifier> impl;
    switch (family) {
      case Family::logistic_regression: impl = LogisticRegression::from_json(hyper, params); break;
      case Family::decision_tree: impl = DecisionTree::from_json(hyper, params); break;
      case Family::mlp: impl = Mlp::from_json(hyper, params); break;
      case Family::external:
        impl = std::make_shared<ExternalClassifier>(AdapterConfig::from_json(hyper), *columns);
        break;
    }
    return ClassifierHandle(std::move(impl), std::move(columns), j.value("seed", std::uint64_t{0}),
                            j.value("threshold", 0.5));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed model document: ") + e.what());
  }
}

void save_model(const ClassifierHandle& handle, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << model_to_json(handle).dump(1) << '\n';
  if (!out) throw Error("write failed for " + path.string());
}

ClassifierHandle load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open model file " + path.string());
  try {
    return model_from_json(nlohmann::ordered_json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("model file " + path.string() + ": " + e.what());
  }
}

}  // namespace cfaudit::model
