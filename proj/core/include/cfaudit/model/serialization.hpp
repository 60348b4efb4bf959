#pragma once

#include <filesystem>

#include "cfaudit/model/classifier.hpp"

namespace cfaudit::model {

/// Self-describing model document: family, hyperparameters, fitted
/// parameters, column map, seed and decision threshold.
nlohmann::ordered_json model_to_json(const ClassifierHandle& handle);
ClassifierHandle model_from_json(const nlohmann::ordered_json& j);

void save_model(const ClassifierHandle& handle, const std::filesystem::path& path);
ClassifierHandle load_model(const std::filesystem::path& path);

}  // namespace cfaudit::model
