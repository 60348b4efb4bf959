#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cfaudit/audit/synthetic.hpp"
#include "cfaudit/cfgen/counterfactual.hpp"
#include "cfaudit/cfgen/genetic.hpp"
#include "cfaudit/model/classifier.hpp"
#include "cfaudit/model/grid_search.hpp"
#include "json.hpp"

namespace cfaudit::audit {

enum class StrategyChoice { kdtree, genetic, both };

std::string_view to_string(StrategyChoice s);
StrategyChoice strategy_choice_from_string(std::string_view text);
std::vector<cfgen::Strategy> expand(StrategyChoice s);

/// A classifier to fit: family, base parameters and an optional CV grid.
struct ModelConfig {
  model::ModelSpec spec;
  nlohmann::ordered_json grid = nlohmann::ordered_json::object();
  int folds = 5;
  model::Objective objective = model::Objective::auc;

  static ModelConfig from_json(const nlohmann::ordered_json& j, model::Objective default_objective);
  nlohmann::ordered_json to_json() const;
};

struct Seeds {
  std::uint64_t split = 0;
  std::uint64_t decision_maker = 0;
  std::uint64_t sensitive_classifier = 0;
  std::uint64_t counterfactuals = 0;

  /// Every stream derived from one base seed.
  static Seeds derive(std::uint64_t base);
  nlohmann::ordered_json to_json() const;
};

struct AuditConfig {
  std::vector<std::filesystem::path> dataset;  ///< resolved paths
  std::filesystem::path schema;
  std::vector<std::string> dataset_text;  ///< paths as written, for the report echo
  std::string schema_text;
  /// Generated data in place of dataset + schema.
  std::optional<SyntheticSpec> synthetic;
  /// Sensitive column; privileged/unprivileged empty means the schema's
  /// declared orientation.
  data::GroupSpec group;
  ModelConfig decision_maker;
  ModelConfig sensitive_classifier;
  StrategyChoice strategy = StrategyChoice::kdtree;
  std::size_t k = 100;
  double test_fraction = 0.10;
  std::uint64_t seed = 0;
  Seeds seeds;
  cfgen::GeneticConfig genetic;
  std::vector<std::size_t> ablation{1, 5, 10, 20, 50, 100};
  std::size_t proxy_top_k = 6;
  bool proxy_flipped_only = false;
  std::filesystem::path output = "audit-out";
  /// 0 = available parallelism. Never part of the report.
  unsigned workers = 0;

  /// Throws ValidationError on any invalid field.
  void validate(bool check_files = true) const;

  /// Relative paths resolve against `base_dir`.
  static AuditConfig from_json(const nlohmann::ordered_json& j, const std::filesystem::path& base_dir);
  static AuditConfig load(const std::filesystem::path& path);
  /// Report echo: every field except output and workers.
  nlohmann::ordered_json to_json() const;

  unsigned effective_workers() const;
  void set_seed(std::uint64_t base);
};

}  // namespace cfaudit::audit
