#include "cfaudit/audit/config.hpp"

#include <fstream>

#include "cfaudit/common/error.hpp"
#include "cfaudit/common/json_keys.hpp"
#include "cfaudit/common/parallel.hpp"
#include "cfaudit/common/random.hpp"

namespace cfaudit::audit {

namespace fs = std::filesystem;

std::string_view to_string(StrategyChoice s) {
  switch (s) {
    case StrategyChoice::kdtree: return "kdtree";
    case StrategyChoice::genetic: return "genetic";
    case StrategyChoice::both: return "both";
  }
  return "kdtree";
}

StrategyChoice strategy_choice_from_string(std::string_view text) {
  if (text == "kdtree") return StrategyChoice::kdtree;
  if (text == "genetic") return StrategyChoice::genetic;
  if (text == "both") return StrategyChoice::both;
  throw ValidationError("strategy must be kdtree, genetic or both, got '" + std::string(text) + "'");
}

std::vector<cfgen::Strategy> expand(StrategyChoice s) {
  switch (s) {
    case StrategyChoice::kdtree: return {cfgen::Strategy::kdtree};
    case StrategyChoice::genetic: return {cfgen::Strategy::genetic};
    case StrategyChoice::both: return {cfgen::Strategy::kdtree, cfgen::Strategy::genetic};
  }
  return {};
}

ModelConfig ModelConfig::from_json(const nlohmann::ordered_json& j, model::Objective default_objective) {
  expect_keys(j, {"family", "params", "grid", "folds", "objective"}, "model config");
  ModelConfig m;
  m.spec = model::ModelSpec::from_json(j);
  if (!m.spec.params.is_object()) m.spec.params = nlohmann::ordered_json::object();
  if (j.contains("grid")) m.grid = j.at("grid");
  m.folds = j.value("folds", m.folds);
  m.objective = j.contains("objective") ? model::objective_from_string(j.at("objective").get<std::string>())
                                        : default_objective;
  return m;
}

nlohmann::ordered_json ModelConfig::to_json() const {
  auto j = spec.to_json();
  j["grid"] = grid;
  j["folds"] = folds;
  j["objective"] = std::string(model::to_string(objective));
  return j;
}

Seeds Seeds::derive(std::uint64_t base) {
  return {derive_seed(base, 0), derive_seed(base, 1), derive_seed(base, 2), derive_seed(base, 3)};
}

nlohmann::ordered_json Seeds::to_json() const {
  return {{"split", split},
          {"decision_maker", decision_maker},
          {"sensitive_classifier", sensitive_classifier},
          {"counterfactuals", counterfactuals}};
}

void AuditConfig::set_seed(std::uint64_t base) {
  seed = base;
  seeds = Seeds::derive(base);
}

unsigned AuditConfig::effective_workers() const { return workers ? workers : default_workers(); }

void AuditConfig::validate(bool check_files) const {
  if (k < 1) throw ValidationError("k must be at least 1");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ValidationError("test_fraction must lie in (0, 1)");
  if (group.column.empty()) throw ValidationError("group.column is required");
  for (auto l : ablation) {
    if (l < 1) throw ValidationError("ablation prefix lengths must be at least 1");
  }
  if (strategy != StrategyChoice::kdtree) genetic.validate(k);
  for (const auto* m : {&decision_maker, &sensitive_classifier}) {
    if (m->folds < 2) throw ValidationError("folds must be at least 2");
    if (!m->grid.is_object()) throw ValidationError("grid must be an object");
  }
  if (synthetic) {
    synthetic->validate();
  } else if (check_files) {
    if (dataset.empty()) throw ValidationError("dataset path is required");
    for (const auto& p : dataset) {
      if (!fs::exists(p)) throw ValidationError("dataset file not found: " + p.string());
    }
    if (!fs::exists(schema)) throw ValidationError("schema file not found: " + schema.string());
  }
}

AuditConfig AuditConfig::from_json(const nlohmann::ordered_json& j, const fs::path& base_dir) {
  AuditConfig c;
  auto resolve = [&](const std::string& p) {
    fs::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  };
  expect_keys(j,
              {"dataset", "schema", "synthetic", "group", "decision_maker", "sensitive_classifier",
               "strategy", "k", "test_fraction", "seed", "seeds", "genetic", "ablation", "proxy", "output",
               "workers"},
              "audit config");
  try {
    if (j.contains("dataset")) {
      const auto& d = j.at("dataset");
      if (d.is_string()) {
        c.dataset_text.push_back(d.get<std::string>());
      } else {
        c.dataset_text = d.get<std::vector<std::string>>();
      }
      for (const auto& p : c.dataset_text) c.dataset.push_back(resolve(p));
    }
    if (j.contains("schema")) {
      c.schema_text = j.at("schema").get<std::string>();
      c.schema = resolve(c.schema_text);
    }
    if (j.contains("synthetic")) c.synthetic = SyntheticSpec::from_json(j.at("synthetic"));
    const auto& g = j.at("group");
    if (g.is_string()) {
      c.group.column = g.get<std::string>();
    } else {
      expect_keys(g, {"column", "privileged", "unprivileged"}, "group");
      c.group.column = g.at("column").get<std::string>();
      c.group.privileged = g.value("privileged", std::string{});
      c.group.unprivileged = g.value("unprivileged", std::string{});
    }
    c.decision_maker = ModelConfig::from_json(j.at("decision_maker"), model::Objective::auc);
    c.sensitive_classifier = ModelConfig::from_json(j.at("sensitive_classifier"), model::Objective::f1);
    if (j.contains("strategy")) c.strategy = strategy_choice_from_string(j.at("strategy").get<std::string>());
    if (j.contains("k")) {
      const auto k = j.at("k").get<long long>();
      if (k < 1) throw ValidationError("k must be at least 1");
      c.k = static_cast<std::size_t>(k);
    }
    c.test_fraction = j.value("test_fraction", c.test_fraction);
    c.set_seed(j.value("seed", std::uint64_t{0}));
    if (j.contains("seeds")) {
      const auto& s = j.at("seeds");
      expect_keys(s, {"split", "decision_maker", "sensitive_classifier", "counterfactuals"}, "seeds");
      c.seeds.split = s.value("split", c.seeds.split);
      c.seeds.decision_maker = s.value("decision_maker", c.seeds.decision_maker);
      c.seeds.sensitive_classifier = s.value("sensitive_classifier", c.seeds.sensitive_classifier);
      c.seeds.counterfactuals = s.value("counterfactuals", c.seeds.counterfactuals);
    }
    if (j.contains("genetic")) c.genetic = cfgen::GeneticConfig::from_json(j.at("genetic"));
    if (j.contains("ablation")) c.ablation = j.at("ablation").get<std::vector<std::size_t>>();
    if (j.contains("proxy")) {
      expect_keys(j.at("proxy"), {"top_k", "flipped_only"}, "proxy");
      c.proxy_top_k = j.at("proxy").value("top_k", c.proxy_top_k);
      c.proxy_flipped_only = j.at("proxy").value("flipped_only", c.proxy_flipped_only);
    }
    if (j.contains("output")) c.output = resolve(j.at("output").get<std::string>());
    c.workers = j.value("workers", 0u);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("invalid audit config: ") + e.what());
  }
  return c;
}

AuditConfig AuditConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config " + path.string());
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return from_json(j, path.parent_path());
}

nlohmann::ordered_json AuditConfig::to_json() const {
  nlohmann::ordered_json g{{"column", group.column}, {"privileged", group.privileged},
                           {"unprivileged", group.unprivileged}};
  nlohmann::ordered_json j;
  if (synthetic) {
    j["synthetic"] = synthetic->to_json();
  } else {
    j["dataset"] = dataset_text;
    j["schema"] = schema_text;
  }
  j.update(nlohmann::ordered_json{{"group", std::move(g)},
          {"decision_maker", decision_maker.to_json()},
          {"sensitive_classifier", sensitive_classifier.to_json()},
          {"strategy", std::string(to_string(strategy))},
          {"k", k},
          {"test_fraction", test_fraction},
          {"seed", seed},
          {"genetic", genetic.to_json()},
          {"ablation", ablation},
          {"proxy", {{"top_k", proxy_top_k}, {"flipped_only", proxy_flipped_only}}}});
  return j;
}

}  // namespace cfaudit::audit
