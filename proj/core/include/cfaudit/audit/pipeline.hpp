#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cfaudit/audit/config.hpp"
#include "cfaudit/cfgen/batch.hpp"
#include "cfaudit/common/error.hpp"
#include "cfaudit/data/dataset.hpp"
#include "cfaudit/fairmetrics/flips.hpp"
#include "cfaudit/model/evaluation.hpp"
#include "cfaudit/model/grid_search.hpp"
#include "cfaudit/proxy/proxy.hpp"
#include "json.hpp"

namespace cfaudit::audit {

/// A pipeline stage failed; `stage()` names it.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& message)
      : Error("stage '" + stage + "' failed: " + message), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct DataStats {
  std::size_t rows = 0;
  std::size_t rows_dropped = 0;
  std::size_t train = 0;
  std::size_t test = 0;
  std::string stratified_by;
  std::pair<double, double> group_distribution;  ///< (privileged, unprivileged)
  Statistic ex_ante_sp;
  std::vector<std::string> warnings;
};

struct FittedModel {
  model::ModelSpec spec;  ///< chosen parameters
  std::optional<model::CvResult> cv;
  model::ClassifierHandle handle;
  model::EvalReport eval;
};

struct StrategyResult {
  cfgen::Strategy strategy = cfgen::Strategy::kdtree;
  std::vector<cfgen::CounterfactualSet> sets;
  std::vector<int> true_groups;  ///< per set, 1 = privileged
  std::vector<fairmetrics::FlipRecord> records;
  cfgen::ShortfallStats shortfall;
  std::size_t invalid_members = 0;
  fairmetrics::GroupFlipSummary unprivileged;
  fairmetrics::GroupFlipSummary privileged;
  Statistic delta_cflips;
  std::vector<fairmetrics::AblationRow> ablation;
  std::optional<proxy::ProxyReport> proxy;
  std::vector<proxy::ProxyEntry> proxy_top;
  std::string proxy_note;
};

struct AuditReport {
  AuditConfig config;
  data::FeatureSchema schema;
  data::GroupSpec group;  ///< resolved orientation
  DataStats data;
  FittedModel decision_maker;
  FittedModel sensitive_classifier;
  Statistic dsp, deo, dao;
  std::vector<std::size_t> negatives;  ///< source row ids of X-
  std::vector<StrategyResult> strategies;
  std::vector<std::pair<std::string, double>> timings;  ///< seconds per stage

  /// Deterministic report document (no timings).
  nlohmann::ordered_json to_json() const;
};

/// Runs the whole audit on an already loaded dataset.
AuditReport run_audit(const AuditConfig& config, const data::Dataset& dataset);

/// Loads schema and dataset from the config paths, then runs the audit.
AuditReport run_audit(const AuditConfig& config);

/// Writes report.json, timings.json, models/, counterfactual dumps and the
/// CSV bundle (flips, ablation, proxy) into `dir`.
void emit_report(const AuditReport& report, const std::filesystem::path& dir);

nlohmann::ordered_json statistic_to_json(const Statistic& s);
nlohmann::ordered_json eval_to_json(const model::EvalReport& e);

/// One row per included flip record.
void write_flips_csv(std::ostream& out, std::span<const fairmetrics::FlipRecord> records);
void write_ablation_csv(std::ostream& out, std::span<const fairmetrics::AblationRow> rows);

}  // namespace cfaudit::audit
