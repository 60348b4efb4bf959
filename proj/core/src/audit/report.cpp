#include <fstream>

#include "cfaudit/audit/pipeline.hpp"
#include "cfaudit/cfgen/dump.hpp"
#include "cfaudit/common/format.hpp"
#include "cfaudit/model/serialization.hpp"

namespace cfaudit::audit {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

ordered_json statistic_to_json(const Statistic& s) {
  if (s.defined()) return *s;
  return {{"undefined", s.undefined_reason}};
}

ordered_json eval_to_json(const model::EvalReport& e) {
  return {{"acc", e.acc},
          {"precision", e.precision},
          {"recall", e.recall},
          {"f1", e.f1},
          {"auc", statistic_to_json(e.auc)},
          {"confusion", {{"tp", e.confusion.tp}, {"fp", e.confusion.fp}, {"tn", e.confusion.tn}, {"fn", e.confusion.fn}}}};
}

namespace {

ordered_json optional_to_json(const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); }

ordered_json model_json(const FittedModel& m) {
  ordered_json j{{"family", std::string(model::to_string(m.spec.family))}, {"params", m.spec.params}};
  ordered_json warnings = m.handle.warnings();
  if (m.cv) {
    ordered_json cells = ordered_json::array();
    for (const auto& c : m.cv->cells) {
      ordered_json folds = ordered_json::array();
      for (const auto& s : c.fold_scores) folds.push_back(optional_to_json(s));
      cells.push_back({{"params", c.params}, {"mean", optional_to_json(c.mean)}, {"folds", std::move(folds)}});
    }
    j["cv"] = {{"best", m.cv->best}, {"cells", std::move(cells)}};
    for (const auto& w : m.cv->warnings) warnings.push_back(w);
  } else {
    j["cv"] = nullptr;
  }
  j["warnings"] = std::move(warnings);
  j["test"] = eval_to_json(m.eval);
  return j;
}

ordered_json summary_json(const fairmetrics::GroupFlipSummary& s) {
  return {{"records", s.records},
          {"included", s.included},
          {"excluded_misprediction", s.excluded_misprediction},
          {"excluded_empty", s.excluded_empty},
          {"mean_cflips", statistic_to_json(s.mean)}};
}

ordered_json entry_json(const proxy::ProxyEntry& e) {
  return {{"feature", e.feature},
          {"level", e.level ? ordered_json(*e.level) : ordered_json(nullptr)},
          {"rho", statistic_to_json(e.rho)},
          {"n_pairs", e.n_pairs}};
}

ordered_json strategy_json(const StrategyResult& r) {
  ordered_json j;
  j["strategy"] = std::string(cfgen::to_string(r.strategy));
  j["samples"] = r.sets.size();
  if (r.sets.empty()) j["empty"] = "no negatively predicted test samples";
  j["shortfall"] = {{"samples_with_shortfall", r.shortfall.with_shortfall},
                    {"empty", r.shortfall.empty},
                    {"total_members", r.shortfall.total_members},
                    {"median_size", r.shortfall.median_size}};
  j["invalid_members"] = r.invalid_members;
  j["groups"] = {{"unprivileged", summary_json(r.unprivileged)}, {"privileged", summary_json(r.privileged)}};
  j["delta_cflips"] = statistic_to_json(r.delta_cflips);
  ordered_json ablation = ordered_json::array();
  for (const auto& row : r.ablation) {
    ablation.push_back({{"length", row.length},
                        {"unprivileged", statistic_to_json(row.unprivileged)},
                        {"privileged", statistic_to_json(row.privileged)},
                        {"delta", statistic_to_json(row.delta)}});
  }
  j["ablation"] = std::move(ablation);
  ordered_json px;
  if (r.proxy) {
    px["n_pairs"] = r.proxy->n_pairs;
    px["flipped_only"] = r.proxy->flipped_only;
    ordered_json top = ordered_json::array();
    for (const auto& e : r.proxy_top) top.push_back(entry_json(e));
    px["top"] = std::move(top);
    ordered_json features = ordered_json::array();
    for (const auto& f : r.proxy->features) {
      features.push_back({{"feature", f.feature},
                          {"level", f.level ? ordered_json(*f.level) : ordered_json(nullptr)},
                          {"rho", statistic_to_json(f.rho)}});
    }
    px["features"] = std::move(features);
    ordered_json entries = ordered_json::array();
    for (const auto& e : r.proxy->entries) entries.push_back(entry_json(e));
    px["entries"] = std::move(entries);
  }
  px["note"] = r.proxy_note;
  j["proxy"] = std::move(px);
  return j;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed: " + path.string());
}

template <typename Fn>
void write_stream(const fs::path& path, Fn&& fn) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  fn(out);
  if (!out) throw Error("write failed: " + path.string());
}

}  // namespace

ordered_json AuditReport::to_json() const {
  ordered_json j;
  j["format"] = "cfaudit-report";
  j["version"] = 1;
  j["config"] = config.to_json();
  j["seeds"] = config.seeds.to_json();
  j["group"] = {{"column", group.column}, {"privileged", group.privileged}, {"unprivileged", group.unprivileged}};
  j["data"] = {{"rows", data.rows},
               {"rows_dropped", data.rows_dropped},
               {"train", data.train},
               {"test", data.test},
               {"stratified_by", data.stratified_by},
               {"group_distribution",
                {{"privileged", data.group_distribution.first}, {"unprivileged", data.group_distribution.second}}},
               {"ex_ante_sp", statistic_to_json(data.ex_ante_sp)},
               {"warnings", data.warnings}};
  j["decision_maker"] = model_json(decision_maker);
  j["sensitive_classifier"] = model_json(sensitive_classifier);
  j["fairness"] = {{"dsp", statistic_to_json(dsp)}, {"deo", statistic_to_json(deo)}, {"dao", statistic_to_json(dao)}};
  j["negatives"] = negatives.size();
  ordered_json strategies_json = ordered_json::array();
  for (const auto& s : strategies) strategies_json.push_back(strategy_json(s));
  j["counterfactuals"] = std::move(strategies_json);
  return j;
}

void write_flips_csv(std::ostream& out, std::span<const fairmetrics::FlipRecord> records) {
  out << "sample_id,group,members,flipped,cflips\n";
  for (const auto& r : records) {
    if (!r.included) continue;
    out << r.sample_id << ',' << (r.group == 1 ? "privileged" : "unprivileged") << ',' << r.member_labels.size()
        << ',' << r.flipped() << ',' << format_double(*r.cflips) << '\n';
  }
}

void write_ablation_csv(std::ostream& out, std::span<const fairmetrics::AblationRow> rows) {
  auto cell = [](const Statistic& s) { return s.defined() ? format_double(*s) : std::string(); };
  out << "length,unprivileged,privileged,delta\n";
  for (const auto& r : rows) {
    out << r.length << ',' << cell(r.unprivileged) << ',' << cell(r.privileged) << ',' << cell(r.delta) << '\n';
  }
}

void emit_report(const AuditReport& report, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir / "models", ec);
  if (ec) throw Error("cannot create output directory " + dir.string() + ": " + ec.message());

  write_text(dir / "report.json", report.to_json().dump(2) + "\n");
  ordered_json timings = ordered_json::object();
  for (const auto& [stage, seconds] : report.timings) timings[stage] = seconds;
  write_text(dir / "timings.json", timings.dump(2) + "\n");
  model::save_model(report.decision_maker.handle, dir / "models" / "decision_maker.json");
  model::save_model(report.sensitive_classifier.handle, dir / "models" / "sensitive_classifier.json");

  for (const auto& s : report.strategies) {
    const std::string name(cfgen::to_string(s.strategy));
    cfgen::CounterfactualDump dump;
    dump.schema = report.schema;
    dump.group = report.group;
    dump.sets = s.sets;
    for (int g : s.true_groups) dump.true_groups.push_back(g);
    write_stream(dir / ("counterfactuals_" + name + ".jsonl"), [&](std::ostream& out) { cfgen::write_dump(out, dump); });
    write_stream(dir / ("flips_" + name + ".csv"), [&](std::ostream& out) { write_flips_csv(out, s.records); });
    write_stream(dir / ("ablation_" + name + ".csv"), [&](std::ostream& out) { write_ablation_csv(out, s.ablation); });
    if (s.proxy) {
      write_stream(dir / ("proxy_" + name + ".csv"), [&](std::ostream& out) { proxy::write_proxy_csv(out, *s.proxy); });
    }
  }
}

}  // namespace cfaudit::audit
