#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "cfaudit/audit/pipeline.hpp"
#include "cfaudit/audit/synthetic.hpp"
#include "cfaudit/cfgen/dump.hpp"
#include "cfaudit/common/format.hpp"
#include "cfaudit/data/group_stats.hpp"
#include "cfaudit/model/serialization.hpp"

namespace fs = std::filesystem;
using namespace cfaudit;
using nlohmann::ordered_json;

namespace {

struct DumpInputs {
  cfgen::CounterfactualDump dump;
  std::vector<fairmetrics::FlipRecord> records;
  data::Encoder encoder;
};

DumpInputs load_dump(const fs::path& dump_path, const fs::path& model_path) {
  std::ifstream in(dump_path);
  if (!in) throw ValidationError("cannot open dump " + dump_path.string());
  auto dump = cfgen::read_dump(in);
  data::Encoder encoder(dump.schema);
  const cfgen::DecisionProbe fs(model::load_model(model_path), encoder);
  std::vector<fairmetrics::FlipRecord> records;
  for (std::size_t i = 0; i < dump.sets.size(); ++i) {
    if (!dump.true_groups[i]) throw ValidationError("dump sample without a true group");
    records.push_back(fairmetrics::cflips_sample(dump.sets[i], *dump.true_groups[i], fs));
  }
  return {std::move(dump), std::move(records), std::move(encoder)};
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

int run_audit_command(const std::string& config_path, const std::string& strategy, long long k,
                      std::optional<std::uint64_t> seed, unsigned workers, const std::string& out) {
  auto config = audit::AuditConfig::load(config_path);
  if (!strategy.empty()) config.strategy = audit::strategy_choice_from_string(strategy);
  if (k != -1) {
    if (k < 1) throw ValidationError("k must be at least 1");
    config.k = static_cast<std::size_t>(k);
  }
  if (seed) config.set_seed(*seed);
  if (workers) config.workers = workers;
  if (!out.empty()) config.output = out;
  config.validate(true);
  const auto report = audit::run_audit(config);
  audit::emit_report(report, config.output);
  for (const auto& s : report.strategies) {
    std::cout << cfgen::to_string(s.strategy) << ": negatives=" << s.sets.size() << " unprivileged="
              << (s.unprivileged.mean.defined() ? format_double(*s.unprivileged.mean) : "undefined")
              << " privileged=" << (s.privileged.mean.defined() ? format_double(*s.privileged.mean) : "undefined")
              << " delta_cflips=" << (s.delta_cflips.defined() ? format_double(*s.delta_cflips) : "undefined")
              << '\n';
  }
  std::cout << "report written to " << (config.output / "report.json").string() << '\n';
  return 0;
}

int run_metrics_command(const std::string& dump_path, const std::string& model_path,
                        const std::vector<std::size_t>& ablation, const std::string& out) {
  const auto in = load_dump(dump_path, model_path);
  const auto u = fairmetrics::cflips_group(in.records, fairmetrics::Group::unprivileged, ablation);
  const auto p = fairmetrics::cflips_group(in.records, fairmetrics::Group::privileged, ablation);
  ordered_json j;
  j["samples"] = in.records.size();
  j["unprivileged"] = {{"included", u.included}, {"mean_cflips", audit::statistic_to_json(u.mean)}};
  j["privileged"] = {{"included", p.included}, {"mean_cflips", audit::statistic_to_json(p.mean)}};
  j["delta_cflips"] = audit::statistic_to_json(fairmetrics::delta_cflips(u, p));
  const auto curve = fairmetrics::ablation_curve(in.records, ablation);
  ordered_json rows = ordered_json::array();
  for (const auto& r : curve) rows.push_back({{"length", r.length}, {"delta", audit::statistic_to_json(r.delta)}});
  j["ablation"] = std::move(rows);
  std::cout << j.dump(2) << '\n';
  if (!out.empty()) {
    fs::create_directories(out);
    std::ostringstream flips, abl;
    audit::write_flips_csv(flips, in.records);
    audit::write_ablation_csv(abl, curve);
    write_file(fs::path(out) / "flips.csv", flips.str());
    write_file(fs::path(out) / "ablation.csv", abl.str());
    write_file(fs::path(out) / "metrics.json", j.dump(2) + "\n");
  }
  return 0;
}

int run_proxy_command(const std::string& dump_path, const std::string& model_path, std::size_t top,
                      bool flipped_only, const std::string& out) {
  const auto in = load_dump(dump_path, model_path);
  const auto report = proxy::proxy_correlations(in.encoder, in.dump.sets, in.records, flipped_only);
  std::string warning;
  const auto best = proxy::top_k(report, top, &warning);
  if (!warning.empty()) std::cerr << "warning: " << warning << '\n';
  std::cout << "pairs=" << report.n_pairs << '\n';
  for (const auto& e : best) std::cout << e.label() << ' ' << format_double(*e.rho) << '\n';
  if (!out.empty()) {
    fs::create_directories(out);
    std::ostringstream csv;
    proxy::write_proxy_csv(csv, report);
    write_file(fs::path(out) / "proxy.csv", csv.str());
  }
  return 0;
}

int run_synth_command(const audit::SyntheticSpec& spec, const std::string& out) {
  const auto dataset = audit::generate_synthetic(spec);
  fs::create_directories(out);
  std::ostringstream csv;
  audit::write_synthetic_csv(dataset, csv);
  write_file(fs::path(out) / "synthetic.csv", csv.str());
  write_file(fs::path(out) / "synthetic.schema.json", dataset.schema().to_json().dump(2) + "\n");
  std::cout << "rows=" << dataset.size() << " expected_sp=" << format_double(audit::synthetic_expected_sp(spec))
            << '\n';
  return 0;
}

int run_inspect_command(const std::string& schema_path, const std::vector<std::string>& data_paths) {
  const auto schema = data::FeatureSchema::load(schema_path);
  std::cout << "features=" << schema.feature_count() << " target=" << schema.target.column << '\n';
  for (const auto& f : schema.features) {
    std::cout << "  " << f.name << ' ' << data::to_string(f.kind);
    if (f.has_levels()) std::cout << " levels=" << f.levels.size();
    if (f.immutable) std::cout << " immutable";
    std::cout << '\n';
  }
  for (const auto& s : schema.sensitive) {
    std::cout << "sensitive " << s.column << " privileged=" << s.privileged << " unprivileged=" << s.unprivileged
              << '\n';
  }
  if (data_paths.empty()) return 0;
  std::vector<fs::path> paths(data_paths.begin(), data_paths.end());
  const auto dataset = data::load_csv(paths, schema);
  std::cout << "rows=" << dataset.size() << " dropped=" << dataset.provenance().rows_dropped << '\n';
  for (const auto& s : schema.sensitive) {
    const auto g = schema.default_group(s.column);
    const auto [priv, unpriv] = data::group_distribution(dataset, g);
    std::cout << s.column << ": P(privileged)=" << format_double(priv) << " P(unprivileged)=" << format_double(unpriv)
              << " ex_ante_sp=" << format_double(data::ex_ante_sp(dataset, g)) << '\n';
  }
  std::cout << "feature,sensitive,pearson,spearman\n";
  for (const auto& c : data::sensitive_correlations(dataset)) {
    std::cout << csv_field(c.feature) << ',' << c.sensitive << ','
              << (c.defined ? format_double(c.pearson) : "") << ',' << (c.defined ? format_double(c.spearman) : "")
              << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Counterfactual bias auditing"};
  app.require_subcommand(1);

  std::string config_path, strategy, out;
  long long k = -1;
  std::optional<std::uint64_t> seed;
  unsigned workers = 0;
  auto* audit_cmd = app.add_subcommand("audit", "Run the full audit pipeline");
  audit_cmd->add_option("--config", config_path, "Audit configuration (JSON)")->required()->check(CLI::ExistingFile);
  audit_cmd->add_option("--strategy", strategy, "kdtree, genetic or both");
  audit_cmd->add_option("--k", k, "Counterfactuals per negative sample");
  audit_cmd->add_option("--seed", seed, "Base seed");
  audit_cmd->add_option("--workers", workers, "Worker threads (0 = all cores)");
  audit_cmd->add_option("--out", out, "Output directory");

  std::string dump_path, model_path;
  std::vector<std::size_t> ablation{1, 5, 10, 20, 50, 100};
  auto* metrics_cmd = app.add_subcommand("metrics", "Recompute flip metrics from a counterfactual dump");
  metrics_cmd->add_option("--dump", dump_path, "Counterfactual dump (JSONL)")->required()->check(CLI::ExistingFile);
  metrics_cmd->add_option("--sensitive-model", model_path, "Sensitive classifier model")
      ->required()
      ->check(CLI::ExistingFile);
  metrics_cmd->add_option("--ablation", ablation, "Prefix lengths")->delimiter(',');
  metrics_cmd->add_option("--out", out, "Output directory");

  std::size_t top = 6;
  bool flipped_only = false;
  auto* proxy_cmd = app.add_subcommand("proxy", "Rank proxy features from a counterfactual dump");
  proxy_cmd->add_option("--dump", dump_path, "Counterfactual dump (JSONL)")->required()->check(CLI::ExistingFile);
  proxy_cmd->add_option("--sensitive-model", model_path, "Sensitive classifier model")
      ->required()
      ->check(CLI::ExistingFile);
  proxy_cmd->add_option("--top", top, "Entries to list");
  proxy_cmd->add_flag("--flipped-only", flipped_only, "Use flipped pairs only");
  proxy_cmd->add_option("--out", out, "Output directory");

  audit::SyntheticSpec synth;
  std::uint64_t synth_seed = 0;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a planted-proxy dataset");
  synth_cmd->add_option("--n", synth.n, "Rows");
  synth_cmd->add_option("--beta", synth.beta, "Proxy strength in [0, 1]");
  synth_cmd->add_option("--label-gap", synth.label_gap, "Label shift between groups per unit beta");
  synth_cmd->add_option("--label-noise", synth.label_noise, "Label noise sd");
  synth_cmd->add_option("--noise-features", synth.noise_features, "Independent numeric features");
  synth_cmd->add_option("--seed", synth_seed, "Seed");
  synth_cmd->add_option("--out", out, "Output directory")->required();

  std::string schema_path;
  std::vector<std::string> data_paths;
  auto* inspect_cmd = app.add_subcommand("inspect-schema", "Describe a schema and its sensitive correlations");
  inspect_cmd->add_option("--schema", schema_path, "Schema (JSON)")->required()->check(CLI::ExistingFile);
  inspect_cmd->add_option("--data", data_paths, "CSV file(s)")->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*audit_cmd) return run_audit_command(config_path, strategy, k, seed, workers, out);
    if (*metrics_cmd) return run_metrics_command(dump_path, model_path, ablation, out);
    if (*proxy_cmd) return run_proxy_command(dump_path, model_path, top, flipped_only, out);
    if (*synth_cmd) {
      synth.seed = synth_seed;
      return run_synth_command(synth, out);
    }
    if (*inspect_cmd) return run_inspect_command(schema_path, data_paths);
  } catch (const audit::StageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
