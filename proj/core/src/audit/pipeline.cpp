#include "cfaudit/audit/pipeline.hpp"

#include <chrono>

#include "cfaudit/cfgen/genetic.hpp"
#include "cfaudit/cfgen/kdtree.hpp"
#include "cfaudit/common/parallel.hpp"
#include "cfaudit/data/encoding.hpp"
#include "cfaudit/data/group_stats.hpp"
#include "cfaudit/data/split.hpp"
#include "cfaudit/fairmetrics/group_metrics.hpp"

namespace cfaudit::audit {

namespace {

class StageRunner {
 public:
  explicit StageRunner(std::vector<std::pair<std::string, double>>& timings) : timings_(timings) {}

  template <typename Fn>
  auto operator()(const std::string& stage, Fn&& fn) {
    const auto start = std::chrono::steady_clock::now();
    auto record = [&] {
      const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start;
      timings_.emplace_back(stage, dt.count());
    };
    try {
      if constexpr (std::is_void_v<decltype(fn())>) {
        fn();
        record();
      } else {
        auto result = fn();
        record();
        return result;
      }
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      throw StageError(stage, e.what());
    }
  }

 private:
  std::vector<std::pair<std::string, double>>& timings_;
};

FittedModel fit_model(const ModelConfig& mc, const data::EncodedMatrix& train, std::span<const int> labels,
                      std::uint64_t seed, unsigned workers, const data::EncodedMatrix& test,
                      std::span<const int> test_labels) {
  FittedModel fm;
  fm.spec = mc.spec;
  if (mc.spec.family != model::Family::external && !mc.grid.empty()) {
    model::CvConfig cv;
    cv.folds = mc.folds;
    cv.objective = mc.objective;
    cv.grid = mc.grid;
    cv.seed = seed;
    auto result = model::grid_search_cv(mc.spec.family, cv, train, labels, mc.spec.params, workers);
    fm.spec.params = result.best_params;
    fm.cv = std::move(result);
  }
  fm.handle = model::fit(fm.spec, train, labels, seed);
  fm.eval = model::evaluate(fm.handle, test, test_labels);
  return fm;
}

}  // namespace

AuditReport run_audit(const AuditConfig& config) {
  config.validate(true);
  std::vector<std::pair<std::string, double>> timings;
  StageRunner stage(timings);
  auto dataset = stage("load", [&] {
    if (config.synthetic) return generate_synthetic(*config.synthetic);
    const auto schema = data::FeatureSchema::load(config.schema);
    return data::load_csv(config.dataset, schema);
  });
  auto report = run_audit(config, dataset);
  report.timings.insert(report.timings.begin(), timings.begin(), timings.end());
  return report;
}

AuditReport run_audit(const AuditConfig& config, const data::Dataset& dataset) {
  config.validate(false);
  AuditReport report;
  report.config = config;
  report.schema = dataset.schema();
  StageRunner stage(report.timings);
  const auto& schema = dataset.schema();
  const unsigned workers = config.effective_workers();

  report.group = config.group.privileged.empty() ? schema.default_group(config.group.column) : config.group;
  schema.resolve_group(report.group);

  const auto split = stage("split", [&] {
    auto s = data::split_with_fallback(dataset, config.test_fraction, config.seeds.split);
    auto& st = report.data;
    st.rows = dataset.size();
    st.rows_dropped = dataset.provenance().rows_dropped;
    st.train = s.train.size();
    st.test = s.test.size();
    st.stratified_by = s.stratified_by == data::StratifyBy::target ? "target" : "target_and_sensitive";
    st.warnings = s.warnings;
    st.group_distribution = data::group_distribution(dataset, report.group);
    try {
      st.ex_ante_sp = Statistic::of(data::ex_ante_sp(dataset, report.group));
    } catch (const UndefinedStatisticError& e) {
      st.ex_ante_sp = Statistic::undefined(e.what());
    }
    return s;
  });

  const data::Encoder encoder(schema);
  for (const auto& col : encoder.column_map()) {
    for (const auto& s : schema.sensitive) {
      if (col.name == s.column) throw ValidationError("sensitive column '" + s.column + "' reached the encoder");
    }
  }
  const auto x_train = encoder.encode(split.train.features());
  const auto x_test = encoder.encode(split.test.features());
  const auto g_train = split.train.group_indicator(report.group);
  const auto g_test = split.test.group_indicator(report.group);

  report.decision_maker = stage("decision_maker", [&] {
    return fit_model(config.decision_maker, x_train, split.train.target(), config.seeds.decision_maker, workers,
                     x_test, split.test.target());
  });
  report.sensitive_classifier = stage("sensitive_classifier", [&] {
    return fit_model(config.sensitive_classifier, x_train, g_train, config.seeds.sensitive_classifier, workers,
                     x_test, g_test);
  });

  const auto decisions = stage("fairness", [&] {
    auto pred = report.decision_maker.handle.predict(x_test);
    report.dsp = fairmetrics::dsp(pred.labels, g_test);
    report.deo = fairmetrics::deo(pred.labels, split.test.target(), g_test);
    report.dao = fairmetrics::dao(pred.labels, split.test.target(), g_test);
    return pred;
  });

  std::vector<std::size_t> local;
  for (std::size_t i = 0; i < decisions.labels.size(); ++i) {
    if (decisions.labels[i] == 0) {
      local.push_back(i);
      report.negatives.push_back(split.test_rows[i]);
    }
  }
  const Matrix negatives = split.test.features().select_rows(local);

  const cfgen::DecisionProbe f(report.decision_maker.handle, encoder);
  const cfgen::DecisionProbe fs(report.sensitive_classifier.handle, encoder);
  const cfgen::FeatureDistance distance(schema, split.train.features());

  for (auto strategy : expand(config.strategy)) {
    const std::string name(cfgen::to_string(strategy));
    StrategyResult res;
    res.strategy = strategy;
    for (auto i : local) res.true_groups.push_back(g_test[i]);

    auto batch = stage("counterfactuals:" + name, [&] {
      std::unique_ptr<cfgen::CounterfactualGenerator> gen;
      if (strategy == cfgen::Strategy::kdtree) {
        gen = std::make_unique<cfgen::KdTreeGenerator>(split.train, f, distance);
      } else {
        gen = std::make_unique<cfgen::GeneticGenerator>(schema, split.train.features(), f, distance, config.genetic);
      }
      return cfgen::batch_generate(*gen, f, negatives, report.negatives, config.k, config.seeds.counterfactuals,
                                   workers);
    });
    res.sets = std::move(batch.sets);
    res.shortfall = batch.stats;
    for (const auto& set : res.sets) {
      for (const auto& m : set.members) res.invalid_members += m.valid ? 0 : 1;
    }

    stage("flips:" + name, [&] {
      res.records.resize(res.sets.size());
      parallel_for(res.sets.size(), workers, [&](std::size_t i) {
        res.records[i] = fairmetrics::cflips_sample(res.sets[i], res.true_groups[i], fs);
      });
      res.unprivileged = fairmetrics::cflips_group(res.records, fairmetrics::Group::unprivileged, config.ablation);
      res.privileged = fairmetrics::cflips_group(res.records, fairmetrics::Group::privileged, config.ablation);
      res.delta_cflips = fairmetrics::delta_cflips(res.unprivileged, res.privileged);
      res.ablation = fairmetrics::ablation_curve(res.records, config.ablation);
    });

    stage("proxy:" + name, [&] {
      try {
        res.proxy = proxy::proxy_correlations(encoder, res.sets, res.records, config.proxy_flipped_only);
      } catch (const ValidationError& e) {
        res.proxy_note = e.what();
        return;
      }
      res.proxy_top = proxy::top_k(*res.proxy, config.proxy_top_k, &res.proxy_note);
    });
    report.strategies.push_back(std::move(res));
  }
  return report;
}

}  // namespace cfaudit::audit
