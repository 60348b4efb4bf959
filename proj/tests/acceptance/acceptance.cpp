// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion.
#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "cfaudit/audit/pipeline.hpp"
#include "cfaudit/cfgen/dump.hpp"
#include "cfaudit/cfgen/genetic.hpp"
#include "cfaudit/cfgen/kdtree.hpp"
#include "cfaudit/data/group_stats.hpp"
#include "cfaudit/data/split.hpp"
#include "cfaudit/fairmetrics/flips.hpp"
#include "cfaudit/fairmetrics/group_metrics.hpp"
#include "cfaudit/model/evaluation.hpp"
#include "cfaudit/model/learners.hpp"
#include "oracles.hpp"
#include "testing.hpp"

namespace fs = std::filesystem;
using namespace cfaudit;
using nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      if (pass) detail << "failed: ";
      else detail << "; ";
      detail << what;
      pass = false;
    }
  }
};

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(precision) << v;
  return s.str();
}

void criterion_1(Outcome& o) {
  const auto start = Clock::now();
  const auto adult_schema = data::FeatureSchema::load(testing_support::source_path("data/schemas/adult.json"));
  const std::vector<fs::path> adult_files{testing_support::source_path("data/uci/adult.data"),
                                          testing_support::source_path("data/uci/adult.test")};
  const auto adult = data::load_csv(adult_files, adult_schema);
  const auto adult_split = data::split_with_fallback(adult, 0.1, audit::Seeds::derive(0).split);
  const double sp_sex = data::ex_ante_sp(adult, adult_schema.default_group("sex"));
  const double sp_marital = data::ex_ante_sp(adult, adult_schema.default_group("marital-status"));

  const auto german_schema = data::FeatureSchema::load(testing_support::source_path("data/schemas/german.json"));
  const auto german = data::load_csv(testing_support::source_path("data/uci/german.data"), german_schema);
  const auto german_split = data::split_with_fallback(german, 0.1, audit::Seeds::derive(0).split);
  const double sp_german = data::ex_ante_sp(german, german_schema.default_group("sex"));
  const double elapsed = seconds_since(start);

  o.require(adult_split.train.size() == 40699 && adult_split.test.size() == 4523, "adult split");
  o.require(std::abs(sp_sex - 0.199) <= 0.005, "adult gender SP");
  o.require(std::abs(sp_marital - 0.378) <= 0.005, "adult marital SP");
  o.require(german_split.train.size() == 900 && german_split.test.size() == 100, "german split");
  o.require(std::abs(sp_german - 0.075) <= 0.005, "german SP");
  o.require(elapsed < 30, "runtime");
  o.detail << " adult " << adult_split.train.size() << "/" << adult_split.test.size() << " SP gender "
           << fmt(sp_sex) << " marital " << fmt(sp_marital) << "; german " << german_split.train.size() << "/"
           << german_split.test.size() << " SP " << fmt(sp_german) << "; " << fmt(elapsed, 1) << " s";
}

std::optional<double> oracle_gap(const std::vector<int>& pred, const std::vector<int>& y, const std::vector<int>& g,
                                 std::optional<int> label) {
  const auto a = oracle::rate(pred, y, g, 1, label);
  const auto b = oracle::rate(pred, y, g, 0, label);
  if (!a || !b) return std::nullopt;
  return std::abs(*a - *b);
}

void criterion_2(Outcome& o) {
  const auto start = Clock::now();
  std::mt19937_64 rng(20240601);
  std::size_t mismatches = 0, checked = 0;
  auto compare = [&](const Statistic& got, std::optional<double> want) {
    ++checked;
    if (got.defined() != want.has_value() || (want && std::abs(*got - *want) > 1e-12)) ++mismatches;
  };
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 2 + rng() % 200;
    std::vector<int> pred(n), y(n), g(n);
    std::vector<double> score(n);
    for (std::size_t i = 0; i < n; ++i) {
      pred[i] = int(rng() % 2);
      y[i] = int(rng() % 2);
      g[i] = int(rng() % 2);
      score[i] = double(rng() % 50) / 50;
    }
    compare(fairmetrics::dsp(pred, g), oracle_gap(pred, y, g, std::nullopt));
    compare(fairmetrics::deo(pred, y, g), oracle_gap(pred, y, g, 1));
    const auto fpr = oracle_gap(pred, y, g, 0), tpr = oracle_gap(pred, y, g, 1);
    compare(fairmetrics::dao(pred, y, g), fpr && tpr ? std::optional<double>((*fpr + *tpr) / 2) : std::nullopt);
    compare(model::roc_auc(score, y), oracle::auc(score, y));

    std::vector<fairmetrics::FlipRecord> records;
    double sums[2] = {0, 0}, counts[2] = {0, 0};
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<int> members(rng() % 8);
      for (auto& m : members) m = int(rng() % 2);
      const int origin = int(rng() % 2);
      std::vector<double> probas(members.size(), 0.5);
      records.push_back(fairmetrics::make_flip_record(i, g[i], origin, 0.5, members, probas));
      if (!members.empty()) {
        compare(records.back().cflips, oracle::cflips(origin, members));
        if (origin == g[i]) {
          sums[g[i]] += oracle::cflips(origin, members);
          counts[g[i]] += 1;
        }
      }
    }
    const auto u = fairmetrics::cflips_group(records, fairmetrics::Group::unprivileged);
    const auto p = fairmetrics::cflips_group(records, fairmetrics::Group::privileged);
    compare(u.mean, counts[0] ? std::optional<double>(sums[0] / counts[0]) : std::nullopt);
    compare(p.mean, counts[1] ? std::optional<double>(sums[1] / counts[1]) : std::nullopt);
    std::optional<double> delta;
    if (counts[0] && counts[1]) delta = 100 * std::abs(sums[0] / counts[0] - sums[1] / counts[1]);
    ++checked;
    const auto got = fairmetrics::delta_cflips(u, p);
    // Percentage points scale the unit-interval tolerance by 100.
    if (got.defined() != delta.has_value() || (delta && std::abs(*got - *delta) > 1e-10)) ++mismatches;

    std::vector<double> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = double(pred[i]) + 0.1 * score[i];
      b[i] = double(y[i]) - 0.3 * score[i];
    }
    const auto r = data::pearson(a, b);
    compare(r ? Statistic::of(*r) : Statistic::undefined(""), oracle::pearson(a, b));
  }
  const double elapsed = seconds_since(start);
  o.require(mismatches == 0, std::to_string(mismatches) + " mismatches");
  o.require(elapsed < 60, "runtime");
  o.detail << " " << checked << " comparisons over 1000 instances, " << mismatches << " mismatches; "
           << fmt(elapsed, 1) << " s";
}

double mixed_score(std::span<const double> e) {
  const double z = (e[0] - 50) / 10 + 1.5 * e[3] - 0.5 * e[4] + 0.7 * (e[5] - 1) + 0.02 * (e[1] - 40);
  return 1 / (1 + std::exp(-z));
}

void criterion_3(Outcome& o) {
  std::mt19937_64 rng(3);
  std::size_t members = 0, invalid = 0, foreign = 0, distance_mismatch = 0, order_mismatch = 0;
  for (int pool_id = 0; pool_id < 200; ++pool_id) {
    const auto ds = testing_support::mixed_dataset(20 + rng() % 1981, rng());
    const auto probe = testing_support::rule_probe(ds.schema(), mixed_score);
    const cfgen::FeatureDistance dist(ds.schema(), ds.features());
    const cfgen::KdTreeGenerator gen(ds, probe, dist);
    std::set<std::vector<double>> pool_rows;
    for (std::size_t i = 0; i < ds.size(); ++i) pool_rows.insert({ds.row(i).begin(), ds.row(i).end()});
    const auto queries = testing_support::mixed_dataset(40, rng());
    for (std::size_t q = 0; q < queries.size(); ++q) {
      if (probe.label(queries.row(q)) != 0) continue;
      const std::size_t k = 1 + rng() % 50;
      auto set = gen.generate(queries.row(q), 1, k, q, 0);
      invalid += cfgen::revalidate(set, probe);
      // Linear scan over the distinct positive rows.
      std::vector<std::pair<double, std::vector<double>>> scan;
      std::set<std::vector<double>> seen;
      const auto pred = probe.evaluate(ds.features());
      for (std::size_t i = 0; i < ds.size(); ++i) {
        std::vector<double> row(ds.row(i).begin(), ds.row(i).end());
        if (pred.labels[i] != 1 || !seen.insert(row).second) continue;
        scan.emplace_back(dist(queries.row(q), row), row);
      }
      std::stable_sort(scan.begin(), scan.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
      if (set.members.size() != std::min(k, scan.size())) ++order_mismatch;
      for (std::size_t m = 0; m < set.members.size() && m < scan.size(); ++m) {
        ++members;
        if (!pool_rows.count(set.members[m].values)) ++foreign;
        if (set.members[m].distance != scan[m].first) ++distance_mismatch;
      }
    }
  }
  o.require(invalid == 0, "invalid members");
  o.require(foreign == 0, "members outside the pool");
  o.require(distance_mismatch == 0 && order_mismatch == 0, "distances differ from linear scan");
  o.detail << " 200 pools, " << members << " members; invalid " << invalid << ", foreign " << foreign
           << ", distance mismatches " << distance_mismatch << ", size mismatches " << order_mismatch;
}

void criterion_4(Outcome& o) {
  const auto schema = data::FeatureSchema::from_json(ordered_json::parse(R"({
    "features": [
      {"name": "x1", "kind": "numeric", "range": [0, 1]},
      {"name": "x2", "kind": "numeric", "range": [0, 1]}
    ],
    "target": {"column": "y", "positive": "1"},
    "sensitive": [{"column": "s", "privileged": "a", "unprivileged": "b"}]
  })"));
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 1);
  Matrix train(1000, 2);
  for (std::size_t i = 0; i < 1000; ++i) {
    train(i, 0) = u(rng);
    train(i, 1) = u(rng);
  }
  const auto probe = testing_support::rule_probe(schema, [](std::span<const double> e) { return e[0]; });
  const cfgen::FeatureDistance dist(schema, train);
  const cfgen::GeneticGenerator gen(schema, train, probe, dist, cfgen::GeneticConfig{});
  const std::vector<double> x{0.2, 0.3};

  double grid_best = INFINITY;
  for (int i = 0; i <= 100; ++i) {
    for (int j = 0; j <= 100; ++j) {
      const std::vector<double> c{i / 100.0, j / 100.0};
      if (probe.label(c) == 1) grid_best = std::min(grid_best, dist(x, c));
    }
  }
  auto run = [&] {
    auto set = gen.generate(x, 1, 10, 0, 42);
    cfgen::revalidate(set, probe);
    return set;
  };
  const auto set = run();
  std::size_t valid = 0;
  double mean = 0;
  for (const auto& m : set.members) {
    valid += m.valid ? 1 : 0;
    mean += m.distance / double(set.members.size());
  }
  auto text = [&](const cfgen::CounterfactualSet& s) {
    std::ostringstream out;
    cfgen::write_dump(out, {schema, std::nullopt, {s}, {std::nullopt}});
    return out.str();
  };
  const bool identical = text(set) == text(run());
  o.require(set.members.size() == 10 && valid == 10, "validity");
  o.require(mean <= 2 * grid_best, "mean distance");
  o.require(identical, "determinism");
  o.detail << " members " << set.members.size() << ", valid " << valid << ", mean distance " << fmt(mean)
           << " vs grid nearest " << fmt(grid_best) << ", repeat identical " << (identical ? "yes" : "no");
}

struct PlantedRun {
  double fs_auc = 0;
  double unprivileged = 0, privileged = 0;
  std::string top;
  double delta20 = NAN, delta50 = NAN;
};

std::vector<PlantedRun> planted_runs;

void criterion_5(Outcome& o) {
  const auto start = Clock::now();
  auto base = ordered_json::parse(testing_support::read_file(testing_support::source_path("configs/synthetic_dt.json")));
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto j = base;
    j["synthetic"]["seed"] = seed;
    j["seed"] = seed;
    j.erase("output");
    const auto report = audit::run_audit(audit::AuditConfig::from_json(j, "."));
    const auto& s = report.strategies.at(0);
    PlantedRun r;
    r.fs_auc = report.sensitive_classifier.eval.auc.defined() ? *report.sensitive_classifier.eval.auc : 0;
    r.unprivileged = s.unprivileged.mean.defined() ? *s.unprivileged.mean : NAN;
    r.privileged = s.privileged.mean.defined() ? *s.privileged.mean : NAN;
    r.top = s.proxy_top.empty() ? "-" : s.proxy_top.front().feature;
    for (const auto& row : s.ablation) {
      if (!row.delta.defined()) continue;
      if (row.length == 20) r.delta20 = *row.delta;
      if (row.length == 50) r.delta50 = *row.delta;
    }
    o.require(r.fs_auc >= 0.9, "seed " + std::to_string(seed) + " f_s AUC");
    o.require(100 * (r.unprivileged - r.privileged) >= 30, "seed " + std::to_string(seed) + " CFlips gap");
    o.require(r.top == "proxy", "seed " + std::to_string(seed) + " proxy rank");
    o.detail << " [seed " << seed << ": AUC " << fmt(r.fs_auc, 3) << ", CFlips u " << fmt(r.unprivileged, 3)
             << " p " << fmt(r.privileged, 3) << ", top " << r.top << "]";
    planted_runs.push_back(r);
  }
  const double elapsed = seconds_since(start);
  o.require(elapsed < 300, "runtime");
  o.detail << " " << fmt(elapsed, 1) << " s";
}

void criterion_6(Outcome& o) {
  o.require(!planted_runs.empty(), "no planted-proxy runs");
  for (std::size_t i = 0; i < planted_runs.size(); ++i) {
    const auto& r = planted_runs[i];
    const double diff = std::abs(r.delta20 - r.delta50);
    o.require(std::isfinite(diff) && diff <= 10, "seed " + std::to_string(i + 1));
    o.detail << " [seed " << i + 1 << ": " << fmt(r.delta20, 2) << " vs " << fmt(r.delta50, 2) << "]";
  }
}

void criterion_7(Outcome& o) {
  const auto schema = data::FeatureSchema::load(testing_support::source_path("data/schemas/german.json"));
  const auto german = data::load_csv(testing_support::source_path("data/uci/german.data"), schema);
  const auto x = data::encode(german);
  model::LogisticParams params;
  params.l2 = 1e-2;
  const auto lr = model::LogisticRegression::train(params, x.values, german.target());
  const Matrix xs = lr->scaler().apply(x.values);
  const auto w = lr->weights();
  std::vector<long double> grad(w.size() + 1, 0.0L);
  for (std::size_t i = 0; i < xs.rows(); ++i) {
    long double z = lr->bias();
    for (std::size_t j = 0; j < w.size(); ++j) z += w[j] * xs(i, j);
    const long double r = 1.0L / (1.0L + std::exp(-z)) - german.target()[i];
    for (std::size_t j = 0; j < w.size(); ++j) grad[j] += r * xs(i, j);
    grad.back() += r;
  }
  double gmax = 0;
  for (std::size_t j = 0; j < grad.size(); ++j) {
    long double g = grad[j] / xs.rows();
    if (j < w.size()) g += params.l2 * w[j];
    gmax = std::max(gmax, double(std::abs(g)));
  }

  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal(0, 1);
  double worst = 0;
  for (int net = 0; net < 20; ++net) {
    const int in = 1 + int(rng() % 5);
    std::vector<int> sizes{in};
    for (int l = 0, layers = 1 + int(rng() % 2); l < layers; ++l) sizes.push_back(2 + int(rng() % 5));
    sizes.push_back(1);
    auto weights = model::MlpWeights::init(sizes, rng());
    for (std::size_t k = 0; k < weights.layers.size(); ++k) {
      const auto n_w = std::size_t(sizes[k]) * std::size_t(sizes[k + 1]);
      for (std::size_t i = n_w; i < weights.layers[k].size(); ++i) weights.layers[k][i] = 0.5 * normal(rng);
    }
    Matrix xm(16, std::size_t(in));
    std::vector<int> y(16);
    for (std::size_t i = 0; i < 16; ++i) {
      for (int j = 0; j < in; ++j) xm(i, std::size_t(j)) = normal(rng);
      y[i] = int(rng() % 2);
    }
    std::vector<double> g(weights.parameter_count()), scratch(weights.parameter_count());
    model::mlp_loss_and_gradient(weights, xm, y, 0.01, g);
    const auto theta = weights.flatten();
    for (std::size_t k = 0; k < theta.size(); ++k) {
      const double h = 1e-6 * std::max(1.0, std::abs(theta[k]));
      auto plus = theta, minus = theta;
      plus[k] += h;
      minus[k] -= h;
      auto wp = weights, wm = weights;
      wp.assign(plus);
      wm.assign(minus);
      const double fd = (model::mlp_loss_and_gradient(wp, xm, y, 0.01, scratch) -
                         model::mlp_loss_and_gradient(wm, xm, y, 0.01, scratch)) /
                        (2 * h);
      worst = std::max(worst, std::abs(fd - g[k]) / std::max({std::abs(fd), std::abs(g[k]), 1e-6}));
    }
  }
  o.require(gmax <= 1e-4, "LR gradient");
  o.require(worst <= 1e-4, "MLP finite differences");
  o.detail << " LR max |grad| " << gmax << "; MLP worst relative error " << worst << " over 20 networks";
}

int run_cli(const std::string& args) {
  const int status = std::system((std::string(CFAUDIT_CLI) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void criterion_8(Outcome& o) {
  testing_support::TempDir dir;
  auto j = ordered_json::parse(testing_support::read_file(testing_support::source_path("configs/synthetic_dt.json")));
  j["strategy"] = "both";
  j["k"] = 10;
  j["genetic"] = {{"population", 60}, {"generations", 30}};
  j.erase("output");
  testing_support::write_file(dir / "config.json", j.dump(2));
  const auto config = (dir / "config.json").string();
  const int a = run_cli("audit --config " + config + " --workers 1 --out " + (dir / "a").string());
  const int b = run_cli("audit --config " + config + " --workers 4 --out " + (dir / "b").string());
  o.require(a == 0 && b == 0, "audit exit status");
  std::size_t files = 0, differing = 0;
  if (a == 0 && b == 0) {
    for (const auto& e : fs::recursive_directory_iterator(dir / "a")) {
      if (!e.is_regular_file() || e.path().filename() == "timings.json") continue;
      const auto rel = fs::relative(e.path(), dir / "a");
      ++files;
      if (testing_support::read_file(e.path()) != testing_support::read_file(dir / "b" / rel.string())) ++differing;
    }
  }
  o.require(files > 0 && differing == 0, "outputs differ");
  o.detail << " workers 1 vs 4: " << files << " files compared, " << differing << " differ";
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria{
      {"1 dataset splits and ex-ante SP", criterion_1},
      {"2 metrics against oracles", criterion_2},
      {"3 kd-tree against linear scan", criterion_3},
      {"4 genetic search on 2-D toy", criterion_4},
      {"5 planted proxy detection", criterion_5},
      {"6 ablation stability", criterion_6},
      {"7 gradient checks", criterion_7},
      {"8 byte-identical audit reports", criterion_8},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      check(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << name << ":" << o.detail.str() << std::endl;
    failures += o.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
