#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "cfaudit/common/error.hpp"
#include "cfaudit/model/evaluation.hpp"
#include "cfaudit/model/external_adapter.hpp"
#include "cfaudit/model/grid_search.hpp"
#include "cfaudit/model/learners.hpp"
#include "cfaudit/model/serialization.hpp"
#include "oracles.hpp"
#include "testing.hpp"

using namespace cfaudit;
using namespace cfaudit::model;
using nlohmann::ordered_json;

namespace {

EncodedMatrix numeric_matrix(Matrix m) {
  auto cols = std::make_shared<ColumnMap>();
  for (std::size_t j = 0; j < m.cols(); ++j) {
    cols->push_back({j, "x" + std::to_string(j), data::FeatureKind::numeric, std::nullopt});
  }
  return {std::move(m), cols};
}

struct Problem {
  EncodedMatrix x;
  std::vector<int> y;
};

Problem linear_problem(std::size_t n, std::size_t d, std::uint64_t seed, double noise = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0, 1);
  Matrix m(n, d);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double z = 0;
    for (std::size_t j = 0; j < d; ++j) {
      m(i, j) = g(rng) * double(j + 1) + double(j);
      z += (j % 2 ? -1.0 : 1.0) * (m(i, j) - double(j)) / double(j + 1);
    }
    y[i] = z + noise * g(rng) > 0 ? 1 : 0;
  }
  return {numeric_matrix(std::move(m)), y};
}

}  // namespace

TEST(Evaluation, ConfusionMetricsByHand) {
  std::vector<int> pred{1, 1, 0, 0, 1}, y{1, 0, 0, 1, 1};
  const auto c = confusion_counts(pred, y);
  EXPECT_EQ(c.tp, 2u);
  EXPECT_EQ(c.fp, 1u);
  EXPECT_EQ(c.tn, 1u);
  EXPECT_EQ(c.fn, 1u);
  EXPECT_DOUBLE_EQ(accuracy(c), 0.6);
  EXPECT_DOUBLE_EQ(precision(c), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(recall(c), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(f1_score(c), 2.0 / 3.0);
  EXPECT_EQ(precision(Confusion{}), 0.0);
}

TEST(Evaluation, AucMatchesPairwiseOracle) {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 2 + rng() % 60;
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = double(rng() % 7) / 7.0;  // many ties
      y[i] = int(rng() % 2);
    }
    const auto want = oracle::auc(s, y);
    const auto got = roc_auc(s, y);
    ASSERT_EQ(got.defined(), want.has_value());
    if (want) EXPECT_NEAR(*got, *want, 1e-12);
  }
  EXPECT_FALSE(roc_auc(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1}).defined());
}

TEST(LogisticRegression, GradientVanishesAtOptimum) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto p = linear_problem(400, 4, seed);
    LogisticParams params;
    params.l2 = 1e-2;
    const auto lr = LogisticRegression::train(params, p.x.values, p.y);
    EXPECT_TRUE(lr->converged());
    const Matrix xs = lr->scaler().apply(p.x.values);
    const auto w = lr->weights();
    std::vector<long double> grad(w.size() + 1, 0.0L);
    for (std::size_t i = 0; i < xs.rows(); ++i) {
      long double z = lr->bias();
      for (std::size_t j = 0; j < w.size(); ++j) z += w[j] * xs(i, j);
      const long double r = 1.0L / (1.0L + std::exp(-z)) - p.y[i];
      for (std::size_t j = 0; j < w.size(); ++j) grad[j] += r * xs(i, j);
      grad.back() += r;
    }
    double gmax = 0;
    for (std::size_t j = 0; j < grad.size(); ++j) {
      long double g = grad[j] / xs.rows();
      if (j < w.size()) g += params.l2 * w[j];
      gmax = std::max(gmax, double(std::abs(g)));
    }
    EXPECT_LE(gmax, 1e-4);
  }
}

TEST(LogisticRegression, SingleClassIsRejected) {
  const auto p = linear_problem(20, 2, 1);
  std::vector<int> ones(20, 1);
  EXPECT_THROW(fit(ModelSpec{}, p.x, ones, 0), ValidationError);
}

TEST(DecisionTree, LearnsXor) {
  Matrix m(400, 2);
  std::vector<int> y(400);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  for (std::size_t i = 0; i < 400; ++i) {
    m(i, 0) = u(rng);
    m(i, 1) = u(rng);
    y[i] = (m(i, 0) > 0) != (m(i, 1) > 0);
  }
  const auto x = numeric_matrix(m);
  const auto h = fit({Family::decision_tree, {{"max_depth", 8}}}, x, y, 0);
  EXPECT_GE(evaluate(h, x, y).acc, 0.97);
  const auto& tree = dynamic_cast<const DecisionTree&>(h.classifier());
  EXPECT_LE(tree.depth(), 8);
}

TEST(DecisionTree, DepthLimitAndLeafSize) {
  const auto p = linear_problem(300, 3, 8);
  const auto h = fit({Family::decision_tree, {{"max_depth", 2}, {"min_samples_leaf", 20}}}, p.x, p.y, 0);
  const auto& tree = dynamic_cast<const DecisionTree&>(h.classifier());
  EXPECT_LE(tree.depth(), 2);
  for (const auto& node : tree.nodes()) {
    if (node.feature < 0) EXPECT_GE(node.samples, 20u);
  }
}

TEST(Mlp, BackpropMatchesFiniteDifferences) {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> g(0, 1);
  for (int net = 0; net < 20; ++net) {
    const int in = 1 + int(rng() % 4);
    std::vector<int> sizes{in};
    const int layers = 1 + int(rng() % 2);
    for (int l = 0; l < layers; ++l) sizes.push_back(2 + int(rng() % 4));
    sizes.push_back(1);
    auto w = MlpWeights::init(sizes, rng());
    // Nonzero biases keep pre-activations off the ReLU kink.
    for (std::size_t k = 0; k < w.layers.size(); ++k) {
      const auto n_w = std::size_t(sizes[k]) * std::size_t(sizes[k + 1]);
      for (std::size_t i = n_w; i < w.layers[k].size(); ++i) w.layers[k][i] = 0.5 * g(rng);
    }
    Matrix x(12, std::size_t(in));
    std::vector<int> y(12);
    for (std::size_t i = 0; i < 12; ++i) {
      for (int j = 0; j < in; ++j) x(i, std::size_t(j)) = g(rng);
      y[i] = int(rng() % 2);
    }
    const double alpha = 0.01;
    std::vector<double> grad(w.parameter_count());
    mlp_loss_and_gradient(w, x, y, alpha, grad);
    auto theta = w.flatten();
    std::vector<double> scratch(w.parameter_count());
    for (std::size_t k = 0; k < theta.size(); ++k) {
      const double h = 1e-6 * std::max(1.0, std::abs(theta[k]));
      auto plus = theta, minus = theta;
      plus[k] += h;
      minus[k] -= h;
      MlpWeights wp = w, wm = w;
      wp.assign(plus);
      wm.assign(minus);
      const double fd = (mlp_loss_and_gradient(wp, x, y, alpha, scratch) -
                         mlp_loss_and_gradient(wm, x, y, alpha, scratch)) /
                        (2 * h);
      const double denom = std::max({std::abs(fd), std::abs(grad[k]), 1e-6});
      EXPECT_LE(std::abs(fd - grad[k]) / denom, 1e-4) << "net " << net << " param " << k;
    }
  }
}

TEST(Mlp, FitsSeparableData) {
  const auto p = linear_problem(500, 3, 4, 0.1);
  const auto h = fit({Family::mlp, {{"hidden", {8}}, {"epochs", 80}}}, p.x, p.y, 3);
  const auto r = evaluate(h, p.x, p.y);
  EXPECT_GT(*r.auc, 0.95);
}

TEST(Fit, DeterministicForSeed) {
  const auto p = linear_problem(200, 3, 4);
  const ModelSpec spec{Family::mlp, {{"hidden", {4}}, {"epochs", 10}}};
  EXPECT_EQ(fit(spec, p.x, p.y, 9).predict_proba(p.x), fit(spec, p.x, p.y, 9).predict_proba(p.x));
}

TEST(Handle, ColumnMapIsChecked) {
  const auto p = linear_problem(100, 3, 4);
  const auto h = fit(ModelSpec{}, p.x, p.y, 0);
  auto other = std::make_shared<ColumnMap>(*p.x.columns);
  (*other)[0].name = "renamed";
  EncodedMatrix x{p.x.values, other};
  EXPECT_THROW(h.predict(x), ValidationError);
}

TEST(Serialization, RoundTripPreservesPredictions) {
  const auto p = linear_problem(200, 3, 6);
  testing_support::TempDir dir;
  for (const ModelSpec& spec : {ModelSpec{Family::logistic_regression, {{"l2", 0.1}}},
                                ModelSpec{Family::decision_tree, {{"max_depth", 5}}},
                                ModelSpec{Family::mlp, {{"hidden", {5, 3}}, {"epochs", 5}}}}) {
    const auto h = fit(spec, p.x, p.y, 17);
    save_model(h, dir / "m.json");
    const auto back = load_model(dir / "m.json");
    EXPECT_EQ(back.family(), h.family());
    EXPECT_EQ(back.seed(), 17u);
    EXPECT_EQ(back.column_map(), h.column_map());
    EXPECT_EQ(back.predict_proba(p.x), h.predict_proba(p.x));
    EXPECT_EQ(model_to_json(back).dump(), model_to_json(h).dump());
  }
}

TEST(GridSearch, ExpandOrderFirstKeySlowest) {
  const auto cells = expand_grid({{"epochs", 3}}, {{"a", {1, 2}}, {"b", {"x", "y"}}});
  ASSERT_EQ(cells.size(), 4u);
  EXPECT_EQ(cells[1]["a"], 1);
  EXPECT_EQ(cells[1]["b"], "y");
  EXPECT_EQ(cells[2]["a"], 2);
  EXPECT_EQ(cells[3]["epochs"], 3);
}

TEST(GridSearch, FoldsAreStratified) {
  std::vector<int> y(103);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = i % 3 == 0;
  const auto folds = stratified_fold_assignment(y, 5, 1);
  std::vector<int> pos(5), all(5);
  for (std::size_t i = 0; i < y.size(); ++i) {
    all[folds[i]]++;
    pos[folds[i]] += y[i];
  }
  for (int f = 0; f < 5; ++f) {
    EXPECT_LE(std::abs(all[f] - 103 / 5.0), 1.0);
    EXPECT_LE(std::abs(pos[f] - 35 / 5.0), 1.0);
  }
}

TEST(GridSearch, DeterministicAndWorkerInvariant) {
  const auto p = linear_problem(300, 3, 12);
  CvConfig cv;
  cv.folds = 3;
  cv.grid = {{"max_depth", {1, 3, 6}}};
  cv.seed = 5;
  const auto a = grid_search_cv(Family::decision_tree, cv, p.x, p.y, {}, 1);
  const auto b = grid_search_cv(Family::decision_tree, cv, p.x, p.y, {}, 3);
  ASSERT_EQ(a.cells.size(), 3u);
  EXPECT_EQ(a.best, b.best);
  for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(a.cells[c].mean, b.cells[c].mean);
  double best = -1;
  for (const auto& c : a.cells) best = std::max(best, *c.mean);
  EXPECT_EQ(*a.cells[a.best].mean, best);
}

TEST(GridSearch, TooFewRowsPerClass) {
  const auto p = linear_problem(20, 2, 1);
  std::vector<int> y(20, 0);
  y[0] = y[1] = 1;
  CvConfig cv;
  EXPECT_THROW(cv.validate(y), ValidationError);
}

namespace {

AdapterConfig fake(const std::string& mode, int timeout_ms = 5000) {
  AdapterConfig c;
  c.command = {CFAUDIT_FAKE_ADAPTER, mode};
  c.timeout = std::chrono::milliseconds(timeout_ms);
  c.batch_size = 3;
  return c;
}

EncodedMatrix signed_rows() {
  return numeric_matrix(Matrix(5, 2, std::vector<double>{1, 0, -1, 0, 2, 0, -3, 0, 0, 0}));
}

AdapterError::Kind failure_kind(const std::string& mode, int timeout_ms = 5000) {
  try {
    external_predict(fake(mode, timeout_ms), signed_rows());
  } catch (const AdapterError& e) {
    return e.kind();
  }
  ADD_FAILURE() << mode << " did not fail";
  return AdapterError::Kind::spawn;
}

}  // namespace

TEST(ExternalAdapter, OkBatchesAcrossRequests) {
  const auto pred = external_predict(fake("ok"), signed_rows());
  EXPECT_EQ(pred.labels, (std::vector<int>{1, 0, 1, 0, 0}));
  EXPECT_EQ(pred.probas, (std::vector<double>{0.75, 0.25, 0.75, 0.25, 0.25}));
}

TEST(ExternalAdapter, FailureModes) {
  EXPECT_EQ(failure_kind("refuse"), AdapterError::Kind::protocol);
  EXPECT_EQ(failure_kind("crash"), AdapterError::Kind::exited);
  EXPECT_EQ(failure_kind("malformed"), AdapterError::Kind::malformed);
  EXPECT_EQ(failure_kind("badproba"), AdapterError::Kind::protocol);
  EXPECT_EQ(failure_kind("short"), AdapterError::Kind::protocol);
  EXPECT_EQ(failure_kind("slow", 300), AdapterError::Kind::timeout);
}

TEST(ExternalAdapter, MissingBinaryIsSpawnOrExit) {
  AdapterConfig c;
  c.command = {"/nonexistent/cfaudit-adapter"};
  c.timeout = std::chrono::milliseconds(2000);
  EXPECT_THROW(external_predict(c, signed_rows()), AdapterError);
}

TEST(ExternalAdapter, ServeRoundTripsBuiltinModel) {
  const auto p = linear_problem(150, 2, 3);
  const auto h = fit({Family::decision_tree, {{"max_depth", 3}}}, p.x, p.y, 0);
  testing_support::TempDir dir;
  save_model(h, dir / "m.json");
  AdapterConfig c;
  c.command = {CFAUDIT_SERVE, "--model", (dir / "m.json").string()};
  const auto ext = fit({Family::external, c.to_json()}, p.x, p.y, 0);
  EXPECT_EQ(ext.family(), Family::external);
  const auto a = h.predict(p.x);
  const auto b = ext.predict(p.x);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_EQ(a.probas, b.probas);
}

TEST(ExternalAdapter, ServeHandlesProtocolInProcess) {
  const auto p = linear_problem(50, 2, 3);
  const auto h = fit(ModelSpec{}, p.x, p.y, 0);
  std::istringstream in(R"({"op":"hello","columns":["x0","x1"]})"
                        "\n"
                        R"({"op":"predict","rows":[[0.5,1.0]]})"
                        "\n"
                        R"({"op":"bye"})"
                        "\n");
  std::ostringstream out;
  EXPECT_EQ(serve_adapter(h, in, out), 0);
  std::istringstream lines(out.str());
  std::string first, second;
  std::getline(lines, first);
  std::getline(lines, second);
  EXPECT_EQ(ordered_json::parse(first)["ok"], true);
  const auto reply = ordered_json::parse(second);
  EncodedMatrix one{Matrix(1, 2, std::vector<double>{0.5, 1.0}), p.x.columns};
  EXPECT_EQ(reply["probas"][0].get<double>(), h.predict_proba_one(one, 0));
}
