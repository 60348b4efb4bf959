#include "cfaudit/model/classifier.hpp"

#include <cmath>

#include "cfaudit/common/error.hpp"
#include "cfaudit/model/external_adapter.hpp"
#include "cfaudit/model/learners.hpp"

namespace cfaudit::model {

std::string_view to_string(Family family) {
  switch (family) {
    case Family::logistic_regression: return "logistic_regression";
    case Family::decision_tree: return "decision_tree";
    case Family::mlp: return "mlp";
    case Family::external: return "external";
  }
  return "logistic_regression";
}

Family family_from_string(std::string_view text) {
  if (text == "logistic_regression" || text == "lr") return Family::logistic_regression;
  if (text == "decision_tree" || text == "dt") return Family::decision_tree;
  if (text == "mlp") return Family::mlp;
  if (text == "external") return Family::external;
  throw ValidationError("unknown model family '" + std::string(text) + "'");
}

Prediction Classifier::predict(const Matrix& rows, double threshold) const {
  Prediction p;
  p.probas.resize(rows.rows());
  predict_proba(rows, p.probas);
  p.labels.resize(rows.rows());
  for (std::size_t i = 0; i < rows.rows(); ++i) p.labels[i] = p.probas[i] >= threshold ? 1 : 0;
  return p;
}

ModelSpec ModelSpec::from_json(const nlohmann::ordered_json& j) {
  ModelSpec spec;
  spec.family = family_from_string(j.at("family").get<std::string>());
  if (j.contains("params")) spec.params = j.at("params");
  return spec;
}

nlohmann::ordered_json ModelSpec::to_json() const {
  return {{"family", std::string(to_string(family))}, {"params", params}};
}

ClassifierHandle::ClassifierHandle(std::shared_ptr<const Classifier> impl,
                                   std::shared_ptr<const ColumnMap> columns, std::uint64_t seed,
                                   double threshold, std::vector<std::string> warnings)
    : impl_(std::move(impl)),
      columns_(std::move(columns)),
      seed_(seed),
      threshold_(threshold),
      warnings_(std::move(warnings)) {
  if (!impl_ || !columns_) throw ValidationError("classifier handle needs a model and a column map");
}

void ClassifierHandle::check_columns(const ColumnMap& columns) const {
  if (&columns == columns_.get()) return;
  if (columns != *columns_) {
    throw ValidationError("column map differs from the one the classifier was fitted on");
  }
}

Prediction ClassifierHandle::predict(const EncodedMatrix& x) const {
  if (!x.columns) throw ValidationError("encoded matrix without a column map");
  check_columns(*x.columns);
  if (x.rows() == 0) return {};
  return impl_->predict(x.values, threshold_);
}

std::vector<double> ClassifierHandle::predict_proba(const EncodedMatrix& x) const {
  if (!x.columns) throw ValidationError("encoded matrix without a column map");
  check_columns(*x.columns);
  std::vector<double> out(x.rows());
  if (x.rows() > 0) impl_->predict_proba(x.values, out);
  return out;
}

int ClassifierHandle::predict_one(const EncodedMatrix& x, std::size_t row) const {
  EncodedMatrix single{x.values.select_rows(std::span<const std::size_t>(&row, 1)), x.columns};
  return predict(single).labels.at(0);
}

double ClassifierHandle::predict_proba_one(const EncodedMatrix& x, std::size_t row) const {
  EncodedMatrix single{x.values.select_rows(std::span<const std::size_t>(&row, 1)), x.columns};
  return predict_proba(single).at(0);
}

void check_training_input(const Matrix& x, std::span<const int> labels) {
  if (x.rows() != labels.size()) throw ValidationError("row count and label count differ");
  if (x.rows() == 0) throw ValidationError("empty training set");
  bool seen[2] = {false, false};
  for (int y : labels) {
    if (y != 0 && y != 1) throw ValidationError("labels must be 0 or 1");
    seen[y] = true;
  }
  if (!seen[0] || !seen[1]) throw ValidationError("labels contain one class");
  for (double v : x.data()) {
    if (!std::isfinite(v)) throw ValidationError("training matrix is not finite");
  }
}

ClassifierHandle fit(const ModelSpec& spec, const EncodedMatrix& train, std::span<const int> labels,
                     std::uint64_t seed) {
  if (!train.columns) throw ValidationError("encoded matrix without a column map");
  std::vector<std::string> warnings;
  std::shared_ptr<const Classifier> impl;
  switch (spec.family) {
    case Family::logistic_regression: {
      check_training_input(train.values, labels);
      auto lr = LogisticRegression::train(LogisticParams::from_json(spec.params), train.values, labels);
      if (!lr->converged()) {
        warnings.push_back("logistic regression did not converge in " +
                           std::to_string(lr->iterations()) + " iterations");
      }
      impl = std::move(lr);
      break;
    }
    case Family::decision_tree:
      check_training_input(train.values, labels);
      impl = DecisionTree::train(TreeParams::from_json(spec.params), train.values, labels);
      break;
    case Family::mlp:
      check_training_input(train.values, labels);
      impl = Mlp::train(MlpParams::from_json(spec.params), train.values, labels, seed);
      break;
    case Family::external:
      impl = std::make_shared<ExternalClassifier>(AdapterConfig::from_json(spec.params), *train.columns);
      break;
  }
  return ClassifierHandle(std::move(impl), train.columns, seed, spec.params.value("threshold", 0.5),
                          std::move(warnings));
}

Standardizer Standardizer::fit(const Matrix& x) {
  Standardizer s;
  const std::size_t n = x.rows(), d = x.cols();
  s.mean.assign(d, 0.0);
  s.scale.assign(d, 1.0);
  if (n == 0) return s;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) s.mean[j] += x(i, j);
  }
  for (auto& m : s.mean) m /= static_cast<double>(n);
  std::vector<double> var(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double dv = x(i, j) - s.mean[j];
      var[j] += dv * dv;
    }
  }
  for (std::size_t j = 0; j < d; ++j) {
    const double sd = std::sqrt(var[j] / static_cast<double>(n));
    s.scale[j] = sd > 1e-12 ? sd : 1.0;
  }
  return s;
}

void Standardizer::apply(std::span<const double> in, std::span<double> out) const {
  for (std::size_t j = 0; j < in.size(); ++j) out[j] = (in[j] - mean[j]) / scale[j];
}

Matrix Standardizer::apply(const Matrix& x) const {
  Matrix out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) apply(x.row(i), out.row(i));
  return out;
}

nlohmann::ordered_json Standardizer::to_json() const {
  return {{"mean", mean}, {"scale", scale}};
}

Standardizer Standardizer::from_json(const nlohmann::ordered_json& j) {
  Standardizer s;
  s.mean = j.at("mean").get<std::vector<double>>();
  s.scale = j.at("scale").get<std::vector<double>>();
  if (s.mean.size() != s.scale.size()) throw ValidationError("standardizer size mismatch");
  return s;
}

}  // namespace cfaudit::model
