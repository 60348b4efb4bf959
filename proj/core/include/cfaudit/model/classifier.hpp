#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cfaudit/common/matrix.hpp"
#include "cfaudit/data/encoding.hpp"
#include "json.hpp"

namespace cfaudit::model {

using data::ColumnMap;
using data::EncodedMatrix;

enum class Family { logistic_regression, decision_tree, mlp, external };

std::string_view to_string(Family family);
Family family_from_string(std::string_view text);

struct Prediction {
  std::vector<int> labels;
  std::vector<double> probas;
};

/// A fitted model. Implementations are immutable after construction and
/// must tolerate concurrent calls.
class Classifier {
 public:
  virtual ~Classifier() = default;

  virtual Family family() const = 0;
  /// P(y=1 | row) for each row of `rows` (already in encoded space).
  virtual void predict_proba(const Matrix& rows, std::span<double> out) const = 0;
  /// Labels and probabilities. Built-in families threshold the probability.
  virtual Prediction predict(const Matrix& rows, double threshold) const;

  virtual nlohmann::ordered_json hyperparameters() const = 0;
  virtual nlohmann::ordered_json parameters() const = 0;
};

/// Family plus hyperparameters; the unit a grid search ranges over.
struct ModelSpec {
  Family family = Family::logistic_regression;
  nlohmann::ordered_json params = nlohmann::ordered_json::object();

  static ModelSpec from_json(const nlohmann::ordered_json& j);
  nlohmann::ordered_json to_json() const;
};

/// Shared, immutable handle to a fitted classifier together with the column
/// map it was fitted on. Every prediction call checks the column map.
class ClassifierHandle {
 public:
  ClassifierHandle() = default;
  ClassifierHandle(std::shared_ptr<const Classifier> impl, std::shared_ptr<const ColumnMap> columns,
                   std::uint64_t seed, double threshold = 0.5, std::vector<std::string> warnings = {});

  bool valid() const { return impl_ != nullptr; }
  Family family() const { return impl_->family(); }
  const Classifier& classifier() const { return *impl_; }
  const ColumnMap& column_map() const { return *columns_; }
  std::shared_ptr<const ColumnMap> column_map_ptr() const { return columns_; }
  std::uint64_t seed() const { return seed_; }
  double threshold() const { return threshold_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  /// Throws ValidationError when `columns` differs from the fit-time map.
  void check_columns(const ColumnMap& columns) const;

  Prediction predict(const EncodedMatrix& x) const;
  std::vector<double> predict_proba(const EncodedMatrix& x) const;
  int predict_one(const EncodedMatrix& x, std::size_t row) const;
  double predict_proba_one(const EncodedMatrix& x, std::size_t row) const;

 private:
  std::shared_ptr<const Classifier> impl_;
  std::shared_ptr<const ColumnMap> columns_;
  std::uint64_t seed_ = 0;
  double threshold_ = 0.5;
  std::vector<std::string> warnings_;
};

/// Fits a built-in family. Deterministic for a fixed seed.
/// Throws ValidationError when the labels hold a single class or the matrix
/// is not finite.
ClassifierHandle fit(const ModelSpec& spec, const EncodedMatrix& train, std::span<const int> labels,
                     std::uint64_t seed);

/// Per-column z-score parameters fitted on training data (zero spread -> 1).
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardizer fit(const Matrix& x);
  void apply(std::span<const double> in, std::span<double> out) const;
  Matrix apply(const Matrix& x) const;
  nlohmann::ordered_json to_json() const;
  static Standardizer from_json(const nlohmann::ordered_json& j);
};

void check_training_input(const Matrix& x, std::span<const int> labels);

}  // namespace cfaudit::model
