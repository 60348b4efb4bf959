#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "cfaudit/model/classifier.hpp"

namespace cfaudit::model {

// ---------------------------------------------------------------------------
// Logistic regression

struct LogisticParams {
  double l2 = 1e-3;
  int max_iter = 100;
  double tol = 1e-10;

  static LogisticParams from_json(const nlohmann::ordered_json& j);
  nlohmann::ordered_json to_json() const;
};

/// L2-regularised logistic regression on standardised inputs.
/// Minimises mean log-loss + l2/2 * |w|^2 (bias unpenalised) with damped
/// Newton steps.
class LogisticRegression final : public Classifier {
 public:
  LogisticRegression(LogisticParams params, Standardizer scaler, std::vector<double> weights,
                     double bias, bool converged, int iterations);

  static std::shared_ptr<const LogisticRegression> train(const LogisticParams& params, const Matrix& x,
                                                          std::span<const int> labels);

  Family family() const override { return Family::logistic_regression; }
  void predict_proba(const Matrix& rows, std::span<double> out) const override;
  nlohmann::ordered_json hyperparameters() const override { return params_.to_json(); }
  nlohmann::ordered_json parameters() const override;
  static std::shared_ptr<const LogisticRegression> from_json(const nlohmann::ordered_json& hyper,
                                                              const nlohmann::ordered_json& params);

  const LogisticParams& params() const { return params_; }
  const Standardizer& scaler() const { return scaler_; }
  std::span<const double> weights() const { return weights_; }
  double bias() const { return bias_; }
  bool converged() const { return converged_; }
  int iterations() const { return iterations_; }

 private:
  LogisticParams params_;
  Standardizer scaler_;
  std::vector<double> weights_;
  double bias_ = 0.0;
  bool converged_ = true;
  int iterations_ = 0;
};

// ---------------------------------------------------------------------------
// CART decision tree

struct TreeParams {
  int max_depth = 8;
  int min_samples_split = 2;
  int min_samples_leaf = 1;

  static TreeParams from_json(const nlohmann::ordered_json& j);
  nlohmann::ordered_json to_json() const;
};

/// Internal node when `feature >= 0`: rows with value <= threshold go left.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double proba = 0.0;  ///< fraction of positive training rows reaching the node
  std::size_t samples = 0;
};

/// Binary CART tree with Gini impurity. Thresholds are midpoints between
/// consecutive distinct values; ties between splits keep the first
/// (lowest feature, lowest threshold).
class DecisionTree final : public Classifier {
 public:
  DecisionTree(TreeParams params, std::vector<TreeNode> nodes);

  static std::shared_ptr<const DecisionTree> train(const TreeParams& params, const Matrix& x,
                                                    std::span<const int> labels);

  Family family() const override { return Family::decision_tree; }
  void predict_proba(const Matrix& rows, std::span<double> out) const override;
  double predict_row(std::span<const double> row) const;
  nlohmann::ordered_json hyperparameters() const override { return params_.to_json(); }
  nlohmann::ordered_json parameters() const override;
  static std::shared_ptr<const DecisionTree> from_json(const nlohmann::ordered_json& hyper,
                                                        const nlohmann::ordered_json& params);

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  int depth() const;

 private:
  TreeParams params_;
  std::vector<TreeNode> nodes_;
};

// ---------------------------------------------------------------------------
// Multi-layer perceptron

struct MlpParams {
  std::vector<int> hidden{16};
  double alpha = 1e-4;          ///< L2 penalty on weights
  double learning_rate = 1e-2;  ///< Adam step size
  int epochs = 60;
  int batch_size = 64;

  static MlpParams from_json(const nlohmann::ordered_json& j);
  nlohmann::ordered_json to_json() const;
};

/// Dense layers: ReLU hidden units, one logistic output unit.
struct MlpWeights {
  std::vector<int> sizes;  ///< input, hidden..., 1
  /// Per layer: weights (out x in, row-major) followed by biases.
  std::vector<std::vector<double>> layers;

  std::size_t parameter_count() const;
  std::vector<double> flatten() const;
  void assign(std::span<const double> flat);
  static MlpWeights init(std::vector<int> sizes, std::uint64_t seed);
};

/// Mean log-loss + alpha/2 * |W|^2 (biases unpenalised) and its gradient
/// (same layout as MlpWeights::flatten) by backpropagation.
double mlp_loss_and_gradient(const MlpWeights& weights, const Matrix& x, std::span<const int> labels,
                             double alpha, std::span<double> gradient);
double mlp_forward(const MlpWeights& weights, std::span<const double> input, std::vector<double>& scratch);

class Mlp final : public Classifier {
 public:
  Mlp(MlpParams params, Standardizer scaler, MlpWeights weights);

  static std::shared_ptr<const Mlp> train(const MlpParams& params, const Matrix& x,
                                          std::span<const int> labels, std::uint64_t seed);

  Family family() const override { return Family::mlp; }
  void predict_proba(const Matrix& rows, std::span<double> out) const override;
  nlohmann::ordered_json hyperparameters() const override { return params_.to_json(); }
  nlohmann::ordered_json parameters() const override;
  static std::shared_ptr<const Mlp> from_json(const nlohmann::ordered_json& hyper,
                                              const nlohmann::ordered_json& params);

  const MlpWeights& weights() const { return weights_; }
  const Standardizer& scaler() const { return scaler_; }

 private:
  MlpParams params_;
  Standardizer scaler_;
  MlpWeights weights_;
};

double sigmoid(double z);

}  // namespace cfaudit::model
