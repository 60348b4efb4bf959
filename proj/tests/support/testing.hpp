#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <functional>
#include <memory>

#include "cfaudit/cfgen/counterfactual.hpp"
#include "cfaudit/data/dataset.hpp"
#include "cfaudit/data/encoding.hpp"
#include "cfaudit/model/classifier.hpp"

namespace testing_support {

inline std::filesystem::path source_path(const std::string& rel) {
  return std::filesystem::path(CFAUDIT_SOURCE_DIR) / rel;
}

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("cfaudit-test-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Small mixed schema: two numeric features, one categorical, one ordinal.
inline cfaudit::data::FeatureSchema mixed_schema() {
  auto j = nlohmann::ordered_json::parse(R"({
    "features": [
      {"name": "income", "kind": "numeric"},
      {"name": "age", "kind": "numeric", "integer": true},
      {"name": "job", "kind": "categorical", "levels": ["clerk", "manager", "driver"]},
      {"name": "edu", "kind": "ordinal", "levels": ["low", "mid", "high"]}
    ],
    "target": {"column": "y", "positive": "yes"},
    "sensitive": [{"column": "sex", "privileged": "m", "unprivileged": "f"}]
  })");
  return cfaudit::data::FeatureSchema::from_json(j);
}

/// Classifier scoring encoded rows with an arbitrary function.
class RuleClassifier final : public cfaudit::model::Classifier {
 public:
  using Score = std::function<double(std::span<const double>)>;
  explicit RuleClassifier(Score score) : score_(std::move(score)) {}

  cfaudit::model::Family family() const override { return cfaudit::model::Family::external; }
  void predict_proba(const cfaudit::Matrix& rows, std::span<double> out) const override {
    for (std::size_t i = 0; i < rows.rows(); ++i) out[i] = score_(rows.row(i));
  }
  nlohmann::ordered_json hyperparameters() const override { return nlohmann::ordered_json::object(); }
  nlohmann::ordered_json parameters() const override { return nlohmann::ordered_json::object(); }

 private:
  Score score_;
};

inline cfaudit::model::ClassifierHandle rule_handle(const cfaudit::data::Encoder& enc, RuleClassifier::Score score) {
  return cfaudit::model::ClassifierHandle(std::make_shared<RuleClassifier>(std::move(score)),
                                          enc.column_map_ptr(), 0);
}

inline cfaudit::cfgen::DecisionProbe rule_probe(const cfaudit::data::FeatureSchema& schema,
                                                RuleClassifier::Score score) {
  cfaudit::data::Encoder enc(schema);
  return cfaudit::cfgen::DecisionProbe(rule_handle(enc, std::move(score)), enc);
}

/// Random rows of mixed_schema(). Income has repeated values and rows repeat.
inline cfaudit::data::Dataset mixed_dataset(std::size_t n, std::uint64_t seed) {
  auto schema = std::make_shared<const cfaudit::data::FeatureSchema>(mixed_schema());
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(50, 15);
  cfaudit::Matrix x(n, 4);
  std::vector<int> y(n);
  std::vector<std::vector<int>> s(1, std::vector<int>(n));
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0 && rng() % 10 == 0) {
      const auto src = rng() % i;
      for (std::size_t j = 0; j < 4; ++j) x(i, j) = x(src, j);
    } else {
      x(i, 0) = std::round(g(rng) * 4) / 4;
      x(i, 1) = double(18 + rng() % 50);
      x(i, 2) = double(rng() % 3);
      x(i, 3) = double(rng() % 3);
    }
    y[i] = int(rng() % 2);
    s[0][i] = int(rng() % 2);
  }
  return cfaudit::data::Dataset(schema, std::move(x), std::move(y), std::move(s));
}

}  // namespace testing_support
