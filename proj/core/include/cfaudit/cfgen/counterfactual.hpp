#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "cfaudit/data/encoding.hpp"
#include "cfaudit/model/classifier.hpp"

namespace cfaudit::cfgen {

enum class Strategy { kdtree, genetic };

std::string_view to_string(Strategy s);
Strategy strategy_from_string(std::string_view text);

struct CounterfactualMember {
  std::vector<double> values;  ///< schema space
  double distance = 0.0;       ///< FeatureDistance to the origin
  bool valid = false;          ///< f(member) == desired, re-checked after generation
};

/// The counterfactuals of one sample, in generation order.
struct CounterfactualSet {
  std::size_t sample_id = 0;
  std::vector<double> origin;
  int desired = 1;
  Strategy strategy = Strategy::kdtree;
  std::uint64_t seed = 0;
  std::size_t requested = 0;
  std::vector<CounterfactualMember> members;

  bool shortfall() const { return members.size() < requested; }
};

/// The decision maker evaluated on schema-space rows.
class DecisionProbe {
 public:
  DecisionProbe(model::ClassifierHandle model, data::Encoder encoder);

  model::Prediction evaluate(const Matrix& schema_rows) const;
  int label(std::span<const double> schema_row) const;

  const data::Encoder& encoder() const { return encoder_; }
  const model::ClassifierHandle& model() const { return model_; }

 private:
  model::ClassifierHandle model_;
  data::Encoder encoder_;
};

class CounterfactualGenerator {
 public:
  virtual ~CounterfactualGenerator() = default;
  virtual Strategy strategy() const = 0;
  /// Throws ValidationError when f(x) already equals `desired`.
  virtual CounterfactualSet generate(std::span<const double> x, int desired, std::size_t k,
                                     std::size_t sample_id, std::uint64_t seed) const = 0;
};

/// Re-predicts every member and sets its validity flag; returns the number
/// of invalid members.
std::size_t revalidate(CounterfactualSet& set, const DecisionProbe& f);

}  // namespace cfaudit::cfgen
