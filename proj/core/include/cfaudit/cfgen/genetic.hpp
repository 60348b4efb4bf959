#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "cfaudit/cfgen/counterfactual.hpp"
#include "cfaudit/cfgen/distance.hpp"
#include "json.hpp"

namespace cfaudit::cfgen {

struct GeneticConfig {
  std::size_t population = 200;
  std::size_t generations = 100;
  double mutation_rate = 0.1;   ///< per gene
  double crossover_rate = 0.8;
  double proximity_weight = 1.0;
  double sparsity_weight = 0.5;
  double diversity_weight = 1.0;
  /// Fitness penalty for an invalid individual (plus its probability gap to
  /// the decision threshold).
  double validity_penalty = 10.0;
  std::vector<std::string> immutable;
  std::map<std::string, std::pair<double, double>> ranges;

  /// Throws ValidationError: negative weights, population < 2k, rates
  /// outside [0,1].
  void validate(std::size_t k) const;

  static GeneticConfig from_json(const nlohmann::ordered_json& j);
  nlohmann::ordered_json to_json() const;
};

/// Evolutionary search over schema-space individuals.
///
/// Individual fitness (minimised):
///   penalty(invalid) + proximity_weight * distance + sparsity_weight * changed/n_features
/// Numeric genes mutate by Gaussian noise (sd = 0.1 * train sd) clipped to the
/// feasible range; categorical genes resample uniformly; a mutated gene may
/// instead snap back to the origin value. Crossover is uniform per gene.
/// The returned set is picked greedily from the archive of distinct valid
/// individuals to minimise
///   sum(individual fitness) - diversity_weight * mean pairwise distance.
class GeneticGenerator final : public CounterfactualGenerator {
 public:
  GeneticGenerator(const data::FeatureSchema& schema, const Matrix& train_features, DecisionProbe f,
                   FeatureDistance distance, GeneticConfig config);

  Strategy strategy() const override { return Strategy::genetic; }
  CounterfactualSet generate(std::span<const double> x, int desired, std::size_t k, std::size_t sample_id,
                             std::uint64_t seed) const override;

  const std::vector<std::size_t>& mutable_features() const { return mutable_; }
  std::pair<double, double> range(std::size_t feature) const { return {lo_[feature], hi_[feature]}; }

 private:
  std::vector<data::FeatureSpec> features_;
  DecisionProbe f_;
  FeatureDistance distance_;
  GeneticConfig config_;
  std::vector<std::size_t> mutable_;
  std::vector<double> lo_, hi_, sigma_;
};

}  // namespace cfaudit::cfgen
