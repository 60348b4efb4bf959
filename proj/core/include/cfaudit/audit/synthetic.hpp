#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>

#include "cfaudit/data/dataset.hpp"
#include "json.hpp"

namespace cfaudit::audit {

/// Planted-proxy data.
///
/// A hidden bit s (1 = privileged, P = 1/2) drives a categorical proxy
/// feature that equals s with probability (1 + beta) / 2 (level "a" stands
/// for s = 1). Numeric features: `merit` ~ N(0, 1) and `noise_1..m` ~ N(0, 1).
/// The label is
///   y = 1[merit + label_gap * beta * (s - 1/2) + label_noise * e > 0],  e ~ N(0, 1)
/// so the ex-ante statistical parity is
///   2 * Phi(label_gap * beta / (2 * sqrt(1 + label_noise^2))) - 1.
/// With label_gap = 0 the label is independent of s and of the proxy.
struct SyntheticSpec {
  std::size_t n = 4000;
  double beta = 0.9;
  double label_gap = 2.0;
  double label_noise = 0.5;
  std::size_t noise_features = 3;
  std::uint64_t seed = 0;

  void validate() const;
  static SyntheticSpec from_json(const nlohmann::ordered_json& j);
  nlohmann::ordered_json to_json() const;
};

data::FeatureSchema synthetic_schema(std::size_t noise_features);

data::Dataset generate_synthetic(const SyntheticSpec& spec);

/// Ex-ante statistical parity implied by the generator.
double synthetic_expected_sp(const SyntheticSpec& spec);

/// Header CSV readable with synthetic_schema().
void write_synthetic_csv(const data::Dataset& dataset, std::ostream& out);

}  // namespace cfaudit::audit
