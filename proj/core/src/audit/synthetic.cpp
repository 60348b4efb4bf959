#include "cfaudit/audit/synthetic.hpp"

#include <cmath>
#include <random>
#include <string>

#include "cfaudit/common/error.hpp"
#include "cfaudit/common/json_keys.hpp"
#include "cfaudit/common/random.hpp"

namespace cfaudit::audit {

void SyntheticSpec::validate() const {
  if (!(beta >= 0.0 && beta <= 1.0)) throw ValidationError("beta must lie in [0, 1]");
  if (n < 2) throw ValidationError("synthetic data needs at least 2 rows");
  if (label_noise < 0.0 || label_gap < 0.0) throw ValidationError("label_gap and label_noise must be non-negative");
}

SyntheticSpec SyntheticSpec::from_json(const nlohmann::ordered_json& j) {
  expect_keys(j, {"n", "beta", "label_gap", "label_noise", "noise_features", "seed"}, "synthetic");
  SyntheticSpec s;
  s.n = j.value("n", s.n);
  s.beta = j.value("beta", s.beta);
  s.label_gap = j.value("label_gap", s.label_gap);
  s.label_noise = j.value("label_noise", s.label_noise);
  s.noise_features = j.value("noise_features", s.noise_features);
  s.seed = j.value("seed", s.seed);
  s.validate();
  return s;
}

nlohmann::ordered_json SyntheticSpec::to_json() const {
  return {{"n", n},
          {"beta", beta},
          {"label_gap", label_gap},
          {"label_noise", label_noise},
          {"noise_features", noise_features},
          {"seed", seed}};
}

data::FeatureSchema synthetic_schema(std::size_t noise_features) {
  data::FeatureSchema schema;
  schema.features.push_back({"merit", data::FeatureKind::numeric, {}, false, false, std::nullopt});
  schema.features.push_back({"proxy", data::FeatureKind::categorical, {"a", "b"}, false, false, std::nullopt});
  for (std::size_t i = 1; i <= noise_features; ++i) {
    schema.features.push_back({"noise_" + std::to_string(i), data::FeatureKind::numeric, {}, false, false, std::nullopt});
  }
  schema.target = {"y", "1"};
  schema.sensitive = {{"s", "s+", "s-"}};
  schema.layout.header = true;
  schema.layout.missing.clear();
  schema.validate();
  return schema;
}

double synthetic_expected_sp(const SyntheticSpec& spec) {
  const double z = spec.label_gap * spec.beta / (2.0 * std::sqrt(1.0 + spec.label_noise * spec.label_noise));
  return std::erf(z / std::sqrt(2.0));
}

data::Dataset generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  auto schema = std::make_shared<const data::FeatureSchema>(synthetic_schema(spec.noise_features));
  Rng rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t d = schema->feature_count();
  Matrix x(spec.n, d);
  std::vector<int> y(spec.n);
  std::vector<std::vector<int>> sensitive(1, std::vector<int>(spec.n));
  const double keep = (1.0 + spec.beta) / 2.0;
  for (std::size_t i = 0; i < spec.n; ++i) {
    const int s = unit(rng) < 0.5 ? 1 : 0;
    const int proxy = unit(rng) < keep ? s : 1 - s;
    const double merit = normal(rng);
    x(i, 0) = merit;
    x(i, 1) = proxy == 1 ? 0.0 : 1.0;
    for (std::size_t j = 2; j < d; ++j) x(i, j) = normal(rng);
    const double latent = merit + spec.label_gap * spec.beta * (s - 0.5) + spec.label_noise * normal(rng);
    y[i] = latent > 0.0 ? 1 : 0;
    sensitive[0][i] = s == 1 ? 0 : 1;
  }
  data::Provenance prov;
  prov.rows_read = spec.n;
  prov.log.push_back("synthetic " + spec.to_json().dump());
  return data::Dataset(schema, std::move(x), std::move(y), std::move(sensitive), std::move(prov));
}

void write_synthetic_csv(const data::Dataset& dataset, std::ostream& out) {
  const auto& schema = dataset.schema();
  for (const auto& f : schema.features) out << f.name << ',';
  out << schema.sensitive.at(0).column << ',' << schema.target.column << '\n';
  const auto s = dataset.sensitive(0);
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    for (std::size_t j = 0; j < schema.feature_count(); ++j) out << dataset.value_string(i, j) << ',';
    out << (s[i] == 0 ? schema.sensitive[0].privileged : schema.sensitive[0].unprivileged) << ','
        << dataset.target()[i] << '\n';
  }
}

}  // namespace cfaudit::audit
