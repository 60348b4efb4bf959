#include "cfaudit/cfgen/genetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cfaudit/common/error.hpp"
#include "cfaudit/common/json_keys.hpp"
#include "cfaudit/common/random.hpp"

namespace cfaudit::cfgen {

void GeneticConfig::validate(std::size_t k) const {
  if (k == 0) throw ValidationError("k must be at least 1");
  if (population < 2 * k) {
    throw ValidationError("genetic population (" + std::to_string(population) + ") must be at least 2k (" +
                          std::to_string(2 * k) + ")");
  }
  if (generations == 0) throw ValidationError("genetic generations must be at least 1");
  if (mutation_rate < 0 || mutation_rate > 1 || crossover_rate < 0 || crossover_rate > 1) {
    throw ValidationError("genetic rates must lie in [0, 1]");
  }
  if (proximity_weight < 0 || sparsity_weight < 0 || diversity_weight < 0 || validity_penalty < 0) {
    throw ValidationError("genetic weights must be non-negative");
  }
  for (const auto& [name, r] : ranges) {
    if (!(r.first <= r.second)) throw ValidationError("genetic range for '" + name + "' is empty");
  }
}

GeneticConfig GeneticConfig::from_json(const nlohmann::ordered_json& j) {
  expect_keys(j,
              {"population", "generations", "mutation_rate", "crossover_rate", "proximity_weight",
               "sparsity_weight", "diversity_weight", "validity_penalty", "immutable", "ranges"},
              "genetic config");
  GeneticConfig c;
  c.population = j.value("population", c.population);
  c.generations = j.value("generations", c.generations);
  c.mutation_rate = j.value("mutation_rate", c.mutation_rate);
  c.crossover_rate = j.value("crossover_rate", c.crossover_rate);
  c.proximity_weight = j.value("proximity_weight", c.proximity_weight);
  c.sparsity_weight = j.value("sparsity_weight", c.sparsity_weight);
  c.diversity_weight = j.value("diversity_weight", c.diversity_weight);
  c.validity_penalty = j.value("validity_penalty", c.validity_penalty);
  if (j.contains("immutable")) c.immutable = j.at("immutable").get<std::vector<std::string>>();
  if (j.contains("ranges")) {
    for (const auto& [name, r] : j.at("ranges").items()) {
      if (!r.is_array() || r.size() != 2) throw ValidationError("genetic range for '" + name + "' needs [lo, hi]");
      c.ranges[name] = {r[0].get<double>(), r[1].get<double>()};
    }
  }
  return c;
}

nlohmann::ordered_json GeneticConfig::to_json() const {
  nlohmann::ordered_json r = nlohmann::ordered_json::object();
  for (const auto& [name, range] : ranges) r[name] = {range.first, range.second};
  return {{"population", population},         {"generations", generations},
          {"mutation_rate", mutation_rate},   {"crossover_rate", crossover_rate},
          {"proximity_weight", proximity_weight}, {"sparsity_weight", sparsity_weight},
          {"diversity_weight", diversity_weight}, {"validity_penalty", validity_penalty},
          {"immutable", immutable},           {"ranges", std::move(r)}};
}

GeneticGenerator::GeneticGenerator(const data::FeatureSchema& schema, const Matrix& train_features,
                                   DecisionProbe f, FeatureDistance distance, GeneticConfig config)
    : features_(schema.features), f_(std::move(f)), distance_(std::move(distance)), config_(std::move(config)) {
  const std::size_t d = features_.size();
  if (train_features.empty()) throw ValidationError("genetic search needs training rows");
  if (train_features.cols() != d) throw ValidationError("genetic: training matrix width does not match the schema");
  for (const auto& name : config_.immutable) {
    if (!schema.feature_index(name)) throw ValidationError("genetic: unknown immutable feature '" + name + "'");
  }
  for (const auto& [name, r] : config_.ranges) {
    if (!schema.feature_index(name)) throw ValidationError("genetic: unknown range feature '" + name + "'");
  }
  lo_.assign(d, 0.0);
  hi_.assign(d, 0.0);
  sigma_.assign(d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    const auto& spec = features_[j];
    const bool fixed = spec.immutable || std::find(config_.immutable.begin(), config_.immutable.end(),
                                                   spec.name) != config_.immutable.end();
    if (!fixed) mutable_.push_back(j);
    if (spec.kind != data::FeatureKind::numeric) {
      lo_[j] = 0.0;
      hi_[j] = static_cast<double>(spec.levels.size()) - 1.0;
    } else if (auto it = config_.ranges.find(spec.name); it != config_.ranges.end()) {
      std::tie(lo_[j], hi_[j]) = it->second;
    } else if (spec.range) {
      std::tie(lo_[j], hi_[j]) = *spec.range;
    } else {
      const auto col = train_features.column(j);
      const auto [lo, hi] = std::minmax_element(col.begin(), col.end());
      lo_[j] = *lo;
      hi_[j] = *hi;
    }
    if (spec.kind != data::FeatureKind::categorical) {
      const auto col = train_features.column(j);
      const double mean = std::accumulate(col.begin(), col.end(), 0.0) / static_cast<double>(col.size());
      double var = 0.0;
      for (double v : col) var += (v - mean) * (v - mean);
      sigma_[j] = 0.1 * std::sqrt(var / static_cast<double>(col.size()));
    }
  }
  if (mutable_.empty()) throw ValidationError("genetic search needs at least one mutable feature");
}

namespace {

struct Scored {
  std::vector<double> genes;
  double fitness = 0.0;
  double distance = 0.0;
  bool valid = false;
};

}  // namespace

CounterfactualSet GeneticGenerator::generate(std::span<const double> x, int desired, std::size_t k,
                                             std::size_t sample_id, std::uint64_t seed) const {
  config_.validate(k);
  const std::size_t d = features_.size();
  if (x.size() != d) throw ValidationError("genetic: sample width does not match the schema");
  if (f_.label(x) == desired) throw ValidationError("sample is already predicted with the desired outcome");

  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto below = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };

  // Feasible box for this sample; it always contains the origin.
  std::vector<double> lo(lo_), hi(hi_);
  for (std::size_t j = 0; j < d; ++j) {
    lo[j] = std::min(lo[j], x[j]);
    hi[j] = std::max(hi[j], x[j]);
  }
  auto whole = [&](std::size_t j) { return features_[j].kind != data::FeatureKind::numeric || features_[j].integer; };
  auto resample = [&](std::size_t j) {
    if (features_[j].kind == data::FeatureKind::categorical) return static_cast<double>(below(features_[j].levels.size()));
    double v = lo[j] + unit(rng) * (hi[j] - lo[j]);
    if (whole(j)) v = std::clamp(std::round(v), std::ceil(lo[j]), std::floor(hi[j]));
    return v;
  };
  auto mutate_gene = [&](std::vector<double>& c, std::size_t j) {
    if (unit(rng) < 0.25) {
      c[j] = x[j];
      return;
    }
    if (features_[j].kind == data::FeatureKind::categorical) {
      c[j] = resample(j);
      return;
    }
    const double step = normal(rng) * sigma_[j];
    double v = c[j] + step;
    if (whole(j)) {
      v = std::round(v);
      if (v == c[j]) v = c[j] + (step < 0 ? -1.0 : 1.0);
    }
    c[j] = std::clamp(v, lo[j], hi[j]);
  };

  const double threshold = f_.model().threshold();
  const auto nf = static_cast<double>(d);
  auto score = [&](std::vector<std::vector<double>>& genes) {
    Matrix rows;
    rows.reserve_rows(genes.size());
    for (const auto& g : genes) rows.append_row(g);
    const auto pred = f_.evaluate(rows);
    std::vector<Scored> out(genes.size());
    for (std::size_t i = 0; i < genes.size(); ++i) {
      auto& s = out[i];
      s.genes = std::move(genes[i]);
      s.valid = pred.labels[i] == desired;
      s.distance = distance_(x, s.genes);
      std::size_t changed = 0;
      for (std::size_t j = 0; j < d; ++j) changed += s.genes[j] != x[j] ? 1 : 0;
      s.fitness = config_.proximity_weight * s.distance + config_.sparsity_weight * static_cast<double>(changed) / nf;
      if (!s.valid) s.fitness += config_.validity_penalty + std::abs(threshold - pred.probas[i]);
    }
    return out;
  };

  std::map<std::vector<double>, std::pair<double, double>> archive;  // valid genes -> (fitness, distance)
  auto record = [&](const std::vector<Scored>& pop) {
    for (const auto& s : pop) {
      if (s.valid) archive.emplace(s.genes, std::make_pair(s.fitness, s.distance));
    }
  };
  auto by_fitness = [](const std::vector<Scored>& pop) {
    std::vector<std::size_t> order(pop.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return pop[a].fitness < pop[b].fitness; });
    return order;
  };

  const std::size_t p = config_.population;
  std::vector<std::vector<double>> genes(p, std::vector<double>(x.begin(), x.end()));
  for (std::size_t i = 0; i < p; ++i) {
    auto& c = genes[i];
    if (i < p / 2) {
      const std::size_t changes = 1 + below(std::min<std::size_t>(2, mutable_.size()));
      for (std::size_t t = 0; t < changes; ++t) {
        const auto j = mutable_[below(mutable_.size())];
        c[j] = resample(j);
      }
    } else {
      bool any = false;
      for (auto j : mutable_) {
        if (unit(rng) < 0.5) {
          c[j] = resample(j);
          any = true;
        }
      }
      if (!any) {
        const auto j = mutable_[below(mutable_.size())];
        c[j] = resample(j);
      }
    }
  }
  auto pop = score(genes);
  record(pop);

  const std::size_t elite = std::max<std::size_t>(1, p / 10);
  for (std::size_t gen = 0; gen < config_.generations; ++gen) {
    const auto order = by_fitness(pop);
    std::vector<std::vector<double>> next;
    next.reserve(p);
    for (std::size_t r = 0; r < order.size() && next.size() < elite; ++r) {
      const auto& g = pop[order[r]].genes;
      if (std::find(next.begin(), next.end(), g) == next.end()) next.push_back(g);
    }
    auto tournament = [&]() -> const std::vector<double>& {
      const std::size_t a = below(p), b = below(p);
      const bool first = pop[a].fitness < pop[b].fitness || (pop[a].fitness == pop[b].fitness && a <= b);
      return pop[first ? a : b].genes;
    };
    while (next.size() < p) {
      const auto& pa = tournament();
      const auto& pb = tournament();
      std::vector<double> child(pa);
      if (unit(rng) < config_.crossover_rate) {
        for (auto j : mutable_) {
          if (unit(rng) < 0.5) child[j] = pb[j];
        }
      }
      for (auto j : mutable_) {
        if (unit(rng) < config_.mutation_rate) mutate_gene(child, j);
      }
      next.push_back(std::move(child));
    }
    pop = score(next);
    record(pop);
  }

  // Greedy set selection over the best distinct valid individuals.
  std::vector<std::pair<std::vector<double>, std::pair<double, double>>> pool(archive.begin(), archive.end());
  std::stable_sort(pool.begin(), pool.end(),
                   [](const auto& a, const auto& b) { return a.second.first < b.second.first; });
  pool.resize(std::min(pool.size(), std::max<std::size_t>(4 * k, 50)));

  CounterfactualSet set;
  set.sample_id = sample_id;
  set.origin.assign(x.begin(), x.end());
  set.desired = desired;
  set.strategy = Strategy::genetic;
  set.seed = seed;
  set.requested = k;

  std::vector<std::size_t> chosen;
  std::vector<char> taken(pool.size(), 0);
  std::vector<double> link(pool.size(), 0.0);  // sum of distances to chosen members
  double pair_sum = 0.0;
  while (chosen.size() < std::min(k, pool.size())) {
    const auto m = static_cast<double>(chosen.size());
    const double current = m >= 2 ? pair_sum / (m * (m - 1) / 2) : 0.0;
    std::size_t best = pool.size();
    double best_gain = 0.0;
    for (std::size_t c = 0; c < pool.size(); ++c) {
      if (taken[c]) continue;
      const double mean_after = m >= 1 ? (pair_sum + link[c]) / ((m + 1) * m / 2) : 0.0;
      const double gain = pool[c].second.first - config_.diversity_weight * (mean_after - current);
      if (best == pool.size() || gain < best_gain) {
        best = c;
        best_gain = gain;
      }
    }
    taken[best] = 1;
    pair_sum += link[best];
    chosen.push_back(best);
    for (std::size_t c = 0; c < pool.size(); ++c) {
      if (!taken[c]) link[c] += distance_(pool[c].first, pool[best].first);
    }
  }
  for (auto c : chosen) set.members.push_back({pool[c].first, pool[c].second.second, true});
  revalidate(set, f_);
  std::erase_if(set.members, [](const CounterfactualMember& m) { return !m.valid; });
  return set;
}

}  // namespace cfaudit::cfgen
