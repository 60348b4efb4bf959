#include "cfaudit/model/grid_search.hpp"

#include <algorithm>
#include <map>

#include "cfaudit/common/error.hpp"
#include "cfaudit/common/parallel.hpp"
#include "cfaudit/common/random.hpp"
#include "cfaudit/model/evaluation.hpp"

namespace cfaudit::model {

std::string_view to_string(Objective objective) { return objective == Objective::auc ? "auc" : "f1"; }

Objective objective_from_string(std::string_view text) {
  if (text == "auc") return Objective::auc;
  if (text == "f1") return Objective::f1;
  throw ValidationError("unknown CV objective '" + std::string(text) + "'");
}

void CvConfig::validate(std::span<const int> labels) const {
  if (folds < 2) throw ValidationError("cross-validation needs at least 2 folds");
  if (!grid.is_object() || grid.empty()) throw ValidationError("grid must be a non-empty object");
  for (const auto& [key, values] : grid.items()) {
    if (!values.is_array() || values.empty()) {
      throw ValidationError("grid entry '" + key + "' must be a non-empty list");
    }
  }
  std::size_t counts[2] = {0, 0};
  for (int y : labels) ++counts[y == 1 ? 1 : 0];
  if (static_cast<std::size_t>(folds) > std::min(counts[0], counts[1])) {
    throw ValidationError("folds (" + std::to_string(folds) + ") exceed the smallest class count (" +
                          std::to_string(std::min(counts[0], counts[1])) + ")");
  }
}

std::vector<nlohmann::ordered_json> expand_grid(const nlohmann::ordered_json& base,
                                                const nlohmann::ordered_json& grid) {
  std::vector<nlohmann::ordered_json> cells{base.is_object() ? base : nlohmann::ordered_json::object()};
  for (const auto& [key, values] : grid.items()) {
    std::vector<nlohmann::ordered_json> next;
    for (const auto& cell : cells) {
      for (const auto& v : values) {
        auto c = cell;
        c[key] = v;
        next.push_back(std::move(c));
      }
    }
    cells = std::move(next);
  }
  return cells;
}

std::vector<std::size_t> stratified_fold_assignment(std::span<const int> labels, int folds,
                                                    std::uint64_t seed) {
  std::vector<std::size_t> assignment(labels.size());
  Rng rng(seed);
  for (int cls = 0; cls < 2; ++cls) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == cls) rows.push_back(i);
    }
    std::shuffle(rows.begin(), rows.end(), rng);
    for (std::size_t p = 0; p < rows.size(); ++p) assignment[rows[p]] = p % static_cast<std::size_t>(folds);
  }
  return assignment;
}

CvResult grid_search_cv(Family family, const CvConfig& cv, const EncodedMatrix& train,
                        std::span<const int> labels, const nlohmann::ordered_json& base_params,
                        unsigned workers) {
  if (family == Family::external) throw ValidationError("external models cannot be grid-searched");
  cv.validate(labels);
  const auto fold_of = stratified_fold_assignment(labels, cv.folds, cv.seed);
  const auto folds = static_cast<std::size_t>(cv.folds);

  struct FoldData {
    EncodedMatrix train, valid;
    std::vector<int> train_y, valid_y;
  };
  std::vector<FoldData> fold_data(folds);
  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<std::size_t> tr, va;
    for (std::size_t i = 0; i < labels.size(); ++i) (fold_of[i] == f ? va : tr).push_back(i);
    auto& fd = fold_data[f];
    fd.train = {train.values.select_rows(tr), train.columns};
    fd.valid = {train.values.select_rows(va), train.columns};
    for (auto i : tr) fd.train_y.push_back(labels[i]);
    for (auto i : va) fd.valid_y.push_back(labels[i]);
  }

  CvResult result;
  for (auto& params : expand_grid(base_params, cv.grid)) result.cells.push_back(CvCell{std::move(params), {}, {}});
  for (auto& cell : result.cells) cell.fold_scores.assign(folds, std::nullopt);
  std::vector<std::string> fold_errors(result.cells.size() * folds);

  parallel_for(result.cells.size() * folds, workers, [&](std::size_t job) {
    const std::size_t c = job / folds, f = job % folds;
    auto& cell = result.cells[c];
    const auto& fd = fold_data[f];
    try {
      auto handle = fit(ModelSpec{family, cell.params}, fd.train, fd.train_y, derive_seed(cv.seed, f));
      const auto pred = handle.predict(fd.valid);
      if (cv.objective == Objective::auc) {
        auto auc = roc_auc(pred.probas, fd.valid_y);
        if (auc.defined()) cell.fold_scores[f] = *auc;
        else fold_errors[job] = auc.undefined_reason;
      } else {
        cell.fold_scores[f] = f1_score(confusion_counts(pred.labels, fd.valid_y));
      }
    } catch (const ValidationError& e) {
      fold_errors[job] = e.what();
    }
  });

  std::optional<double> best;
  for (std::size_t c = 0; c < result.cells.size(); ++c) {
    auto& cell = result.cells[c];
    double sum = 0.0;
    std::size_t defined = 0;
    for (std::size_t f = 0; f < folds; ++f) {
      if (cell.fold_scores[f]) {
        sum += *cell.fold_scores[f];
        ++defined;
      } else {
        result.warnings.push_back("cell " + std::to_string(c) + " fold " + std::to_string(f) +
                                  " score undefined: " + fold_errors[c * folds + f]);
      }
    }
    if (defined == 0) {
      result.warnings.push_back("cell " + std::to_string(c) + " skipped: no defined fold score");
      continue;
    }
    cell.mean = sum / static_cast<double>(defined);
    if (!best || *cell.mean > *best) {
      best = cell.mean;
      result.best = c;
    }
  }
  if (!best) throw ValidationError("grid search: every cell was skipped");
  result.best_params = result.cells[result.best].params;
  return result;
}

}  // namespace cfaudit::model
