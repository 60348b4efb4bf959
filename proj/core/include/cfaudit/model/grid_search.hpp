#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cfaudit/model/classifier.hpp"

namespace cfaudit::model {

enum class Objective { auc, f1 };

std::string_view to_string(Objective objective);
Objective objective_from_string(std::string_view text);

struct CvConfig {
  int folds = 5;
  Objective objective = Objective::auc;
  /// hyperparameter name -> list of candidates. Cells are the cartesian
  /// product in declaration order (first key varies slowest).
  nlohmann::ordered_json grid = nlohmann::ordered_json::object();
  std::uint64_t seed = 0;

  void validate(std::span<const int> labels) const;
};

/// Expands `grid` over `base` parameters into the list of cells.
std::vector<nlohmann::ordered_json> expand_grid(const nlohmann::ordered_json& base,
                                                const nlohmann::ordered_json& grid);

/// Stratified fold id per row: rows of each class (class 0 first) are
/// shuffled with one generator seeded by `seed`, then dealt round-robin.
std::vector<std::size_t> stratified_fold_assignment(std::span<const int> labels, int folds,
                                                    std::uint64_t seed);

struct CvCell {
  nlohmann::ordered_json params;
  std::vector<std::optional<double>> fold_scores;
  std::optional<double> mean;  ///< over defined folds; nullopt = cell skipped
};

struct CvResult {
  std::size_t best = 0;
  nlohmann::ordered_json best_params;
  std::vector<CvCell> cells;
  std::vector<std::string> warnings;
};

/// k-fold grid search. The winner is the cell with the highest mean fold
/// score; ties go to the earliest cell. A fold whose score is undefined is
/// left out of that cell's mean (with a warning); a cell with no defined
/// fold is skipped. Fold models use seed derive_seed(cv.seed, fold).
CvResult grid_search_cv(Family family, const CvConfig& cv, const EncodedMatrix& train,
                        std::span<const int> labels, const nlohmann::ordered_json& base_params = {},
                        unsigned workers = 1);

}  // namespace cfaudit::model
