#pragma once

#include <span>
#include <string>
#include <vector>

#include "relthresh/evaluation.hpp"
#include "relthresh/naive_bayes.hpp"
#include "relthresh/rank_tests.hpp"

namespace relthresh {

inline constexpr const char* kNbLrModel = "NB-LR-thresholds";
inline constexpr const char* kNbEstimatedModel = "NB-estimated-thresholds";
inline constexpr const char* kNbRawModel = "NB-no-thresholds";

struct NbComparison {
    ScoreTable table;  // columns: LR thresholds, estimated thresholds, no thresholds
    RankTestResult test;
    std::vector<std::string> warnings;
};

/// Per-dataset LOOCV g-means of three naive Bayes variants over `metrics`,
/// followed by Friedman / Skillings-Mack and Nemenyi. A threshold variant
/// uses whichever of `metrics` have a threshold for that dataset and is
/// missing when none do; cells whose LOOCV fails are missing as well.
NbComparison compare_nb_models(const Corpus& corpus, std::span<const MetricId> metrics, const ThresholdMap& lr_thresholds,
                               const ThresholdMap& estimated_thresholds, double alpha = 0.05);

}  // namespace relthresh
