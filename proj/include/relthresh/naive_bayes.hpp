#pragma once

#include <array>
#include <span>
#include <vector>

#include "relthresh/evaluation.hpp"

namespace relthresh {

enum class NbMode {
    RawGaussian,         // per-class normal likelihood on raw metric values
    BinarizedBernoulli,  // per-class Bernoulli likelihood on 0/1 features
};

inline constexpr double kVarianceFloor = 1e-9;

/// Index 0 = not faulty, 1 = faulty.
struct NaiveBayesModel {
    NbMode mode = NbMode::RawGaussian;
    std::array<double, 2> priors{0.5, 0.5};
    std::array<std::vector<double>, 2> means;      // RawGaussian
    std::array<std::vector<double>, 2> variances;  // RawGaussian, floored
    std::array<std::vector<double>, 2> rates;      // BinarizedBernoulli, Laplace-smoothed
};

/// Throws Error(DegenerateTraining) unless both classes are present.
NaiveBayesModel nb_fit(const FeatureMatrix& features, std::span<const std::uint8_t> labels, NbMode mode);

/// Posterior {P(clean | row), P(faulty | row)}.
std::array<double, 2> nb_posterior(const NaiveBayesModel& model, std::span<const double> row);

/// Faulty only when its posterior strictly exceeds the clean posterior.
bool nb_predict(const NaiveBayesModel& model, std::span<const double> row);

struct NbLoocvResult {
    ConfusionMatrix cm;
    double g_mean = 0.0;
    std::size_t folds = 0;
    std::size_t skipped_folds = 0;  // training split held a single class
};

/// Leave-one-out over the rows of one dataset; confusion is aggregated over
/// folds before computing the g-mean.
NbLoocvResult loocv_nb(const FeatureMatrix& features, std::span<const std::uint8_t> labels, NbMode mode);

struct NbVariant {
    NbMode mode = NbMode::RawGaussian;
    std::vector<MetricId> metrics;
    MetricThresholds thresholds;  // BinarizedBernoulli only

    static NbVariant raw(std::vector<MetricId> metrics);
    static NbVariant with_thresholds(MetricThresholds thresholds);
};

/// Requires n >= 10 and both outcomes in the dataset.
NbLoocvResult loocv_nb(const SystemDataset& d, const NbVariant& variant);

}  // namespace relthresh
