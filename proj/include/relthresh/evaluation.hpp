#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "relthresh/dataset.hpp"
#include "relthresh/estimation.hpp"

namespace relthresh {

struct ConfusionMatrix {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

    std::size_t total() const noexcept { return tp + fp + tn + fn; }
    ConfusionMatrix& operator+=(const ConfusionMatrix& o) noexcept {
        tp += o.tp, fp += o.fp, tn += o.tn, fn += o.fn;
        return *this;
    }
    bool operator==(const ConfusionMatrix&) const = default;
};

ConfusionMatrix confusion(std::span<const std::uint8_t> predicted, std::span<const std::uint8_t> actual);

/// Classes whose metric value reaches the threshold are predicted faulty.
Labels classify_by_threshold(std::span<const std::int64_t> values, std::int64_t threshold);

double recall(const ConfusionMatrix& cm);
double specificity(const ConfusionMatrix& cm);

/// sqrt(recall * specificity). Throws Error(UndefinedMeasure) when either
/// class is absent from the ground truth.
double g_mean(const ConfusionMatrix& cm);

/// Row-major dense matrix of per-class features.
struct FeatureMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
};

using MetricThresholds = std::map<MetricId, std::int64_t>;

FeatureMatrix raw_features(const SystemDataset& d, std::span<const MetricId> metrics);

/// Indicator matrix: 1 where the metric value reaches its threshold.
/// Throws Error(Config) when a requested metric has no threshold.
FeatureMatrix binarize_features(const SystemDataset& d, const MetricThresholds& thresholds,
                                std::span<const MetricId> metrics);
FeatureMatrix binarize_features(const SystemDataset& d, const MetricThresholds& thresholds);

/// Thresholds per dataset, keyed by (system, version).
using ThresholdMap = std::map<VersionKey, MetricThresholds>;

struct GMeanRecord {
    std::string system_id;
    std::string version_label;
    MetricId metric;
    std::string source;
    std::int64_t threshold = 0;
    ConfusionMatrix cm;
    std::optional<double> g_mean;  // nullopt when the dataset lacks one outcome
};

/// Scores each available (dataset, metric) threshold of each source as a
/// single-metric classifier.
std::vector<GMeanRecord> evaluate_thresholds(const Corpus& corpus, std::span<const MetricId> metrics,
                                             const std::map<std::string, ThresholdMap>& sources);

}  // namespace relthresh
