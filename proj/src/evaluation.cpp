#include "relthresh/evaluation.hpp"

#include <cmath>

#include "relthresh/error.hpp"

namespace relthresh {

ConfusionMatrix confusion(std::span<const std::uint8_t> predicted, std::span<const std::uint8_t> actual) {
    if (predicted.size() != actual.size()) throw Error(ErrorCode::Config, "prediction and label lengths differ");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        if (actual[i]) (predicted[i] ? cm.tp : cm.fn)++;
        else (predicted[i] ? cm.fp : cm.tn)++;
    }
    return cm;
}

Labels classify_by_threshold(std::span<const std::int64_t> values, std::int64_t threshold) {
    if (threshold < kMinimumThreshold) {
        throw Error(ErrorCode::Config, "thresholds below " + std::to_string(kMinimumThreshold) + " are not allowed");
    }
    Labels out;
    out.reserve(values.size());
    for (auto v : values) out.push_back(v >= threshold ? 1 : 0);
    return out;
}

double recall(const ConfusionMatrix& cm) {
    if (cm.tp + cm.fn == 0) throw Error(ErrorCode::UndefinedMeasure, "recall undefined: no faulty classes");
    return static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fn);
}

double specificity(const ConfusionMatrix& cm) {
    if (cm.tn + cm.fp == 0) throw Error(ErrorCode::UndefinedMeasure, "specificity undefined: no clean classes");
    return static_cast<double>(cm.tn) / static_cast<double>(cm.tn + cm.fp);
}

double g_mean(const ConfusionMatrix& cm) { return std::sqrt(recall(cm) * specificity(cm)); }

FeatureMatrix raw_features(const SystemDataset& d, std::span<const MetricId> metrics) {
    FeatureMatrix m;
    m.rows = d.size();
    m.cols = metrics.size();
    m.data.resize(m.rows * m.cols);
    for (std::size_t c = 0; c < metrics.size(); ++c) {
        auto column = d.metric_column(metrics[c]);
        for (std::size_t r = 0; r < m.rows; ++r) m.data[r * m.cols + c] = static_cast<double>(column[r]);
    }
    return m;
}

FeatureMatrix binarize_features(const SystemDataset& d, const MetricThresholds& thresholds,
                                std::span<const MetricId> metrics) {
    FeatureMatrix m;
    m.rows = d.size();
    m.cols = metrics.size();
    m.data.resize(m.rows * m.cols);
    for (std::size_t c = 0; c < metrics.size(); ++c) {
        auto it = thresholds.find(metrics[c]);
        if (it == thresholds.end()) {
            throw Error(ErrorCode::Config, "no threshold for metric " + metrics[c].name + " in " + d.display_name());
        }
        auto bits = classify_by_threshold(d.metric_column(metrics[c]), it->second);
        for (std::size_t r = 0; r < m.rows; ++r) m.data[r * m.cols + c] = bits[r];
    }
    return m;
}

FeatureMatrix binarize_features(const SystemDataset& d, const MetricThresholds& thresholds) {
    std::vector<MetricId> metrics;
    for (const auto& [metric, _] : thresholds) metrics.push_back(metric);
    return binarize_features(d, thresholds, metrics);
}

std::vector<GMeanRecord> evaluate_thresholds(const Corpus& corpus, std::span<const MetricId> metrics,
                                             const std::map<std::string, ThresholdMap>& sources) {
    std::vector<GMeanRecord> out;
    for (const auto& d : corpus.datasets) {
        const Labels actual = d.labels();
        for (const auto& metric : metrics) {
            auto column = d.metric_column(metric);
            for (const auto& [source, map] : sources) {
                auto dit = map.find({d.system_id, d.version_label});
                if (dit == map.end()) continue;
                auto mit = dit->second.find(metric);
                if (mit == dit->second.end()) continue;
                GMeanRecord rec;
                rec.system_id = d.system_id;
                rec.version_label = d.version_label;
                rec.metric = metric;
                rec.source = source;
                rec.threshold = mit->second;
                rec.cm = confusion(classify_by_threshold(column, mit->second), actual);
                if (rec.cm.tp + rec.cm.fn > 0 && rec.cm.tn + rec.cm.fp > 0) rec.g_mean = g_mean(rec.cm);
                out.push_back(std::move(rec));
            }
        }
    }
    return out;
}

}  // namespace relthresh
