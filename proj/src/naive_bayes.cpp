#include "relthresh/naive_bayes.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "relthresh/error.hpp"

namespace relthresh {

namespace {

// Per-class sufficient statistics. Rows can be added and removed, which
// makes leave-one-out linear in the number of rows.
struct NbAccumulator {
    std::size_t cols = 0;
    std::array<std::size_t, 2> count{0, 0};
    std::array<std::vector<double>, 2> sum, sumsq;

    explicit NbAccumulator(std::size_t c) : cols(c) {
        for (int k = 0; k < 2; ++k) {
            sum[k].assign(c, 0.0);
            sumsq[k].assign(c, 0.0);
        }
    }

    void update(std::span<const double> row, int cls, double sign) {
        count[cls] = sign > 0 ? count[cls] + 1 : count[cls] - 1;
        for (std::size_t j = 0; j < cols; ++j) {
            sum[cls][j] += sign * row[j];
            sumsq[cls][j] += sign * row[j] * row[j];
        }
    }

    NaiveBayesModel model(NbMode mode) const {
        if (count[0] == 0 || count[1] == 0) {
            throw Error(ErrorCode::DegenerateTraining, "naive Bayes training data holds a single class");
        }
        NaiveBayesModel m;
        m.mode = mode;
        const double n = static_cast<double>(count[0] + count[1]);
        for (int k = 0; k < 2; ++k) {
            const double nk = static_cast<double>(count[k]);
            m.priors[k] = nk / n;
            if (mode == NbMode::RawGaussian) {
                m.means[k].resize(cols);
                m.variances[k].resize(cols);
                for (std::size_t j = 0; j < cols; ++j) {
                    // (n*sumsq - sum^2) / n^2 is exact for integer-valued features.
                    double var = (nk * sumsq[k][j] - sum[k][j] * sum[k][j]) / (nk * nk);
                    m.means[k][j] = sum[k][j] / nk;
                    m.variances[k][j] = std::max(var, kVarianceFloor);
                }
            } else {
                m.rates[k].resize(cols);
                for (std::size_t j = 0; j < cols; ++j) m.rates[k][j] = (sum[k][j] + 1.0) / (nk + 2.0);
            }
        }
        return m;
    }
};

void check_shape(const FeatureMatrix& features, std::span<const std::uint8_t> labels) {
    if (features.rows != labels.size()) throw Error(ErrorCode::Config, "feature rows and labels differ in length");
}

}  // namespace

NaiveBayesModel nb_fit(const FeatureMatrix& features, std::span<const std::uint8_t> labels, NbMode mode) {
    check_shape(features, labels);
    NbAccumulator acc(features.cols);
    for (std::size_t r = 0; r < features.rows; ++r) acc.update(features.row(r), labels[r] ? 1 : 0, +1.0);
    return acc.model(mode);
}

std::array<double, 2> nb_posterior(const NaiveBayesModel& model, std::span<const double> row) {
    std::array<double, 2> logp{};
    for (int k = 0; k < 2; ++k) {
        double lp = std::log(model.priors[k]);
        for (std::size_t j = 0; j < row.size(); ++j) {
            if (model.mode == NbMode::RawGaussian) {
                double var = model.variances[k][j];
                double d = row[j] - model.means[k][j];
                lp += -0.5 * std::log(2.0 * std::numbers::pi * var) - d * d / (2.0 * var);
            } else {
                double rate = model.rates[k][j];
                lp += row[j] > 0.5 ? std::log(rate) : std::log1p(-rate);
            }
        }
        logp[k] = lp;
    }
    double top = std::max(logp[0], logp[1]);
    double e0 = std::exp(logp[0] - top), e1 = std::exp(logp[1] - top);
    return {e0 / (e0 + e1), e1 / (e0 + e1)};
}

bool nb_predict(const NaiveBayesModel& model, std::span<const double> row) {
    auto post = nb_posterior(model, row);
    return post[1] > post[0];
}

NbLoocvResult loocv_nb(const FeatureMatrix& features, std::span<const std::uint8_t> labels, NbMode mode) {
    check_shape(features, labels);
    NbAccumulator acc(features.cols);
    for (std::size_t r = 0; r < features.rows; ++r) acc.update(features.row(r), labels[r] ? 1 : 0, +1.0);

    NbLoocvResult result;
    for (std::size_t r = 0; r < features.rows; ++r) {
        const int cls = labels[r] ? 1 : 0;
        ++result.folds;
        if (acc.count[cls] == 1) {
            ++result.skipped_folds;
            continue;
        }
        acc.update(features.row(r), cls, -1.0);
        bool predicted = nb_predict(acc.model(mode), features.row(r));
        acc.update(features.row(r), cls, +1.0);
        if (cls) (predicted ? result.cm.tp : result.cm.fn)++;
        else (predicted ? result.cm.fp : result.cm.tn)++;
    }
    result.g_mean = g_mean(result.cm);
    return result;
}

NbVariant NbVariant::raw(std::vector<MetricId> metrics) {
    NbVariant v;
    v.mode = NbMode::RawGaussian;
    v.metrics = std::move(metrics);
    return v;
}

NbVariant NbVariant::with_thresholds(MetricThresholds thresholds) {
    NbVariant v;
    v.mode = NbMode::BinarizedBernoulli;
    for (const auto& [metric, _] : thresholds) v.metrics.push_back(metric);
    v.thresholds = std::move(thresholds);
    return v;
}

NbLoocvResult loocv_nb(const SystemDataset& d, const NbVariant& variant) {
    if (d.size() < 10) {
        throw Error(ErrorCode::InsufficientData, d.display_name() + " has fewer than 10 classes for naive Bayes LOOCV");
    }
    Labels labels = d.labels();
    auto faulty = std::count(labels.begin(), labels.end(), std::uint8_t{1});
    if (faulty == 0 || static_cast<std::size_t>(faulty) == labels.size()) {
        throw Error(ErrorCode::DegenerateOutcome, d.display_name() + " lacks one of the two outcomes");
    }
    FeatureMatrix features = variant.mode == NbMode::RawGaussian
                                 ? raw_features(d, variant.metrics)
                                 : binarize_features(d, variant.thresholds, variant.metrics);
    return loocv_nb(features, labels, variant.mode);
}

}  // namespace relthresh
