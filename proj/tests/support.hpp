#pragma once

// Shared fixtures and independent oracles for the test binaries. Oracles
// here deliberately avoid the library's own helpers.

#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "relthresh/dataset.hpp"

namespace testing {

using namespace relthresh;

inline SystemDataset make_dataset(std::string system, std::string version, std::vector<MetricId> ids,
                                  const std::vector<std::vector<std::int64_t>>& values,
                                  const std::vector<std::int64_t>& bugs) {
    SystemDataset d;
    d.system_id = std::move(system);
    d.version_label = std::move(version);
    d.metric_ids = std::move(ids);
    for (std::size_t i = 0; i < bugs.size(); ++i) {
        ClassRecord r;
        r.class_name = "C" + std::to_string(i);
        r.metric_values = values[i];
        r.defect_count = bugs[i];
        r.faulty = bugs[i] >= 1;
        d.classes.push_back(std::move(r));
    }
    return d;
}

/// Single-metric dataset from (value, faulty) columns.
inline SystemDataset xy_dataset(const std::vector<std::int64_t>& xs, const std::vector<int>& ys,
                                std::string system = "s", std::string version = "1",
                                const MetricId& metric = metrics::CBO) {
    std::vector<std::vector<std::int64_t>> values;
    std::vector<std::int64_t> bugs;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        values.push_back({xs[i]});
        bugs.push_back(ys[i]);
    }
    return make_dataset(std::move(system), std::move(version), {metric}, values, bugs);
}

inline double sigmoid_ref(double z) { return 1.0 / (1.0 + std::exp(-z)); }

/// Exact-proportion dataset: `per_level` classes at each integer level in
/// [0, max_level], of which round(per_level * sigmoid(alpha + beta x)) are
/// faulty. The logistic MLE on such data is close to (alpha, beta).
inline SystemDataset planted_levels(double alpha, double beta, int max_level, int per_level,
                                    std::string system = "planted") {
    std::vector<std::int64_t> xs;
    std::vector<int> ys;
    for (int x = 0; x <= max_level; ++x) {
        int faulty = static_cast<int>(std::lround(per_level * sigmoid_ref(alpha + beta * x)));
        for (int i = 0; i < per_level; ++i) {
            xs.push_back(x);
            ys.push_back(i < faulty ? 1 : 0);
        }
    }
    return xy_dataset(xs, ys, std::move(system));
}

namespace oracle {

/// Rank by counting: 1 + #smaller + (#equal - 1) / 2.
inline std::vector<double> count_ranks(const std::vector<double>& v) {
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        double less = 0, equal = 0;
        for (double w : v) {
            if (w < v[i]) ++less;
            if (w == v[i]) ++equal;
        }
        r[i] = 1.0 + less + (equal - 1.0) / 2.0;
    }
    return r;
}

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const double n = static_cast<double>(a.size());
    double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    return pearson(count_ranks(x), count_ranks(y));
}

/// Friedman chi-square, 12N/(k(k+1)) sum R_j^2 - 3N(k+1), with R_j the mean
/// rank of model j and rank 1 the highest score.
inline double friedman_chi2(const std::vector<std::vector<double>>& scores) {
    const std::size_t n = scores.size(), k = scores.front().size();
    std::vector<double> sum(k, 0.0);
    for (const auto& block : scores) {
        std::vector<double> neg;
        for (double s : block) neg.push_back(-s);
        auto r = count_ranks(neg);
        for (std::size_t j = 0; j < k; ++j) sum[j] += r[j];
    }
    double ss = 0;
    for (double s : sum) ss += (s / n) * (s / n);
    const double N = static_cast<double>(n), K = static_cast<double>(k);
    return 12.0 * N / (K * (K + 1)) * ss - 3.0 * N * (K + 1);
}

}  // namespace oracle

}  // namespace testing
