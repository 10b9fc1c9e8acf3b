#include "relthresh/comparison.hpp"

#include "relthresh/error.hpp"

namespace relthresh {

namespace {

std::optional<MetricThresholds> restrict_to(const ThresholdMap& map, const SystemDataset& d,
                                            std::span<const MetricId> metrics) {
    auto it = map.find({d.system_id, d.version_label});
    if (it == map.end()) return std::nullopt;
    MetricThresholds out;
    for (const auto& m : metrics) {
        if (auto t = it->second.find(m); t != it->second.end()) out.emplace(m, t->second);
    }
    if (out.empty()) return std::nullopt;
    return out;
}

}  // namespace

NbComparison compare_nb_models(const Corpus& corpus, std::span<const MetricId> metrics, const ThresholdMap& lr_thresholds,
                               const ThresholdMap& estimated_thresholds, double alpha) {
    NbComparison out;
    out.table.models = {kNbLrModel, kNbEstimatedModel, kNbRawModel};
    std::vector<MetricId> metric_list(metrics.begin(), metrics.end());

    for (const auto& d : corpus.datasets) {
        std::vector<std::optional<double>> row(3);
        auto run = [&](std::size_t col, const std::optional<NbVariant>& variant) {
            if (!variant) return;
            try {
                auto res = loocv_nb(d, *variant);
                row[col] = res.g_mean;
                if (res.skipped_folds > 0) {
                    out.warnings.push_back(d.display_name() + " " + out.table.models[col] + ": skipped " +
                                           std::to_string(res.skipped_folds) + " single-class folds");
                }
            } catch (const Error& e) {
                out.warnings.push_back(d.display_name() + " " + out.table.models[col] + ": " + e.what());
            }
        };
        auto lr = restrict_to(lr_thresholds, d, metrics);
        auto est = restrict_to(estimated_thresholds, d, metrics);
        run(0, lr ? std::optional(NbVariant::with_thresholds(*lr)) : std::nullopt);
        run(1, est ? std::optional(NbVariant::with_thresholds(*est)) : std::nullopt);
        run(2, NbVariant::raw(metric_list));
        out.table.blocks.push_back(d.display_name());
        out.table.scores.push_back(std::move(row));
    }
    out.test = friedman_test(out.table, true, alpha);
    return out;
}

}  // namespace relthresh
