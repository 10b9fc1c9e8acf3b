#include "relthresh/fixture.hpp"

#include <algorithm>
#include <fstream>

#include "relthresh/error.hpp"

namespace relthresh {

std::vector<EstimationModel> published_models() {
    // n_train: versions with a significant LR threshold for the metric.
    return {
        {metrics::CBO, 0.00958, 3.69029, 30},
        {metrics::DCC, 0.00432, 0.50917, 30},
        {metrics::EXPORT_COUPLING, 0.02162, 2.51718, 15},
        {metrics::IMPORT_COUPLING, 0.00476, 2.07069, 33},
        {metrics::NOM, 0.00810, 4.98745, 34},
    };
}

std::vector<EstimationModel> models_from_json(const nlohmann::json& j) {
    const auto& list = j.is_object() && j.contains("models") ? j.at("models") : j;
    std::vector<EstimationModel> out;
    for (const auto& m : list) {
        EstimationModel model;
        model.metric = MetricId::parse(m.at("metric").get<std::string>());
        model.slope = m.at("slope").get<double>();
        model.intercept = m.at("intercept").get<double>();
        model.n_train = m.value("n_train", std::size_t{0});
        out.push_back(std::move(model));
    }
    return out;
}

nlohmann::json models_to_json(std::span<const EstimationModel> models) {
    nlohmann::json list = nlohmann::json::array();
    for (const auto& m : models) list.push_back(to_json(m));
    return {{"models", list}};
}

std::vector<EstimationModel> load_models(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    try {
        return models_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::Config, path.string() + ": " + e.what());
    }
}

ThresholdResult estimate_from_fixture(const MetricId& metric, std::size_t size, std::span<const EstimationModel> models,
                                      RoundingPolicy policy) {
    auto it = std::find_if(models.begin(), models.end(), [&](const EstimationModel& m) { return m.metric == metric; });
    if (it == models.end()) {
        throw Error(ErrorCode::NotInFixture, "no estimation model for metric " + metric.name);
    }
    return estimate_threshold(*it, size, policy);
}

ThresholdResult estimate_from_fixture(const MetricId& metric, std::size_t size) {
    static const auto models = published_models();
    return estimate_from_fixture(metric, size, models);
}

}  // namespace relthresh
