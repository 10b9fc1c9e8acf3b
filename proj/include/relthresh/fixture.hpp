#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "relthresh/estimation.hpp"

namespace relthresh {

/// Published all-data estimation models for CBO, DCC, export coupling,
/// import coupling and NOM on open-source Java systems. WMC has none: its
/// thresholds showed no significant correlation with size.
std::vector<EstimationModel> published_models();

std::vector<EstimationModel> models_from_json(const nlohmann::json& j);
nlohmann::json models_to_json(std::span<const EstimationModel> models);
std::vector<EstimationModel> load_models(const std::filesystem::path& path);

/// Threshold for a system of `size` classes from a fixture model; never
/// touches a corpus. Throws Error(NotInFixture) for unknown metrics.
ThresholdResult estimate_from_fixture(const MetricId& metric, std::size_t size,
                                      std::span<const EstimationModel> models,
                                      RoundingPolicy policy = RoundingPolicy::HalfUp);
ThresholdResult estimate_from_fixture(const MetricId& metric, std::size_t size);

}  // namespace relthresh
