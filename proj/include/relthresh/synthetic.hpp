#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "relthresh/dataset.hpp"

namespace relthresh {

enum class LabelModel {
    Logistic,  // P(faulty | x) = sigmoid(alpha + beta * x)
    Step,      // P(faulty | x) = x >= T ? step_risk_high : step_risk_low
};

/// Discretized Lomax (Pareto II) metric distribution, optionally coupled
/// to the driver metric: value = floor(coupling * driver + Lomax draw).
struct SyntheticMetric {
    MetricId id;
    double scale = 10.0;
    double shape = 3.0;
    std::int64_t max_value = 2000;
    double coupling = 0.0;
};

/// Parameters of a synthetic corpus. Faulty labels depend on the `driver`
/// metric only. The driver follows either fixed logistic parameters
/// (planted_alpha / planted_beta) or a planted size-threshold law: each
/// version's parameters are solved so the prior-corrected VARL at
/// `risk_increase` equals threshold_slope * size + threshold_intercept and
/// the expected defect ratio equals the system's drawn target.
struct SyntheticSpec {
    std::size_t n_systems = 12;
    std::size_t versions_per_system = 3;
    std::vector<std::size_t> version_counts;  // per system; overrides versions_per_system when set
    std::size_t size_min = 300;
    std::size_t size_max = 1500;
    double version_growth = 0.15;  // relative size increase per version
    std::vector<SyntheticMetric> metrics;
    MetricId driver;
    LabelModel label_model = LabelModel::Logistic;
    std::optional<double> planted_alpha;
    std::optional<double> planted_beta;
    std::optional<double> threshold_slope;
    std::optional<double> threshold_intercept;
    double risk_increase = 0.10;
    double defect_ratio_min = 0.3;
    double defect_ratio_max = 0.3;
    double step_risk_low = 0.15;
    double step_risk_high = 0.75;
    std::uint64_t seed = 42;

    std::size_t versions_of(std::size_t system_index) const {
        return version_counts.empty() ? versions_per_system : version_counts[system_index];
    }

    /// Planted threshold for a version of `size` classes.
    double planted_threshold(std::size_t size) const;
};

/// Throws Error(InvalidSpec) on inconsistent ranges or parameters.
void validate(const SyntheticSpec& spec);

/// Deterministic: the same spec always yields the same corpus.
Corpus generate_synthetic(const SyntheticSpec& spec);

SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SyntheticSpec& spec);

/// 12 systems of 6 versions, a planted CBO law with slope 0.01 and
/// intercept 3, a defect ratio of 0.3 and an unrelated WMC metric.
SyntheticSpec planted_line_spec(std::uint64_t seed = 42);

/// The same law at a defect ratio of 0.45. Faulty classes then dominate
/// above the planted threshold, so a single binarized metric separates the
/// classes for a naive Bayes model.
SyntheticSpec planted_boundary_spec(std::uint64_t seed = 42);

}  // namespace relthresh
