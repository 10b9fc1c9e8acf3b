#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "relthresh/dataset.hpp"
#include "relthresh/logit.hpp"

namespace relthresh {

struct SizeThresholdPair {
    std::string system_id;
    std::string version_label;
    int version_order = 0;
    std::size_t size = 0;
    std::optional<std::int64_t> threshold;  // nullopt is reported as `x`
};

enum class SpearmanPValue {
    TApproximation,
    ExactPermutation,  // used only for n <= 10; larger samples fall back to the t approximation
};

struct EstimationConfig {
    ThresholdConfig threshold;
    std::optional<double> population_ratio;  // computed from the corpus when absent
    RatioMode ratio_mode = RatioMode::MeanOfRatios;
    SpearmanPValue spearman_p = SpearmanPValue::TApproximation;
    std::size_t min_training_pairs = 3;
};

double resolve_population_ratio(const Corpus& corpus, const EstimationConfig& cfg);

/// Threshold analysis of one metric in every dataset. Datasets whose fit
/// fails (too few classes, one outcome only) come back with
/// reason == FitFailed instead of aborting the run.
std::vector<ThresholdAnalysis> analyze_corpus(const Corpus& corpus, const MetricId& metric,
                                              const EstimationConfig& cfg = {});

std::vector<SizeThresholdPair> pairs_from_analyses(std::span<const ThresholdAnalysis> analyses,
                                                   const Corpus& corpus);

/// One size-threshold pair per dataset, in corpus order.
std::vector<SizeThresholdPair> build_pairs(const Corpus& corpus, const MetricId& metric,
                                           const EstimationConfig& cfg = {});

/// Correlation input: the latest version of each system, kept only when it
/// has a threshold. At most one pair per system.
std::vector<std::pair<double, double>> latest_version_pairs(std::span<const SizeThresholdPair> pairs);

struct CorrelationResult {
    MetricId metric;
    double rho = 0.0;
    double p_value = 1.0;
    std::size_t n_pairs = 0;
    std::size_t df = 0;
};

CorrelationResult spearman(std::span<const std::pair<double, double>> pairs,
                           SpearmanPValue method = SpearmanPValue::TApproximation);

/// Spearman correlation of size against threshold on the deduplicated pairs.
CorrelationResult correlate(const Corpus& corpus, const MetricId& metric, const EstimationConfig& cfg = {});

struct MetricScreen {
    MetricId metric;
    std::optional<CorrelationResult> correlation;
    bool selected = false;
    std::string note;
};

std::vector<MetricScreen> screen_metrics_detailed(const Corpus& corpus, std::span<const MetricId> metrics,
                                                  const EstimationConfig& cfg = {});

/// Metrics with a significant (p < sig_level) positive size-threshold
/// correlation.
std::vector<MetricId> screen_metrics(const Corpus& corpus, std::span<const MetricId> metrics,
                                     const EstimationConfig& cfg = {});

struct EstimationModel {
    MetricId metric;
    double slope = 0.0;
    double intercept = 0.0;
    std::size_t n_train = 0;
};

/// Least squares threshold = slope * size + intercept over the pairs that
/// carry a threshold.
EstimationModel fit_ols(std::span<const SizeThresholdPair> pairs, const MetricId& metric = {});

ThresholdResult estimate_threshold(const EstimationModel& model, std::size_t size,
                                   RoundingPolicy policy = RoundingPolicy::HalfUp);

using VersionKey = std::pair<std::string, std::string>;  // (system, version)

struct LoocvRound {
    std::string test_system;
    EstimationModel model;
    std::vector<std::string> training_systems;
};

struct LoocvResult {
    MetricId metric;
    std::map<VersionKey, ThresholdResult> thresholds;
    std::vector<LoocvRound> rounds;
    std::vector<std::string> warnings;
};

/// Pairs usable for training when `test_system` is held out.
std::vector<SizeThresholdPair> training_pairs_excluding(std::span<const SizeThresholdPair> pairs,
                                                        std::string_view test_system);

/// Leave-one-system-out: each round drops every version of one system,
/// fits on the rest, and assigns a test threshold to each dropped version.
/// Throws Error(InsufficientData) naming the round when fewer than
/// `min_training_pairs` remain.
LoocvResult leave_one_system_out(std::span<const SizeThresholdPair> pairs, const MetricId& metric,
                                 std::size_t min_training_pairs = 3,
                                 RoundingPolicy policy = RoundingPolicy::HalfUp);

LoocvResult leave_one_system_out(const Corpus& corpus, const MetricId& metric, const EstimationConfig& cfg = {});

nlohmann::json to_json(const CorrelationResult& c);
nlohmann::json to_json(const EstimationModel& m);

}  // namespace relthresh
