#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include <nlohmann/json.hpp>

#include "relthresh/dataset.hpp"

namespace relthresh {

struct FitOptions {
    double tol = 1e-8;  // on the Euclidean norm of the score vector
    int max_iter = 100;
    double separation_beta = 50.0;
};

struct LogisticFit {
    MetricId metric;
    double alpha = 0.0;
    double beta = 0.0;
    double se_alpha = 0.0;
    double se_beta = 0.0;
    double p_value_beta = 1.0;  // Wald
    double p_value_lrt = 1.0;   // likelihood ratio, for sensitivity runs
    double log_likelihood = 0.0;
    double score_norm = 0.0;
    std::size_t n = 0;
    int iterations = 0;
    bool converged = false;
    bool separation_detected = false;
};

/// Maximum-likelihood fit of P(faulty | x) = sigmoid(alpha + beta * x) by
/// Newton-Raphson / IRLS with step halving.
///
/// Requires n >= 10 and both outcomes present. A metric that is constant
/// over the sample yields beta = 0 with an infinite standard error.
/// Separable samples return with separation_detected set instead of
/// throwing; other non-convergence throws Error(Convergence).
LogisticFit fit_univariate_logistic(std::span<const double> xs, std::span<const std::uint8_t> ys,
                                    const FitOptions& options = {});

/// Gradient of the log-likelihood with respect to (alpha, beta).
std::array<double, 2> logistic_score(double alpha, double beta, std::span<const double> xs,
                                     std::span<const std::uint8_t> ys);

double sigmoid(double z) noexcept;
double logit(double p);

double risk_at(double alpha, double beta, double x) noexcept;
double background_risk(double alpha) noexcept;

struct CorrectionContext {
    double y_pop;  // population defect ratio
    double y_bar;  // defect ratio of the dataset being fitted
};

/// Prior correction of the intercept for a sample whose outcome ratio
/// differs from the population's.
double correct_intercept(double alpha, const CorrectionContext& ctx);

struct RiskParams {
    double risk_increase;
    double p0;
    double p_arl;
};

/// Acceptable risk level = background risk + allowed increase. Throws
/// Error(RiskOverflow) when the result reaches 1.
RiskParams acceptable_risk(double p0, double risk_increase);

/// Metric value at which the modelled risk equals p_arl.
double varl_threshold(double alpha, double beta, double p_arl);

enum class RoundingPolicy { HalfUp, HalfEven };

std::int64_t round_to_integer(double value, RoundingPolicy policy = RoundingPolicy::HalfUp);
std::string_view to_string(RoundingPolicy policy) noexcept;
RoundingPolicy parse_rounding_policy(std::string_view text);

inline constexpr std::int64_t kMinimumThreshold = 2;

struct ThresholdResult {
    MetricId metric;
    double varl_raw = 0.0;
    std::int64_t rounded = 0;  // before clamping
    std::int64_t threshold = kMinimumThreshold;
    bool corrected = false;
    bool clamped = false;
    RoundingPolicy rounding = RoundingPolicy::HalfUp;
};

/// Integer threshold: max(2, round(varl_raw)).
ThresholdResult finalize_threshold(double varl_raw, RoundingPolicy policy = RoundingPolicy::HalfUp);

enum class SignificanceTest { Wald, LikelihoodRatio };

struct ThresholdConfig {
    double risk_increase = 0.10;
    bool apply_correction = true;
    double sig_level = 0.05;
    SignificanceTest test = SignificanceTest::Wald;
    RoundingPolicy rounding = RoundingPolicy::HalfUp;
    FitOptions fit;
};

enum class AbsenceReason {
    None,
    NotSignificant,
    NonPositiveSlope,
    RiskOverflow,
    Separation,
    FitFailed,  // fit threw (too few classes, single outcome); only set by callers that catch
};

std::string_view to_string(AbsenceReason reason) noexcept;

/// Full record of one (dataset, metric) threshold computation.
struct ThresholdAnalysis {
    MetricId metric;
    std::string system_id;
    std::string version_label;
    std::size_t size = 0;
    double y_bar = 0.0;
    std::optional<LogisticFit> fit;
    std::optional<double> alpha_hat;  // set when the correction was applied
    std::optional<RiskParams> risk;
    std::optional<ThresholdResult> threshold;
    AbsenceReason reason = AbsenceReason::None;
    std::string detail;

    double p_value(SignificanceTest test) const;
};

/// Fits the metric in one dataset and, when the association is
/// significant and positive, runs the threshold chain
/// (corrected) alpha -> p0 -> P_ARL -> VARL -> integer threshold.
/// Fit errors propagate.
ThresholdAnalysis analyze_system_threshold(const SystemDataset& d, const MetricId& metric, double y_pop,
                                           const ThresholdConfig& cfg = {});

/// Convenience wrapper: the threshold, or nullopt for an `x` entry.
std::optional<ThresholdResult> calc_system_thresholds(const SystemDataset& d, const MetricId& metric,
                                                      double y_pop, const ThresholdConfig& cfg = {});

nlohmann::json to_json(const LogisticFit& fit);
nlohmann::json to_json(const ThresholdResult& t);
nlohmann::json to_json(const ThresholdAnalysis& a);

}  // namespace relthresh
