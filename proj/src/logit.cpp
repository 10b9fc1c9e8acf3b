#include "relthresh/logit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "relthresh/error.hpp"
#include "relthresh/stats.hpp"

namespace relthresh {

namespace {

// log(1 + e^z) without overflow.
double softplus(double z) noexcept {
    return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

double log_likelihood(double alpha, double beta, std::span<const double> xs, std::span<const std::uint8_t> ys) {
    double ll = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double eta = alpha + beta * xs[i];
        ll += (ys[i] ? eta : 0.0) - softplus(eta);
    }
    return ll;
}

// Univariate logistic MLE is finite iff the two outcome groups overlap
// strictly on x.
bool separable(std::span<const double> xs, std::span<const std::uint8_t> ys) {
    double min0 = std::numeric_limits<double>::infinity(), max0 = -min0;
    double min1 = min0, max1 = -min0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (ys[i]) {
            min1 = std::min(min1, xs[i]);
            max1 = std::max(max1, xs[i]);
        } else {
            min0 = std::min(min0, xs[i]);
            max0 = std::max(max0, xs[i]);
        }
    }
    return max0 <= min1 || max1 <= min0;
}

void require_probability(double p, const char* what) {
    if (!(p > 0.0 && p < 1.0)) {
        throw Error(ErrorCode::Domain, std::string(what) + " must lie in (0,1), got " + std::to_string(p));
    }
}

}  // namespace

double sigmoid(double z) noexcept {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    double e = std::exp(z);
    return e / (1.0 + e);
}

double logit(double p) {
    require_probability(p, "probability");
    return std::log(p / (1.0 - p));
}

double risk_at(double alpha, double beta, double x) noexcept { return sigmoid(alpha + beta * x); }

double background_risk(double alpha) noexcept { return sigmoid(alpha); }

std::array<double, 2> logistic_score(double alpha, double beta, std::span<const double> xs,
                                     std::span<const std::uint8_t> ys) {
    std::array<double, 2> g{0.0, 0.0};
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double r = (ys[i] ? 1.0 : 0.0) - risk_at(alpha, beta, xs[i]);
        g[0] += r;
        g[1] += xs[i] * r;
    }
    return g;
}

LogisticFit fit_univariate_logistic(std::span<const double> xs, std::span<const std::uint8_t> ys,
                                    const FitOptions& options) {
    if (xs.size() != ys.size()) throw Error(ErrorCode::Config, "xs and ys differ in length");
    const std::size_t n = xs.size();
    if (n < 10) throw Error(ErrorCode::InsufficientData, "logistic fit needs at least 10 observations, got " + std::to_string(n));
    std::size_t positives = std::count_if(ys.begin(), ys.end(), [](std::uint8_t y) { return y != 0; });
    if (positives == 0 || positives == n) {
        throw Error(ErrorCode::DegenerateOutcome, "logistic fit needs both outcomes present");
    }

    const double y_bar = static_cast<double>(positives) / static_cast<double>(n);
    const double null_ll = static_cast<double>(n) * (y_bar * std::log(y_bar) + (1 - y_bar) * std::log(1 - y_bar));

    LogisticFit fit;
    fit.n = n;
    fit.alpha = std::log(y_bar / (1.0 - y_bar));
    fit.beta = 0.0;

    const auto [xmin, xmax] = std::minmax_element(xs.begin(), xs.end());
    if (*xmin == *xmax) {
        // Slope not identifiable; beta = 0 solves the score equations.
        fit.se_alpha = 1.0 / std::sqrt(static_cast<double>(n) * y_bar * (1 - y_bar));
        fit.se_beta = std::numeric_limits<double>::infinity();
        fit.log_likelihood = null_ll;
        fit.converged = true;
        auto g = logistic_score(fit.alpha, fit.beta, xs, ys);
        fit.score_norm = std::hypot(g[0], g[1]);
        return fit;
    }

    fit.separation_detected = separable(xs, ys);

    double ll = log_likelihood(fit.alpha, fit.beta, xs, ys);
    double h00 = 0, h01 = 0, h11 = 0;
    for (int iter = 0; iter <= options.max_iter; ++iter) {
        double g0 = 0, g1 = 0;
        h00 = h01 = h11 = 0;
        for (std::size_t i = 0; i < n; ++i) {
            double p = risk_at(fit.alpha, fit.beta, xs[i]);
            double w = p * (1.0 - p);
            double r = (ys[i] ? 1.0 : 0.0) - p;
            g0 += r;
            g1 += xs[i] * r;
            h00 += w;
            h01 += w * xs[i];
            h11 += w * xs[i] * xs[i];
        }
        fit.score_norm = std::hypot(g0, g1);
        fit.iterations = iter;
        if (fit.score_norm < options.tol) {
            fit.converged = true;
            break;
        }
        if (std::fabs(fit.beta) > options.separation_beta || -ll < 1e-8) {
            fit.separation_detected = true;
            break;
        }
        if (iter == options.max_iter) break;

        double det = h00 * h11 - h01 * h01;
        if (!(det > 0.0) || !std::isfinite(det)) {
            if (fit.separation_detected) break;
            throw Error(ErrorCode::Convergence, "singular information matrix during logistic fit");
        }
        double step_a = (h11 * g0 - h01 * g1) / det;
        double step_b = (h00 * g1 - h01 * g0) / det;

        // Step halving keeps the log-likelihood non-decreasing.
        double scale = 1.0;
        double next_a = 0, next_b = 0, next_ll = 0;
        for (int half = 0; half < 30; ++half) {
            next_a = fit.alpha + scale * step_a;
            next_b = fit.beta + scale * step_b;
            next_ll = log_likelihood(next_a, next_b, xs, ys);
            if (next_ll >= ll - 1e-12 * std::fabs(ll)) break;
            scale *= 0.5;
        }
        fit.alpha = next_a;
        fit.beta = next_b;
        ll = next_ll;
    }
    fit.log_likelihood = ll;

    if (!fit.converged && !fit.separation_detected) {
        throw Error(ErrorCode::Convergence, "logistic fit did not converge in " + std::to_string(options.max_iter) +
                                                " iterations (score norm " + std::to_string(fit.score_norm) + ")");
    }

    double det = h00 * h11 - h01 * h01;
    if (det > 0.0 && std::isfinite(det)) {
        fit.se_alpha = std::sqrt(h11 / det);
        fit.se_beta = std::sqrt(h00 / det);
    } else {
        fit.se_alpha = fit.se_beta = std::numeric_limits<double>::infinity();
    }
    fit.p_value_beta = stats::normal_two_sided_p(fit.beta / fit.se_beta);
    fit.p_value_lrt = stats::chi2_sf(std::max(0.0, 2.0 * (ll - null_ll)), 1.0);
    return fit;
}

double correct_intercept(double alpha, const CorrectionContext& ctx) {
    require_probability(ctx.y_pop, "population defect ratio");
    require_probability(ctx.y_bar, "dataset defect ratio");
    // Log-odds difference: exactly zero when the two ratios are equal.
    return alpha - (logit(ctx.y_bar) - logit(ctx.y_pop));
}

RiskParams acceptable_risk(double p0, double risk_increase) {
    require_probability(p0, "background risk");
    require_probability(risk_increase, "risk increase");
    double p_arl = p0 + risk_increase;
    if (p_arl >= 1.0) {
        throw Error(ErrorCode::RiskOverflow, "acceptable risk level " + std::to_string(p_arl) + " is not below 1");
    }
    return RiskParams{risk_increase, p0, p_arl};
}

double varl_threshold(double alpha, double beta, double p_arl) {
    if (!(beta > 0.0)) {
        throw Error(ErrorCode::NonPositiveSlope, "VARL needs a positive slope, got " + std::to_string(beta));
    }
    require_probability(p_arl, "acceptable risk level");
    return (std::log(p_arl / (1.0 - p_arl)) - alpha) / beta;
}

std::int64_t round_to_integer(double value, RoundingPolicy policy) {
    if (policy == RoundingPolicy::HalfEven) return static_cast<std::int64_t>(std::nearbyint(value));
    return static_cast<std::int64_t>(std::floor(value + 0.5));
}

std::string_view to_string(RoundingPolicy policy) noexcept {
    return policy == RoundingPolicy::HalfUp ? "half-up" : "half-even";
}

RoundingPolicy parse_rounding_policy(std::string_view text) {
    if (text == "half-up") return RoundingPolicy::HalfUp;
    if (text == "half-even") return RoundingPolicy::HalfEven;
    throw Error(ErrorCode::Config, "unknown rounding policy '" + std::string(text) + "'");
}

ThresholdResult finalize_threshold(double varl_raw, RoundingPolicy policy) {
    if (!std::isfinite(varl_raw)) throw Error(ErrorCode::Domain, "threshold value is not finite");
    ThresholdResult t;
    t.varl_raw = varl_raw;
    t.rounding = policy;
    t.rounded = round_to_integer(varl_raw, policy);
    t.clamped = t.rounded < kMinimumThreshold;
    t.threshold = std::max(kMinimumThreshold, t.rounded);
    return t;
}

std::string_view to_string(AbsenceReason reason) noexcept {
    switch (reason) {
    case AbsenceReason::None: return "";
    case AbsenceReason::NotSignificant: return "not-significant";
    case AbsenceReason::NonPositiveSlope: return "non-positive-slope";
    case AbsenceReason::RiskOverflow: return "risk-overflow";
    case AbsenceReason::Separation: return "separation";
    case AbsenceReason::FitFailed: return "fit-failed";
    }
    return "";
}

double ThresholdAnalysis::p_value(SignificanceTest test) const {
    if (!fit) return 1.0;
    return test == SignificanceTest::Wald ? fit->p_value_beta : fit->p_value_lrt;
}

ThresholdAnalysis analyze_system_threshold(const SystemDataset& d, const MetricId& metric, double y_pop,
                                           const ThresholdConfig& cfg) {
    ThresholdAnalysis a;
    a.metric = metric;
    a.system_id = d.system_id;
    a.version_label = d.version_label;
    a.size = d.size();
    a.y_bar = defect_ratio(d);

    auto column = d.metric_column(metric);
    std::vector<double> xs(column.begin(), column.end());
    Labels ys = d.labels();
    a.fit = fit_univariate_logistic(xs, ys, cfg.fit);
    a.fit->metric = metric;

    if (a.fit->separation_detected) {
        a.reason = AbsenceReason::Separation;
        return a;
    }
    if (!(a.p_value(cfg.test) < cfg.sig_level)) {
        a.reason = AbsenceReason::NotSignificant;
        return a;
    }
    if (!(a.fit->beta > 0.0)) {
        a.reason = AbsenceReason::NonPositiveSlope;
        return a;
    }

    double alpha = a.fit->alpha;
    if (cfg.apply_correction) {
        alpha = correct_intercept(alpha, CorrectionContext{y_pop, a.y_bar});
        a.alpha_hat = alpha;
    }
    double p0 = background_risk(alpha);
    if (p0 + cfg.risk_increase >= 1.0) {
        a.reason = AbsenceReason::RiskOverflow;
        a.risk = RiskParams{cfg.risk_increase, p0, p0 + cfg.risk_increase};
        return a;
    }
    a.risk = acceptable_risk(p0, cfg.risk_increase);
    double varl = varl_threshold(alpha, a.fit->beta, a.risk->p_arl);
    ThresholdResult t = finalize_threshold(varl, cfg.rounding);
    t.metric = metric;
    t.corrected = cfg.apply_correction;
    a.threshold = t;
    return a;
}

std::optional<ThresholdResult> calc_system_thresholds(const SystemDataset& d, const MetricId& metric, double y_pop,
                                                      const ThresholdConfig& cfg) {
    return analyze_system_threshold(d, metric, y_pop, cfg).threshold;
}

namespace {
nlohmann::json finite_or_null(double v) {
    return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}
}  // namespace

nlohmann::json to_json(const LogisticFit& fit) {
    return {
        {"metric", fit.metric.name},
        {"alpha", fit.alpha},
        {"beta", fit.beta},
        {"se_alpha", finite_or_null(fit.se_alpha)},
        {"se_beta", finite_or_null(fit.se_beta)},
        {"p_value", fit.p_value_beta},
        {"p_value_lrt", fit.p_value_lrt},
        {"n", fit.n},
        {"iterations", fit.iterations},
        {"converged", fit.converged},
        {"separation_detected", fit.separation_detected},
    };
}

nlohmann::json to_json(const ThresholdResult& t) {
    return {
        {"metric", t.metric.name},      {"varl_raw", t.varl_raw}, {"rounded", t.rounded},
        {"threshold", t.threshold},     {"corrected", t.corrected}, {"clamped", t.clamped},
        {"rounding", to_string(t.rounding)},
    };
}

nlohmann::json to_json(const ThresholdAnalysis& a) {
    nlohmann::json j;
    j["system"] = a.system_id;
    j["version"] = a.version_label;
    j["metric"] = a.metric.name;
    j["size"] = a.size;
    j["defect_ratio"] = a.y_bar;
    if (a.fit) {
        j["alpha"] = a.fit->alpha;
        j["beta"] = a.fit->beta;
        j["p_value"] = a.fit->p_value_beta;
        j["p_value_lrt"] = a.fit->p_value_lrt;
        j["separation_detected"] = a.fit->separation_detected;
    } else {
        j["alpha"] = j["beta"] = j["p_value"] = nullptr;
    }
    j["alpha_hat"] = a.alpha_hat ? nlohmann::json(*a.alpha_hat) : nlohmann::json(nullptr);
    j["p0"] = a.risk ? nlohmann::json(a.risk->p0) : nlohmann::json(nullptr);
    j["p_arl"] = a.risk ? nlohmann::json(a.risk->p_arl) : nlohmann::json(nullptr);
    j["varl_raw"] = a.threshold ? nlohmann::json(a.threshold->varl_raw) : nlohmann::json(nullptr);
    j["threshold"] = a.threshold ? nlohmann::json(a.threshold->threshold) : nlohmann::json("x");
    if (a.reason != AbsenceReason::None) j["reason"] = to_string(a.reason);
    if (!a.detail.empty()) j["detail"] = a.detail;
    return j;
}

}  // namespace relthresh
