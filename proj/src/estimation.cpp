#include "relthresh/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "relthresh/error.hpp"
#include "relthresh/stats.hpp"

namespace relthresh {

namespace {

double pearson(std::span<const double> a, std::span<const double> b) {
    double ma = stats::mean(a), mb = stats::mean(b);
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

double exact_permutation_p(const std::vector<double>& rx, std::vector<double> ry, double rho) {
    std::sort(ry.begin(), ry.end());
    std::size_t extreme = 0, total = 0;
    const double target = std::fabs(rho) - 1e-12;
    do {
        ++total;
        if (std::fabs(pearson(rx, ry)) >= target) ++extreme;
    } while (std::next_permutation(ry.begin(), ry.end()));
    return static_cast<double>(extreme) / static_cast<double>(total);
}

}  // namespace

double resolve_population_ratio(const Corpus& corpus, const EstimationConfig& cfg) {
    if (cfg.population_ratio) {
        double y = *cfg.population_ratio;
        if (!(y > 0.0 && y < 1.0)) {
            throw Error(ErrorCode::Config, "population ratio must lie in (0,1), got " + std::to_string(y));
        }
        return y;
    }
    return population_defect_ratio(corpus, cfg.ratio_mode);
}

std::vector<ThresholdAnalysis> analyze_corpus(const Corpus& corpus, const MetricId& metric,
                                              const EstimationConfig& cfg) {
    // The population ratio is only needed when correcting.
    double y_pop = cfg.threshold.apply_correction ? resolve_population_ratio(corpus, cfg) : 0.5;
    std::vector<ThresholdAnalysis> out;
    out.reserve(corpus.datasets.size());
    for (const auto& d : corpus.datasets) {
        try {
            out.push_back(analyze_system_threshold(d, metric, y_pop, cfg.threshold));
        } catch (const Error& e) {
            if (e.code() == ErrorCode::Config) throw;
            ThresholdAnalysis a;
            a.metric = metric;
            a.system_id = d.system_id;
            a.version_label = d.version_label;
            a.size = d.size();
            a.y_bar = defect_ratio(d);
            a.reason = AbsenceReason::FitFailed;
            a.detail = e.what();
            out.push_back(std::move(a));
        }
    }
    return out;
}

std::vector<SizeThresholdPair> pairs_from_analyses(std::span<const ThresholdAnalysis> analyses,
                                                   const Corpus& corpus) {
    std::vector<SizeThresholdPair> pairs;
    pairs.reserve(analyses.size());
    for (const auto& a : analyses) {
        SizeThresholdPair p;
        p.system_id = a.system_id;
        p.version_label = a.version_label;
        p.size = a.size;
        if (const auto* d = corpus.find(a.system_id, a.version_label)) p.version_order = d->version_order;
        if (a.threshold) p.threshold = a.threshold->threshold;
        pairs.push_back(std::move(p));
    }
    return pairs;
}

std::vector<SizeThresholdPair> build_pairs(const Corpus& corpus, const MetricId& metric,
                                           const EstimationConfig& cfg) {
    auto analyses = analyze_corpus(corpus, metric, cfg);
    return pairs_from_analyses(analyses, corpus);
}

std::vector<std::pair<double, double>> latest_version_pairs(std::span<const SizeThresholdPair> pairs) {
    std::map<std::string, const SizeThresholdPair*> latest;
    for (const auto& p : pairs) {
        auto& slot = latest[p.system_id];
        if (!slot || p.version_order > slot->version_order) slot = &p;
    }
    std::vector<std::pair<double, double>> out;
    for (const auto& [_, p] : latest) {
        if (p->threshold) out.emplace_back(static_cast<double>(p->size), static_cast<double>(*p->threshold));
    }
    return out;
}

CorrelationResult spearman(std::span<const std::pair<double, double>> pairs, SpearmanPValue method) {
    const std::size_t n = pairs.size();
    if (n < 4) {
        throw Error(ErrorCode::InsufficientData, "Spearman correlation needs at least 4 pairs, got " + std::to_string(n));
    }
    std::vector<double> xs, ys;
    xs.reserve(n);
    ys.reserve(n);
    for (const auto& [x, y] : pairs) {
        xs.push_back(x);
        ys.push_back(y);
    }
    auto rx = stats::average_ranks(xs);
    auto ry = stats::average_ranks(ys);
    auto constant = [](const std::vector<double>& v) {
        return std::all_of(v.begin(), v.end(), [&](double r) { return r == v.front(); });
    };
    if (constant(rx) || constant(ry)) {
        throw Error(ErrorCode::UndefinedCorrelation, "Spearman correlation undefined: a coordinate has zero variance");
    }

    CorrelationResult r;
    r.n_pairs = n;
    r.df = n - 2;
    r.rho = std::clamp(pearson(rx, ry), -1.0, 1.0);
    if (method == SpearmanPValue::ExactPermutation && n <= 10) {
        r.p_value = exact_permutation_p(rx, ry, r.rho);
    } else if (std::fabs(r.rho) >= 1.0) {
        r.p_value = 0.0;
    } else {
        double t = r.rho * std::sqrt(static_cast<double>(n - 2) / (1.0 - r.rho * r.rho));
        r.p_value = stats::t_two_sided_p(t, static_cast<double>(n - 2));
    }
    return r;
}

CorrelationResult correlate(const Corpus& corpus, const MetricId& metric, const EstimationConfig& cfg) {
    auto pairs = build_pairs(corpus, metric, cfg);
    auto input = latest_version_pairs(pairs);
    auto result = spearman(input, cfg.spearman_p);
    result.metric = metric;
    return result;
}

std::vector<MetricScreen> screen_metrics_detailed(const Corpus& corpus, std::span<const MetricId> metrics,
                                                  const EstimationConfig& cfg) {
    std::vector<MetricScreen> out;
    for (const auto& metric : metrics) {
        MetricScreen s;
        s.metric = metric;
        try {
            s.correlation = correlate(corpus, metric, cfg);
            const auto& c = *s.correlation;
            s.selected = c.p_value < cfg.threshold.sig_level && c.rho > 0.0;
            if (!s.selected) s.note = c.rho > 0.0 ? "correlation not significant" : "correlation not positive";
        } catch (const Error& e) {
            if (e.code() != ErrorCode::InsufficientData && e.code() != ErrorCode::UndefinedCorrelation) throw;
            s.note = e.what();
        }
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<MetricId> screen_metrics(const Corpus& corpus, std::span<const MetricId> metrics,
                                     const EstimationConfig& cfg) {
    std::vector<MetricId> out;
    for (const auto& s : screen_metrics_detailed(corpus, metrics, cfg)) {
        if (s.selected) out.push_back(s.metric);
    }
    return out;
}

EstimationModel fit_ols(std::span<const SizeThresholdPair> pairs, const MetricId& metric) {
    std::vector<double> xs, ys;
    for (const auto& p : pairs) {
        if (!p.threshold) continue;
        xs.push_back(static_cast<double>(p.size));
        ys.push_back(static_cast<double>(*p.threshold));
    }
    if (xs.size() < 3) {
        throw Error(ErrorCode::InsufficientData,
                    "estimation model needs at least 3 size-threshold pairs, got " + std::to_string(xs.size()));
    }
    double mx = stats::mean(xs), my = stats::mean(ys);
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    if (sxx == 0.0) throw Error(ErrorCode::SingularDesign, "all training systems have the same size");
    EstimationModel m;
    m.metric = metric;
    m.slope = sxy / sxx;
    m.intercept = my - m.slope * mx;
    m.n_train = xs.size();
    return m;
}

ThresholdResult estimate_threshold(const EstimationModel& model, std::size_t size, RoundingPolicy policy) {
    auto t = finalize_threshold(model.slope * static_cast<double>(size) + model.intercept, policy);
    t.metric = model.metric;
    return t;
}

std::vector<SizeThresholdPair> training_pairs_excluding(std::span<const SizeThresholdPair> pairs,
                                                        std::string_view test_system) {
    std::vector<SizeThresholdPair> out;
    for (const auto& p : pairs) {
        if (p.system_id != test_system && p.threshold) out.push_back(p);
    }
    return out;
}

LoocvResult leave_one_system_out(std::span<const SizeThresholdPair> pairs, const MetricId& metric,
                                 std::size_t min_training_pairs, RoundingPolicy policy) {
    LoocvResult result;
    result.metric = metric;

    std::vector<std::string> systems;
    for (const auto& p : pairs) {
        if (std::find(systems.begin(), systems.end(), p.system_id) == systems.end()) systems.push_back(p.system_id);
    }
    std::size_t significant = std::count_if(pairs.begin(), pairs.end(), [](const auto& p) { return p.threshold.has_value(); });
    if (significant * 2 < pairs.size()) {
        result.warnings.push_back(metric.name + ": only " + std::to_string(significant) + " of " +
                                  std::to_string(pairs.size()) + " versions have a threshold to train on");
    }

    for (const auto& system : systems) {
        auto training = training_pairs_excluding(pairs, system);
        if (training.size() < std::max<std::size_t>(min_training_pairs, 3)) {
            throw Error(ErrorCode::InsufficientData,
                        "round holding out " + system + " has " + std::to_string(training.size()) +
                            " training pairs; at least " + std::to_string(std::max<std::size_t>(min_training_pairs, 3)) +
                            " needed");
        }
        LoocvRound round;
        round.test_system = system;
        round.model = fit_ols(training, metric);
        std::set<std::string> train_systems;
        for (const auto& p : training) train_systems.insert(p.system_id);
        round.training_systems.assign(train_systems.begin(), train_systems.end());
        for (const auto& p : pairs) {
            if (p.system_id != system) continue;
            result.thresholds[{p.system_id, p.version_label}] = estimate_threshold(round.model, p.size, policy);
        }
        result.rounds.push_back(std::move(round));
    }
    return result;
}

LoocvResult leave_one_system_out(const Corpus& corpus, const MetricId& metric, const EstimationConfig& cfg) {
    auto pairs = build_pairs(corpus, metric, cfg);
    return leave_one_system_out(pairs, metric, cfg.min_training_pairs, cfg.threshold.rounding);
}

nlohmann::json to_json(const CorrelationResult& c) {
    return {{"metric", c.metric.name}, {"rho", c.rho}, {"p_value", c.p_value}, {"n_pairs", c.n_pairs}, {"df", c.df}};
}

nlohmann::json to_json(const EstimationModel& m) {
    return {{"metric", m.metric.name}, {"slope", m.slope}, {"intercept", m.intercept}, {"n_train", m.n_train}};
}

}  // namespace relthresh
