#include "relthresh/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "relthresh/error.hpp"
#include "relthresh/logit.hpp"

namespace relthresh {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// mt19937_64's output sequence is fixed by the standard; the library
// distributions are not, so draws are derived from raw output here.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    std::size_t uniform_int(std::size_t lo, std::size_t hi) {
        auto span = static_cast<double>(hi - lo + 1);
        return std::min(hi, lo + static_cast<std::size_t>(std::floor(uniform() * span)));
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double lomax(double scale, double shape) { return scale * (std::pow(1.0 - uniform(), -1.0 / shape) - 1.0); }

    bool bernoulli(double p) { return uniform() < p; }

private:
    std::mt19937_64 engine_;
};

std::int64_t draw_metric(Rng& rng, const SyntheticMetric& m, double driver_value) {
    double v = std::floor(m.coupling * driver_value + rng.lomax(m.scale, m.shape));
    return std::clamp<std::int64_t>(static_cast<std::int64_t>(v), 0, m.max_value);
}

struct Planted {
    double alpha;
    double beta;
};

// Parameters whose prior-corrected VARL equals `threshold` while the
// expected defect ratio over `xs` stays at `target`. The VARL constraint
// fixes beta as a function of alpha; the ratio is then a continuous function
// of alpha running from the step limit P(x > threshold) up to roughly
// 1 - risk_increase, and the root is bracketed on a grid then bisected.
Planted solve_planted_law(const std::vector<double>& xs, double target, double y_pop, double threshold,
                          double risk_increase) {
    const double shift = std::log(((1.0 - y_pop) / y_pop) * (target / (1.0 - target)));
    auto beta_for = [&](double alpha) {
        double alpha_hat = alpha - shift;
        return (logit(background_risk(alpha_hat) + risk_increase) - alpha_hat) / threshold;
    };
    auto excess = [&](double alpha) {
        double beta = beta_for(alpha), mean = 0.0;
        for (double x : xs) mean += risk_at(alpha, beta, x);
        return mean / static_cast<double>(xs.size()) - target;
    };
    // Upper end keeps p0 + risk_increase strictly below 1.
    const double hi_end = shift + logit(1.0 - risk_increase) - 1e-6;
    const double lo_end = hi_end - 60.0;
    constexpr int kGrid = 600;
    double prev_a = lo_end, prev_g = excess(lo_end);
    for (int i = 1; i <= kGrid; ++i) {
        double a = lo_end + (hi_end - lo_end) * i / kGrid;
        double g = excess(a);
        if ((prev_g <= 0) != (g <= 0)) {
            double lo = prev_a, hi = a, g_lo = prev_g;
            for (int k = 0; k < 200 && hi - lo > 1e-13; ++k) {
                double mid = 0.5 * (lo + hi), gm = excess(mid);
                if ((gm <= 0) == (g_lo <= 0)) lo = mid, g_lo = gm;
                else hi = mid;
            }
            double alpha = 0.5 * (lo + hi);
            return {alpha, beta_for(alpha)};
        }
        prev_a = a, prev_g = g;
    }
    char msg[160];
    std::snprintf(msg, sizeof msg,
                  "no logistic law reaches defect ratio %.3f with threshold %.2f; "
                  "the metric tail above the threshold is too heavy or too light",
                  target, threshold);
    throw Error(ErrorCode::InvalidSpec, msg);
}

LabelModel parse_label_model(const std::string& s) {
    if (s == "logistic") return LabelModel::Logistic;
    if (s == "step") return LabelModel::Step;
    throw Error(ErrorCode::InvalidSpec, "unknown label model '" + s + "'");
}

}  // namespace

double SyntheticSpec::planted_threshold(std::size_t size) const {
    if (!threshold_slope || !threshold_intercept) {
        throw Error(ErrorCode::InvalidSpec, "spec has no planted size-threshold law");
    }
    return *threshold_slope * static_cast<double>(size) + *threshold_intercept;
}

void validate(const SyntheticSpec& spec) {
    auto fail = [](const std::string& msg) { throw Error(ErrorCode::InvalidSpec, msg); };
    if (spec.n_systems == 0 || spec.versions_per_system == 0) fail("need at least one system and one version");
    if (!spec.version_counts.empty()) {
        if (spec.version_counts.size() != spec.n_systems) fail("version_counts needs one entry per system");
        for (auto c : spec.version_counts) {
            if (c == 0) fail("every system needs at least one version");
        }
    }
    if (spec.size_min < 1 || spec.size_min > spec.size_max) fail("size range must satisfy 1 <= min <= max");
    if (spec.version_growth < 0) fail("version_growth must be non-negative");
    if (!(spec.defect_ratio_min > 0 && spec.defect_ratio_min <= spec.defect_ratio_max && spec.defect_ratio_max < 1)) {
        fail("defect ratio range must lie inside (0,1)");
    }
    if (!(spec.risk_increase > 0 && spec.risk_increase < 1)) fail("risk_increase must lie in (0,1)");
    if (spec.metrics.empty()) fail("spec declares no metrics");
    bool has_driver = false;
    for (const auto& m : spec.metrics) {
        if (!(m.scale > 0 && m.shape > 0) || m.max_value < 0) fail("metric " + m.id.name + " has invalid distribution parameters");
        if (m.id == spec.driver) has_driver = true;
    }
    if (!has_driver) fail("driver metric '" + spec.driver.name + "' is not among the metrics");
    bool law = spec.threshold_slope && spec.threshold_intercept;
    bool fixed = spec.planted_alpha && spec.planted_beta;
    if (spec.label_model == LabelModel::Step) {
        if (!law) fail("step labels need threshold_slope and threshold_intercept");
        if (!(spec.step_risk_low >= 0 && spec.step_risk_low <= spec.step_risk_high && spec.step_risk_high <= 1)) {
            fail("step risks must satisfy 0 <= low <= high <= 1");
        }
    } else if (law == fixed) {
        fail("logistic labels need either planted_alpha/planted_beta or threshold_slope/threshold_intercept");
    }
    if (law) {
        for (std::size_t s : {spec.size_min, spec.size_max}) {
            if (!(spec.planted_threshold(s) > 0)) fail("planted threshold must be positive over the size range");
        }
    }
}

Corpus generate_synthetic(const SyntheticSpec& spec) {
    validate(spec);
    Rng layout(splitmix64(spec.seed));
    Rng values(splitmix64(spec.seed ^ 0xA5A5A5A5A5A5A5A5ULL));

    struct SystemPlan {
        std::string id;
        std::size_t base_size;
        double target_ratio;
    };
    std::vector<SystemPlan> plans;
    double ratio_sum = 0.0;
    for (std::size_t s = 0; s < spec.n_systems; ++s) {
        SystemPlan p;
        char name[32];
        std::snprintf(name, sizeof name, "sys%02zu", s + 1);
        p.id = name;
        p.base_size = layout.uniform_int(spec.size_min, spec.size_max);
        p.target_ratio = layout.uniform(spec.defect_ratio_min, spec.defect_ratio_max);
        ratio_sum += p.target_ratio;
        plans.push_back(std::move(p));
    }
    const double y_pop = ratio_sum / static_cast<double>(plans.size());

    std::size_t driver_idx = 0;
    std::vector<MetricId> ids;
    for (std::size_t i = 0; i < spec.metrics.size(); ++i) {
        ids.push_back(spec.metrics[i].id);
        if (spec.metrics[i].id == spec.driver) driver_idx = i;
    }

    std::vector<SystemDataset> datasets;
    for (const auto& plan : plans) {
        const std::size_t n_versions = spec.versions_of(static_cast<std::size_t>(&plan - plans.data()));
        for (std::size_t v = 0; v < n_versions; ++v) {
            SystemDataset d;
            d.system_id = plan.id;
            d.version_label = "1." + std::to_string(v);
            d.version_order = static_cast<int>(v);
            auto grown = std::llround(static_cast<double>(plan.base_size) * (1.0 + spec.version_growth * static_cast<double>(v)));
            const std::size_t size = std::min<std::size_t>(spec.size_max, static_cast<std::size_t>(grown));

            std::vector<double> driver(size);
            d.classes.resize(size);
            for (std::size_t c = 0; c < size; ++c) {
                auto& rec = d.classes[c];
                rec.class_name = "org." + plan.id + ".C" + std::to_string(c);
                rec.metric_values.resize(ids.size());
                auto x = draw_metric(values, spec.metrics[driver_idx], 0.0);
                rec.metric_values[driver_idx] = x;
                driver[c] = static_cast<double>(x);
                for (std::size_t m = 0; m < ids.size(); ++m) {
                    if (m != driver_idx) rec.metric_values[m] = draw_metric(values, spec.metrics[m], driver[c]);
                }
            }

            std::optional<Planted> logistic;
            if (spec.label_model == LabelModel::Logistic) {
                logistic = spec.planted_alpha
                               ? Planted{*spec.planted_alpha, *spec.planted_beta}
                               : solve_planted_law(driver, plan.target_ratio, y_pop, spec.planted_threshold(size),
                                                   spec.risk_increase);
            }
            for (std::size_t c = 0; c < size; ++c) {
                double risk = logistic ? risk_at(logistic->alpha, logistic->beta, driver[c])
                                       : (driver[c] >= spec.planted_threshold(size) ? spec.step_risk_high
                                                                                    : spec.step_risk_low);
                auto& rec = d.classes[c];
                rec.faulty = values.bernoulli(risk);
                rec.defect_count = 0;
                if (rec.faulty) {
                    rec.defect_count = 1;
                    while (values.bernoulli(0.5)) ++rec.defect_count;
                }
            }
            datasets.push_back(std::move(d));
        }
    }
    return make_corpus(std::move(datasets), std::move(ids), true);
}

SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j) {
    SyntheticSpec s;
    try {
        s.n_systems = j.value("n_systems", s.n_systems);
        s.versions_per_system = j.value("versions_per_system", s.versions_per_system);
        s.version_counts = j.value("version_counts", s.version_counts);
        s.size_min = j.value("size_min", s.size_min);
        s.size_max = j.value("size_max", s.size_max);
        s.version_growth = j.value("version_growth", s.version_growth);
        s.driver = MetricId::parse(j.at("driver").get<std::string>());
        s.label_model = parse_label_model(j.value("label_model", std::string("logistic")));
        auto opt = [&](const char* key, std::optional<double>& dst) {
            if (j.contains(key) && !j.at(key).is_null()) dst = j.at(key).get<double>();
        };
        opt("planted_alpha", s.planted_alpha);
        opt("planted_beta", s.planted_beta);
        opt("threshold_slope", s.threshold_slope);
        opt("threshold_intercept", s.threshold_intercept);
        s.risk_increase = j.value("risk_increase", s.risk_increase);
        s.defect_ratio_min = j.value("defect_ratio_min", s.defect_ratio_min);
        s.defect_ratio_max = j.value("defect_ratio_max", s.defect_ratio_max);
        s.step_risk_low = j.value("step_risk_low", s.step_risk_low);
        s.step_risk_high = j.value("step_risk_high", s.step_risk_high);
        s.seed = j.value("seed", s.seed);
        for (const auto& m : j.at("metrics")) {
            SyntheticMetric sm;
            sm.id = MetricId::parse(m.at("name").get<std::string>());
            sm.scale = m.value("scale", sm.scale);
            sm.shape = m.value("shape", sm.shape);
            sm.max_value = m.value("max_value", sm.max_value);
            sm.coupling = m.value("coupling", sm.coupling);
            s.metrics.push_back(std::move(sm));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidSpec, std::string("synthetic spec: ") + e.what());
    }
    return s;
}

nlohmann::json to_json(const SyntheticSpec& s) {
    nlohmann::json j;
    j["n_systems"] = s.n_systems;
    j["versions_per_system"] = s.versions_per_system;
    if (!s.version_counts.empty()) j["version_counts"] = s.version_counts;
    j["size_min"] = s.size_min;
    j["size_max"] = s.size_max;
    j["version_growth"] = s.version_growth;
    j["driver"] = s.driver.name;
    j["label_model"] = s.label_model == LabelModel::Logistic ? "logistic" : "step";
    auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
    j["planted_alpha"] = opt(s.planted_alpha);
    j["planted_beta"] = opt(s.planted_beta);
    j["threshold_slope"] = opt(s.threshold_slope);
    j["threshold_intercept"] = opt(s.threshold_intercept);
    j["risk_increase"] = s.risk_increase;
    j["defect_ratio_min"] = s.defect_ratio_min;
    j["defect_ratio_max"] = s.defect_ratio_max;
    j["step_risk_low"] = s.step_risk_low;
    j["step_risk_high"] = s.step_risk_high;
    j["seed"] = s.seed;
    j["metrics"] = nlohmann::json::array();
    for (const auto& m : s.metrics) {
        j["metrics"].push_back({{"name", m.id.name}, {"scale", m.scale}, {"shape", m.shape},
                                {"max_value", m.max_value}, {"coupling", m.coupling}});
    }
    return j;
}

SyntheticSpec planted_line_spec(std::uint64_t seed) {
    SyntheticSpec s;
    s.n_systems = 12;
    s.versions_per_system = 6;
    s.size_min = 300;
    s.size_max = 1500;
    s.version_growth = 0.08;
    s.driver = metrics::CBO;
    s.threshold_slope = 0.01;
    s.threshold_intercept = 3.0;
    s.defect_ratio_min = 0.3;
    s.defect_ratio_max = 0.3;
    s.seed = seed;
    s.metrics = {
        SyntheticMetric{metrics::CBO, 15.0, 2.5, 2000, 0.0},
        SyntheticMetric{metrics::WMC, 10.0, 3.0, 2000, 0.0},
    };
    return s;
}

SyntheticSpec planted_boundary_spec(std::uint64_t seed) {
    auto s = planted_line_spec(seed);
    s.defect_ratio_min = 0.45;
    s.defect_ratio_max = 0.45;
    return s;
}

}  // namespace relthresh
