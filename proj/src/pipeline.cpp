#include "relthresh/pipeline.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "relthresh/csv.hpp"
#include "relthresh/stats.hpp"

namespace relthresh {

using nlohmann::json;

namespace {

constexpr std::array<double, 3> kRiskIncreases{0.05, 0.10, 0.15};

std::string na_or(const std::optional<double>& v) { return v ? format_number(*v) : "NA"; }

std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace

std::string format_number(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    std::array<char, 32> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return {buf.data(), end};
}

RatioMode parse_ratio_mode(std::string_view text) {
    if (text == "mean" || text == "mean-of-ratios") return RatioMode::MeanOfRatios;
    if (text == "pooled") return RatioMode::Pooled;
    throw Error(ErrorCode::Config, "unknown ratio mode '" + std::string(text) + "' (expected mean or pooled)");
}

std::string_view to_string(RatioMode mode) noexcept { return mode == RatioMode::Pooled ? "pooled" : "mean"; }

SignificanceTest parse_significance_test(std::string_view text) {
    if (text == "wald") return SignificanceTest::Wald;
    if (text == "lrt" || text == "likelihood-ratio") return SignificanceTest::LikelihoodRatio;
    throw Error(ErrorCode::Config, "unknown significance test '" + std::string(text) + "' (expected wald or lrt)");
}

std::string_view to_string(SignificanceTest test) noexcept {
    return test == SignificanceTest::LikelihoodRatio ? "lrt" : "wald";
}

EstimationConfig RunConfig::estimation() const {
    EstimationConfig e;
    e.threshold.risk_increase = risk_increase;
    e.threshold.apply_correction = apply_correction;
    e.threshold.sig_level = sig_level;
    e.threshold.test = test;
    e.threshold.rounding = rounding;
    e.population_ratio = population_ratio;
    e.ratio_mode = ratio_mode;
    e.spearman_p = spearman_p;
    return e;
}

void validate(const RunConfig& cfg) {
    auto open_unit = [](double v) { return v > 0.0 && v < 1.0; };
    if (!open_unit(cfg.risk_increase)) {
        throw Error(ErrorCode::Config, "risk_increase must lie in (0, 1), got " + format_number(cfg.risk_increase));
    }
    if (!open_unit(cfg.sig_level)) {
        throw Error(ErrorCode::Config, "sig_level must lie in (0, 1), got " + format_number(cfg.sig_level));
    }
    if (cfg.population_ratio && !open_unit(*cfg.population_ratio)) {
        throw Error(ErrorCode::Config,
                    "population_ratio must lie in (0, 1), got " + format_number(*cfg.population_ratio));
    }
    if (cfg.rank_alpha != 0.05 && cfg.rank_alpha != 0.10) {
        throw Error(ErrorCode::Config, "rank_alpha must be 0.05 or 0.10");
    }
}

RunConfig run_config_from_json(const json& j, RunConfig base) {
    if (!j.is_object()) throw Error(ErrorCode::Config, "run config must be a JSON object");
    try {
        for (const auto& [key, v] : j.items()) {
            if (key == "risk_increase") base.risk_increase = v.get<double>();
            else if (key == "apply_correction") base.apply_correction = v.get<bool>();
            else if (key == "sig_level") base.sig_level = v.get<double>();
            else if (key == "population_ratio") base.population_ratio = v.is_null() ? std::nullopt : std::optional(v.get<double>());
            else if (key == "ratio_mode") base.ratio_mode = parse_ratio_mode(v.get<std::string>());
            else if (key == "rounding") base.rounding = parse_rounding_policy(v.get<std::string>());
            else if (key == "test") base.test = parse_significance_test(v.get<std::string>());
            else if (key == "spearman_p") {
                auto s = v.get<std::string>();
                if (s == "t") base.spearman_p = SpearmanPValue::TApproximation;
                else if (s == "exact") base.spearman_p = SpearmanPValue::ExactPermutation;
                else throw Error(ErrorCode::Config, "spearman_p must be 't' or 'exact'");
            } else if (key == "rank_alpha") base.rank_alpha = v.get<double>();
            else if (key == "seed") base.seed = v.get<std::uint64_t>();
            else if (key == "output_dir") base.output_dir = v.get<std::string>();
            else if (key == "metrics") {
                base.metrics.clear();
                for (const auto& m : v) base.metrics.push_back(MetricId::parse(m.get<std::string>()));
            } else {
                throw Error(ErrorCode::Config, "unknown run config key '" + key + "'");
            }
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Config, std::string("run config: ") + e.what());
    }
    validate(base);
    return base;
}

RunConfig load_run_config(const std::filesystem::path& path, RunConfig base) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Config, path.string() + ": " + e.what());
    }
    return run_config_from_json(j, std::move(base));
}

json to_json(const RunConfig& cfg) {
    json metrics = json::array();
    for (const auto& m : cfg.metrics) metrics.push_back(m.name);
    return {
        {"risk_increase", cfg.risk_increase},
        {"apply_correction", cfg.apply_correction},
        {"sig_level", cfg.sig_level},
        {"population_ratio", cfg.population_ratio ? json(*cfg.population_ratio) : json(nullptr)},
        {"ratio_mode", to_string(cfg.ratio_mode)},
        {"rounding", to_string(cfg.rounding)},
        {"test", to_string(cfg.test)},
        {"spearman_p", cfg.spearman_p == SpearmanPValue::ExactPermutation ? "exact" : "t"},
        {"rank_alpha", cfg.rank_alpha},
        {"seed", cfg.seed},
        {"output_dir", cfg.output_dir.string()},
        {"metrics", metrics},
    };
}

const ReportFile* ReportBundle::find(std::string_view name) const {
    for (const auto& f : files) {
        if (f.name == name) return &f;
    }
    return nullptr;
}

Pipeline::Pipeline(RunConfig cfg, const Corpus& corpus) : cfg_(std::move(cfg)), corpus_(corpus) { validate(cfg_); }

template <class F>
void Pipeline::guarded(const char* stage, F&& body) {
    try {
        body();
    } catch (const Error& e) {
        bundle_.errors.push_back({stage, e.code(), e.what()});
    }
}

void Pipeline::emit(std::string name, std::string content) {
    for (auto& f : bundle_.files) {
        if (f.name == name) {
            f.content = std::move(content);
            return;
        }
    }
    bundle_.files.push_back({std::move(name), std::move(content)});
}

std::string Pipeline::csv_header() const {
    std::ostringstream os;
    os << "# relthresh seed=" << cfg_.seed << " risk_increase=" << format_number(cfg_.risk_increase)
       << " correction=" << (cfg_.apply_correction ? "on" : "off") << " sig_level=" << format_number(cfg_.sig_level)
       << " rounding=" << to_string(cfg_.rounding) << " test=" << to_string(cfg_.test)
       << " ratio_mode=" << to_string(cfg_.ratio_mode) << "\n";
    return os.str();
}

json Pipeline::meta() const {
    json m = to_json(cfg_);
    m.erase("output_dir");
    m["n_datasets"] = corpus_.datasets.size();
    return m;
}

std::vector<MetricId> Pipeline::metrics() const {
    if (cfg_.metrics.empty()) return corpus_.metric_ids;
    for (const auto& m : cfg_.metrics) {
        if (std::find(corpus_.metric_ids.begin(), corpus_.metric_ids.end(), m) == corpus_.metric_ids.end()) {
            throw Error(ErrorCode::Config, "metric " + m.name + " is not in the corpus");
        }
    }
    return cfg_.metrics;
}

ThresholdMap Pipeline::lr_threshold_map(const std::map<MetricId, std::vector<ThresholdAnalysis>>& analyses) const {
    ThresholdMap out;
    for (const auto& [metric, list] : analyses) {
        for (const auto& a : list) {
            if (a.threshold) out[{a.system_id, a.version_label}][metric] = a.threshold->threshold;
        }
    }
    return out;
}

ThresholdMap Pipeline::estimated_threshold_map() const {
    ThresholdMap out;
    for (const auto& [metric, result] : bundle_.loocv) {
        for (const auto& [key, t] : result.thresholds) out[key][metric] = t.threshold;
    }
    return out;
}

void Pipeline::fit() {
    if (fitted_) return;
    const auto ms = metrics();
    const auto ecfg = cfg_.estimation();
    std::optional<double> y_pop;
    if (cfg_.apply_correction) y_pop = resolve_population_ratio(corpus_, ecfg);

    std::map<MetricId, std::vector<ThresholdAnalysis>> analyses;
    for (const auto& m : ms) analyses[m] = analyze_corpus(corpus_, m, ecfg);

    json doc{{"meta", meta()}, {"population_ratio", y_pop ? json(*y_pop) : json(nullptr)}};
    json per_metric = json::object();
    for (const auto& [m, list] : analyses) {
        json arr = json::array();
        for (const auto& a : list) arr.push_back(to_json(a));
        per_metric[m.name] = arr;
    }
    doc["analyses"] = per_metric;

    std::string table = csv_header();
    std::vector<std::string> head{"system", "version", "size"};
    for (const auto& m : ms) head.push_back(m.name);
    table += csv::join(head) + "\n";
    for (std::size_t i = 0; i < corpus_.datasets.size(); ++i) {
        const auto& d = corpus_.datasets[i];
        std::vector<std::string> row{d.system_id, d.version_label, std::to_string(d.size())};
        for (const auto& m : ms) {
            const auto& a = analyses.at(m)[i];
            row.push_back(a.threshold ? std::to_string(a.threshold->threshold) : "x");
        }
        table += csv::join(row) + "\n";
    }

    bundle_.analyses = std::move(analyses);
    emit("fit.json", dump(doc));
    emit("table2_size_thresholds.csv", std::move(table));
    fitted_ = true;
}

void Pipeline::correlate() {
    if (correlated_) return;
    const auto ms = metrics();
    std::string table = csv_header();
    table += csv::join({"metric", "risk_increase", "correction", "rho", "p_value", "n_pairs", "df", "note"}) + "\n";
    json rows = json::array();
    for (const auto& m : ms) {
        for (double inc : kRiskIncreases) {
            for (bool corrected : {true, false}) {
                auto ecfg = cfg_.estimation();
                ecfg.threshold.risk_increase = inc;
                ecfg.threshold.apply_correction = corrected;
                std::optional<CorrelationResult> c;
                std::string note;
                try {
                    c = relthresh::correlate(corpus_, m, ecfg);
                } catch (const Error& e) {
                    if (e.category() == ErrorCategory::Usage) throw;
                    note = e.what();
                }
                table += csv::join({m.name, format_number(inc), corrected ? "corrected" : "uncorrected",
                                    c ? format_number(c->rho) : "NA", c ? format_number(c->p_value) : "NA",
                                    c ? std::to_string(c->n_pairs) : "NA", c ? std::to_string(c->df) : "NA", note}) +
                         "\n";
                json r{{"metric", m.name}, {"risk_increase", inc}, {"corrected", corrected}};
                if (c) {
                    r["rho"] = c->rho;
                    r["p_value"] = c->p_value;
                    r["n_pairs"] = c->n_pairs;
                    r["df"] = c->df;
                } else {
                    r["note"] = note;
                }
                rows.push_back(std::move(r));
            }
        }
    }
    emit("table4_correlations.csv", std::move(table));
    emit("table4_correlations.json", dump({{"meta", meta()}, {"correlations", rows}}));
    correlated_ = true;
}

void Pipeline::screen() {
    if (screened_) return;
    const auto ms = metrics();
    auto ecfg = cfg_.estimation();
    if (ecfg.threshold.apply_correction && !ecfg.population_ratio) {
        ecfg.population_ratio = resolve_population_ratio(corpus_, ecfg);
    }
    bundle_.screening = screen_metrics_detailed(corpus_, ms, ecfg);
    bundle_.selected.clear();
    json arr = json::array();
    for (const auto& s : bundle_.screening) {
        if (s.selected) bundle_.selected.push_back(s.metric);
        json r{{"metric", s.metric.name}, {"selected", s.selected}, {"note", s.note}};
        r["correlation"] = s.correlation ? to_json(*s.correlation) : json(nullptr);
        arr.push_back(std::move(r));
    }
    emit("screening.json", dump({{"meta", meta()}, {"screening", arr}}));
    screened_ = true;
}

void Pipeline::estimate() {
    if (estimated_) return;
    fit();
    screen();
    std::vector<EstimationModel> models;
    for (const auto& m : bundle_.selected) {
        auto pairs = pairs_from_analyses(bundle_.analyses.at(m), corpus_);
        auto model = fit_ols(pairs, m);
        bundle_.models[m] = model;
        models.push_back(model);
    }
    json list = json::array();
    for (const auto& m : models) list.push_back(to_json(m));
    emit("table5_models.json", dump({{"meta", meta()}, {"models", list}}));
    estimated_ = true;
}

void Pipeline::loocv() {
    if (loocv_done_) return;
    fit();
    screen();
    const auto ecfg = cfg_.estimation();
    std::vector<std::string> failures;
    for (const auto& m : bundle_.selected) {
        auto pairs = pairs_from_analyses(bundle_.analyses.at(m), corpus_);
        try {
            auto r = leave_one_system_out(pairs, m, ecfg.min_training_pairs, cfg_.rounding);
            for (const auto& w : r.warnings) bundle_.warnings.push_back("loocv: " + m.name + ": " + w);
            bundle_.loocv[m] = std::move(r);
        } catch (const Error& e) {
            if (e.category() == ErrorCategory::Usage) throw;
            failures.push_back(m.name + ": " + e.what());
        }
    }

    std::string table = csv_header();
    std::vector<std::string> head{"system", "version", "size"};
    for (const auto& [m, r] : bundle_.loocv) head.push_back(m.name);
    table += csv::join(head) + "\n";
    for (const auto& d : corpus_.datasets) {
        std::vector<std::string> row{d.system_id, d.version_label, std::to_string(d.size())};
        for (const auto& [m, r] : bundle_.loocv) {
            auto it = r.thresholds.find({d.system_id, d.version_label});
            row.push_back(it == r.thresholds.end() ? "NA" : std::to_string(it->second.threshold));
        }
        table += csv::join(row) + "\n";
    }

    json per_metric = json::object();
    for (const auto& [m, r] : bundle_.loocv) {
        json rounds = json::array();
        for (const auto& round : r.rounds) {
            rounds.push_back({{"test_system", round.test_system},
                              {"model", to_json(round.model)},
                              {"training_systems", round.training_systems}});
        }
        json thresholds = json::array();
        for (const auto& [key, t] : r.thresholds) {
            json tj = to_json(t);
            tj["system"] = key.first;
            tj["version"] = key.second;
            thresholds.push_back(std::move(tj));
        }
        per_metric[m.name] = {{"rounds", rounds}, {"thresholds", thresholds}, {"warnings", r.warnings}};
    }
    emit("table3_test_thresholds.csv", std::move(table));
    emit("loocv.json", dump({{"meta", meta()}, {"loocv", per_metric}, {"failures", failures}}));
    loocv_done_ = true;
    if (!failures.empty()) {
        std::string msg = "leave-one-system-out failed for";
        for (const auto& f : failures) msg += " [" + f + "]";
        throw Error(ErrorCode::InsufficientData, msg);
    }
}

void Pipeline::evaluate() {
    if (evaluated_) return;
    fit();
    loocv();
    const auto ms = metrics();

    // Both LR variants are scored regardless of the configured correction.
    auto ecfg = cfg_.estimation();
    std::map<MetricId, std::vector<ThresholdAnalysis>> corrected, uncorrected;
    for (const auto& m : ms) {
        ecfg.threshold.apply_correction = true;
        corrected[m] = analyze_corpus(corpus_, m, ecfg);
        ecfg.threshold.apply_correction = false;
        uncorrected[m] = analyze_corpus(corpus_, m, ecfg);
    }
    std::map<std::string, ThresholdMap> sources{
        {"lr-uncorrected", lr_threshold_map(uncorrected)},
        {"lr-corrected", lr_threshold_map(corrected)},
        {"estimated", estimated_threshold_map()},
    };
    bundle_.gmeans = evaluate_thresholds(corpus_, ms, sources);

    std::string table = csv_header();
    table += csv::join({"system", "version", "metric", "source", "threshold", "tp", "fp", "tn", "fn", "g_mean"}) + "\n";
    std::map<std::pair<std::string, std::string>, std::vector<double>> groups;  // (metric, source)
    for (const auto& r : bundle_.gmeans) {
        table += csv::join({r.system_id, r.version_label, r.metric.name, r.source, std::to_string(r.threshold),
                            std::to_string(r.cm.tp), std::to_string(r.cm.fp), std::to_string(r.cm.tn),
                            std::to_string(r.cm.fn), na_or(r.g_mean)}) +
                 "\n";
        if (r.g_mean) groups[{r.metric.name, r.source}].push_back(*r.g_mean);
    }
    json boxes = json::array();
    for (const auto& [key, values] : groups) {
        boxes.push_back({{"metric", key.first}, {"source", key.second}, {"stats", stats::to_json(stats::box_stats(values))}});
    }
    emit("gmeans.csv", std::move(table));
    emit("gmean_boxstats.json", dump({{"meta", meta()}, {"boxes", boxes}}));
    evaluated_ = true;
}

void Pipeline::nb_compare() {
    if (compared_) return;
    fit();
    loocv();
    if (bundle_.loocv.empty()) {
        throw Error(ErrorCode::InsufficientData, "no metric has estimated thresholds to compare");
    }
    std::vector<MetricId> ms;
    for (const auto& [m, r] : bundle_.loocv) ms.push_back(m);
    auto cmp = compare_nb_models(corpus_, ms, lr_threshold_map(bundle_.analyses), estimated_threshold_map(),
                                 cfg_.rank_alpha);
    for (const auto& w : cmp.warnings) bundle_.warnings.push_back("nb-compare: " + w);

    std::string table = csv_header();
    std::vector<std::string> head{"dataset"};
    head.insert(head.end(), cmp.table.models.begin(), cmp.table.models.end());
    table += csv::join(head) + "\n";
    for (std::size_t b = 0; b < cmp.table.blocks.size(); ++b) {
        std::vector<std::string> row{cmp.table.blocks[b]};
        for (const auto& cell : cmp.table.scores[b]) row.push_back(na_or(cell));
        table += csv::join(row) + "\n";
    }
    json test = to_json(cmp.test);
    test["meta"] = meta();
    json metric_names = json::array();
    for (const auto& m : ms) metric_names.push_back(m.name);
    test["metrics"] = metric_names;
    json cd = cd_diagram(cmp.test);
    cd["meta"] = meta();

    emit("nb_scores.csv", std::move(table));
    emit("nb_rank_test.json", dump(test));
    emit("cd_diagram.json", dump(cd));
    bundle_.nb = std::move(cmp);
    compared_ = true;
}

void Pipeline::run_all() {
    guarded("fit", [&] { fit(); });
    guarded("correlate", [&] { correlate(); });
    if (fitted_) {
        guarded("estimate", [&] { estimate(); });
        guarded("loocv", [&] { loocv(); });
        guarded("evaluate", [&] { evaluate(); });
        guarded("nb-compare", [&] { nb_compare(); });
    } else {
        for (const char* stage : {"estimate", "loocv", "evaluate", "nb-compare"}) {
            bundle_.errors.push_back({stage, ErrorCode::InsufficientData, "skipped because fit failed"});
        }
    }

    json files = json::array();
    for (const auto& f : bundle_.files) files.push_back(f.name);
    json errors = json::array();
    for (const auto& e : bundle_.errors) {
        errors.push_back({{"stage", e.stage}, {"code", to_string(e.code)}, {"message", e.message}});
    }
    emit("manifest.json",
         dump({{"meta", meta()}, {"files", files}, {"errors", errors}, {"warnings", bundle_.warnings}}));
}

ReportBundle run_pipeline(const RunConfig& cfg, const Corpus& corpus) {
    Pipeline p(cfg, corpus);
    p.run_all();
    return p.take_bundle();
}

void write_bundle(const ReportBundle& bundle, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message());
    for (const auto& f : bundle.files) {
        auto path = dir / f.name;
        std::ofstream out(path, std::ios::binary);
        out << f.content;
        if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    }
}

}  // namespace relthresh
