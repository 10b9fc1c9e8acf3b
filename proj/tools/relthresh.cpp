// Command-line front end: one subcommand per pipeline stage plus synthetic
// corpus generation and fixture-based estimation.

#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "relthresh/dataset.hpp"
#include "relthresh/error.hpp"
#include "relthresh/fixture.hpp"
#include "relthresh/pipeline.hpp"
#include "relthresh/synthetic.hpp"

namespace {

using namespace relthresh;
using nlohmann::json;

struct Flags {
    std::optional<double> risk_increase;
    bool no_correction = false;
    std::optional<double> population_ratio;
    std::optional<double> sig_level;
    bool lrt = false;
    std::optional<std::string> rounding;
    std::optional<std::string> ratio_mode;
    bool exact_spearman = false;
    std::optional<double> rank_alpha;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> metrics;
    std::optional<std::string> out_dir;
    std::optional<std::string> config;
    std::optional<std::string> schema;
};

// Precedence, lowest first: defaults, RELTHRESH_OUTPUT_DIR, flags, --config.
RunConfig build_config(const Flags& f) {
    RunConfig cfg;
    if (const char* env = std::getenv("RELTHRESH_OUTPUT_DIR"); env && *env) cfg.output_dir = env;
    if (f.risk_increase) cfg.risk_increase = *f.risk_increase;
    if (f.no_correction) cfg.apply_correction = false;
    if (f.population_ratio) cfg.population_ratio = *f.population_ratio;
    if (f.sig_level) cfg.sig_level = *f.sig_level;
    if (f.lrt) cfg.test = SignificanceTest::LikelihoodRatio;
    if (f.rounding) cfg.rounding = parse_rounding_policy(*f.rounding);
    if (f.ratio_mode) cfg.ratio_mode = parse_ratio_mode(*f.ratio_mode);
    if (f.exact_spearman) cfg.spearman_p = SpearmanPValue::ExactPermutation;
    if (f.rank_alpha) cfg.rank_alpha = *f.rank_alpha;
    if (f.seed) cfg.seed = *f.seed;
    for (const auto& m : f.metrics) cfg.metrics.push_back(MetricId::parse(m));
    if (f.out_dir) cfg.output_dir = *f.out_dir;
    if (f.config) cfg = load_run_config(*f.config, std::move(cfg));
    validate(cfg);
    return cfg;
}

Corpus read_corpus(const std::string& path, const Flags& f) {
    Schema schema;
    if (f.schema) schema = load_schema(*f.schema);
    return load_corpus(path, schema);
}

int finish(const ReportBundle& bundle, const RunConfig& cfg) {
    write_bundle(bundle, cfg.output_dir);
    for (const auto& file : bundle.files) std::cout << (cfg.output_dir / file.name).string() << "\n";
    for (const auto& w : bundle.warnings) std::cerr << "warning: " << w << "\n";
    for (const auto& e : bundle.errors) std::cerr << "error: " << e.describe() << "\n";
    if (bundle.errors.empty()) return 0;
    return exit_code_for(category_of(bundle.errors.front().code));
}

json corpus_summary(const Corpus& corpus) {
    json datasets = json::array();
    for (const auto& d : corpus.datasets) {
        datasets.push_back({{"system", d.system_id},
                            {"version", d.version_label},
                            {"order", d.version_order},
                            {"size", d.size()},
                            {"defect_ratio", defect_ratio(d)}});
    }
    json metrics = json::array();
    for (const auto& m : corpus.metric_ids) metrics.push_back(m.name);
    json out{{"metrics", metrics}, {"datasets", datasets}};
    for (auto mode : {RatioMode::MeanOfRatios, RatioMode::Pooled}) {
        std::string key = "population_ratio_" + std::string(to_string(mode));
        try {
            out[key] = population_defect_ratio(corpus, mode);
        } catch (const Error& e) {
            out[key] = nullptr;
        }
    }
    return out;
}

void add_run_flags(CLI::App& app, Flags& f) {
    app.add_option("--risk-increase", f.risk_increase, "Allowed risk increase over background risk (default 0.10)");
    app.add_flag("--no-correction", f.no_correction, "Skip the intercept prior correction");
    app.add_option("--population-ratio", f.population_ratio, "Population defect ratio (default: from the corpus)");
    app.add_option("--sig-level", f.sig_level, "Significance level (default 0.05)");
    app.add_flag("--lrt", f.lrt, "Use the likelihood-ratio test instead of Wald");
    app.add_option("--rounding", f.rounding, "half-up (default) or half-even");
    app.add_option("--ratio-mode", f.ratio_mode, "Population ratio: mean (default) or pooled");
    app.add_flag("--exact-spearman", f.exact_spearman, "Exact permutation p-value for n <= 10");
    app.add_option("--rank-alpha", f.rank_alpha, "Nemenyi alpha: 0.05 (default) or 0.10");
    app.add_option("--seed", f.seed, "Seed recorded in reports and used by synthetic generation");
    app.add_option("--metric", f.metrics, "Restrict to these metrics (repeatable)");
    app.add_option("--out-dir", f.out_dir, "Report directory (default $RELTHRESH_OUTPUT_DIR or relthresh-out)");
    app.add_option("--config", f.config, "JSON run config; its fields override flags");
    app.add_option("--schema", f.schema, "Column schema (JSON or key=value)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Size-relative metric thresholds for defect prediction"};
    app.set_version_flag("--version", RELTHRESH_VERSION);
    app.require_subcommand(1);
    app.fallthrough();

    Flags flags;
    add_run_flags(app, flags);

    std::string corpus_path;
    std::function<int()> action;

    auto stage_command = [&](const char* name, const char* help, void (Pipeline::*stage)()) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("corpus", corpus_path, "Corpus CSV or JSON")->required();
        sub->callback([&, stage] {
            action = [&, stage] {
                auto cfg = build_config(flags);
                auto corpus = read_corpus(corpus_path, flags);
                Pipeline p(cfg, corpus);
                int code = 0;
                try {
                    (p.*stage)();
                } catch (const Error& e) {
                    std::cerr << "error: " << e.what() << "\n";
                    code = exit_code_for(e.category());
                }
                int written = finish(p.bundle(), cfg);
                return code != 0 ? code : written;
            };
        });
    };

    auto* load = app.add_subcommand("load", "Validate a corpus and print a JSON summary");
    load->add_option("corpus", corpus_path, "Corpus CSV or JSON")->required();
    load->callback([&] {
        action = [&] {
            std::cout << corpus_summary(read_corpus(corpus_path, flags)).dump(2) << "\n";
            return 0;
        };
    });

    stage_command("fit", "Per-dataset logistic fits and thresholds", &Pipeline::fit);
    stage_command("correlate", "Size-threshold Spearman correlations over risk levels", &Pipeline::correlate);
    auto* est = app.add_subcommand("estimate", "Screen metrics, fit estimation models and test thresholds");
    est->add_option("corpus", corpus_path, "Corpus CSV or JSON")->required();
    est->callback([&] {
        action = [&] {
            auto cfg = build_config(flags);
            auto corpus = read_corpus(corpus_path, flags);
            Pipeline p(cfg, corpus);
            int code = 0;
            try {
                p.estimate();
                p.loocv();
            } catch (const Error& e) {
                std::cerr << "error: " << e.what() << "\n";
                code = exit_code_for(e.category());
            }
            int written = finish(p.bundle(), cfg);
            return code != 0 ? code : written;
        };
    });
    stage_command("loocv", "Leave-one-system-out test thresholds", &Pipeline::loocv);
    stage_command("evaluate", "G-mean of LR and estimated thresholds", &Pipeline::evaluate);
    stage_command("nb-compare", "Naive Bayes comparison with rank tests", &Pipeline::nb_compare);

    auto* pipe = app.add_subcommand("pipeline", "Run every stage and write the full report bundle");
    pipe->add_option("corpus", corpus_path, "Corpus CSV or JSON")->required();
    pipe->callback([&] {
        action = [&] {
            auto cfg = build_config(flags);
            auto corpus = read_corpus(corpus_path, flags);
            return finish(run_pipeline(cfg, corpus), cfg);
        };
    });

    std::string spec_path, synth_out, synth_format = "csv";
    auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus from a JSON spec");
    synth->add_option("spec", spec_path, "Synthetic spec JSON")->required();
    synth->add_option("-o,--output", synth_out, "Output file (default stdout)");
    synth->add_option("--format", synth_format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    synth->callback([&] {
        action = [&] {
            std::ifstream in(spec_path);
            if (!in) throw Error(ErrorCode::Io, "cannot open " + spec_path);
            SyntheticSpec spec;
            try {
                spec = synthetic_spec_from_json(json::parse(in));
            } catch (const json::exception& e) {
                throw Error(ErrorCode::InvalidSpec, spec_path + ": " + e.what());
            }
            if (flags.seed) spec.seed = *flags.seed;
            auto corpus = generate_synthetic(spec);
            std::string text = synth_format == "json" ? corpus_to_json(corpus).dump(1) + "\n" : corpus_to_csv(corpus);
            if (synth_out.empty()) {
                std::cout << text;
            } else {
                std::ofstream out(synth_out, std::ios::binary);
                out << text;
                if (!out) throw Error(ErrorCode::Io, "cannot write " + synth_out);
            }
            return 0;
        };
    });

    std::string fx_metric, fx_models;
    std::size_t fx_size = 0;
    auto* fx = app.add_subcommand("fixture-estimate", "Threshold from shipped estimation models; needs no corpus");
    fx->add_option("--metric", fx_metric, "Metric name")->required();
    fx->add_option("--size", fx_size, "System size in classes")->required();
    fx->add_option("--models", fx_models, "Models JSON (default: built-in published models)");
    fx->callback([&] {
        action = [&] {
            auto policy = flags.rounding ? parse_rounding_policy(*flags.rounding) : RoundingPolicy::HalfUp;
            auto models = fx_models.empty() ? published_models() : load_models(fx_models);
            auto t = estimate_from_fixture(MetricId::parse(fx_metric), fx_size, models, policy);
            json out = to_json(t);
            out["size"] = fx_size;
            std::cout << out.dump(2) << "\n";
            return 0;
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : exit_code_for(ErrorCategory::Usage);
    }

    try {
        return action ? action() : 0;
    } catch (const Error& e) {
        std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
        return exit_code_for(e.category());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(ErrorCategory::Data);
    }
}
