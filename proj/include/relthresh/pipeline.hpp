#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "relthresh/comparison.hpp"
#include "relthresh/error.hpp"
#include "relthresh/estimation.hpp"
#include "relthresh/evaluation.hpp"

namespace relthresh {

struct RunConfig {
    double risk_increase = 0.10;
    bool apply_correction = true;
    double sig_level = 0.05;
    std::optional<double> population_ratio;
    RatioMode ratio_mode = RatioMode::MeanOfRatios;
    RoundingPolicy rounding = RoundingPolicy::HalfUp;
    SignificanceTest test = SignificanceTest::Wald;
    SpearmanPValue spearman_p = SpearmanPValue::TApproximation;
    double rank_alpha = 0.05;
    std::uint64_t seed = 42;
    std::filesystem::path output_dir = "relthresh-out";
    std::vector<MetricId> metrics;  // empty: every metric in the corpus

    EstimationConfig estimation() const;
};

/// Throws Error(Config) when a field is out of range.
void validate(const RunConfig& cfg);

/// Fields present in `j` override those of `base`.
RunConfig run_config_from_json(const nlohmann::json& j, RunConfig base = {});
RunConfig load_run_config(const std::filesystem::path& path, RunConfig base = {});
nlohmann::json to_json(const RunConfig& cfg);

RatioMode parse_ratio_mode(std::string_view text);
std::string_view to_string(RatioMode mode) noexcept;
SignificanceTest parse_significance_test(std::string_view text);
std::string_view to_string(SignificanceTest test) noexcept;

struct ReportFile {
    std::string name;
    std::string content;
};

struct StageError {
    std::string stage;
    ErrorCode code;
    std::string message;

    std::string describe() const { return stage + ": " + message; }
};

struct ReportBundle {
    std::vector<ReportFile> files;
    std::vector<StageError> errors;
    std::vector<std::string> warnings;

    std::map<MetricId, std::vector<ThresholdAnalysis>> analyses;
    std::vector<MetricScreen> screening;
    std::vector<MetricId> selected;
    std::map<MetricId, EstimationModel> models;
    std::map<MetricId, LoocvResult> loocv;
    std::vector<GMeanRecord> gmeans;
    std::optional<NbComparison> nb;

    bool ok() const noexcept { return errors.empty(); }
    const ReportFile* find(std::string_view name) const;
};

/// Stage-by-stage driver. Each stage runs its prerequisites on demand, at
/// most once, and appends its report files to the bundle.
class Pipeline {
public:
    Pipeline(RunConfig cfg, const Corpus& corpus);

    void fit();         // fit.json, table2_size_thresholds.csv
    void correlate();   // table4_correlations.{csv,json}
    void screen();      // screening.json
    void estimate();    // table5_models.json
    void loocv();       // table3_test_thresholds.csv, loocv.json
    void evaluate();    // gmeans.csv, gmean_boxstats.json
    void nb_compare();  // nb_scores.csv, nb_rank_test.json, cd_diagram.json

    /// All stages; a failing stage is recorded and later stages that do
    /// not depend on it still run. Adds manifest.json.
    void run_all();

    const ReportBundle& bundle() const noexcept { return bundle_; }
    ReportBundle take_bundle() { return std::move(bundle_); }

private:
    template <class F>
    void guarded(const char* stage, F&& body);
    void emit(std::string name, std::string content);
    std::string csv_header() const;
    nlohmann::json meta() const;
    std::vector<MetricId> metrics() const;
    ThresholdMap lr_threshold_map(const std::map<MetricId, std::vector<ThresholdAnalysis>>& analyses) const;
    ThresholdMap estimated_threshold_map() const;

    RunConfig cfg_;
    const Corpus& corpus_;
    ReportBundle bundle_;
    bool fitted_ = false, correlated_ = false, screened_ = false, estimated_ = false;
    bool loocv_done_ = false, evaluated_ = false, compared_ = false;
};

ReportBundle run_pipeline(const RunConfig& cfg, const Corpus& corpus);

/// Writes every report file into `dir`, creating it when needed.
void write_bundle(const ReportBundle& bundle, const std::filesystem::path& dir);

/// Shortest round-trip decimal form of a double.
std::string format_number(double value);

}  // namespace relthresh
