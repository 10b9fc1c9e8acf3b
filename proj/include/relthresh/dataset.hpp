#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace relthresh {

/// Name of a class-level metric. The six standard metrics have canonical
/// upper-case names; anything else is carried through verbatim.
struct MetricId {
    std::string name;

    /// Canonicalizes common spellings ("Export Coupling", "export") of the
    /// standard metrics. Unknown names pass through unchanged.
    static MetricId parse(std::string_view text);

    auto operator<=>(const MetricId&) const = default;
};

namespace metrics {
inline const MetricId CBO{"CBO"};
inline const MetricId DCC{"DCC"};
inline const MetricId EXPORT_COUPLING{"EXPORT_COUPLING"};
inline const MetricId IMPORT_COUPLING{"IMPORT_COUPLING"};
inline const MetricId NOM{"NOM"};
inline const MetricId WMC{"WMC"};

std::vector<MetricId> standard();
}  // namespace metrics

/// Binary outcome per class, 1 = faulty. Kept as bytes so it can be viewed
/// through std::span.
using Labels = std::vector<std::uint8_t>;

struct ClassRecord {
    std::string class_name;
    std::vector<std::int64_t> metric_values;  // aligned with the owning dataset's metric_ids
    std::int64_t defect_count = 0;
    bool faulty = false;

    bool operator==(const ClassRecord&) const = default;
};

/// One version of one software system.
struct SystemDataset {
    std::string system_id;
    std::string version_label;
    int version_order = 0;
    std::vector<MetricId> metric_ids;
    std::vector<ClassRecord> classes;

    std::size_t size() const noexcept { return classes.size(); }
    std::optional<std::size_t> metric_index(const MetricId& metric) const;
    /// Throws Error(Config) when the metric is not part of this dataset.
    std::vector<std::int64_t> metric_column(const MetricId& metric) const;
    Labels labels() const;
    std::string display_name() const { return system_id + " v" + version_label; }

    bool operator==(const SystemDataset&) const = default;
};

struct Corpus {
    std::vector<SystemDataset> datasets;
    std::vector<MetricId> metric_ids;

    const SystemDataset* find(std::string_view system_id, std::string_view version_label) const;
    bool operator==(const Corpus&) const = default;
};

/// Column-role mapping for CSV input.
struct Schema {
    std::string system = "system";
    std::string version = "version";
    std::string class_name = "class";
    std::string bugs = "bugs";
    std::string order;  // optional explicit version-order column
    /// (column, metric) pairs. Empty means every non-role column is a metric.
    std::vector<std::pair<std::string, MetricId>> metrics;
    /// Rows whose class name starts with any of these are dropped.
    std::vector<std::string> exclude_prefixes;
};

/// Reads a schema file in either JSON or key=value form.
Schema load_schema(const std::filesystem::path& path);
Schema schema_from_json(const nlohmann::json& j);
Schema schema_from_key_values(std::string_view text);

/// Validates and normalizes a set of datasets into a Corpus: checks
/// uniqueness, relabels faulty from defect counts, assigns version_order by
/// version-label comparison unless `explicit_order` is set.
Corpus make_corpus(std::vector<SystemDataset> datasets, std::vector<MetricId> metric_ids,
                   bool explicit_order = false);

Corpus parse_corpus_csv(std::string_view text, const Schema& schema = {});
/// Loads a CSV corpus, or a normalized JSON corpus when the file ends in .json.
Corpus load_corpus(const std::filesystem::path& path, const Schema& schema = {});

/// Long-format CSV with the default schema column names plus `order`.
std::string corpus_to_csv(const Corpus& corpus);
nlohmann::json corpus_to_json(const Corpus& corpus);
Corpus corpus_from_json(const nlohmann::json& j);

/// Dot-separated, numeric-aware comparison: "1.2" < "1.10" < "2".
std::strong_ordering compare_version_labels(std::string_view a, std::string_view b);

double defect_ratio(const SystemDataset& d);

enum class RatioMode {
    MeanOfRatios,  // unweighted mean of per-dataset ratios (default)
    Pooled,        // faulty classes over all classes
};

double population_defect_ratio(const Corpus& corpus, RatioMode mode = RatioMode::MeanOfRatios);

inline std::size_t system_size(const SystemDataset& d) noexcept { return d.size(); }

/// One dataset per system: the one with the highest version_order.
std::vector<SystemDataset> latest_versions(const Corpus& corpus);

}  // namespace relthresh
