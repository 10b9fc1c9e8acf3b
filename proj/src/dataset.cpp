#include "relthresh/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "relthresh/csv.hpp"
#include "relthresh/error.hpp"

namespace relthresh {

namespace {

std::string trim(std::string_view s) {
    auto first = s.find_first_not_of(" \t");
    if (first == std::string_view::npos) return {};
    auto last = s.find_last_not_of(" \t");
    return std::string(s.substr(first, last - first + 1));
}

std::string upper_snake(std::string_view s) {
    std::string out;
    for (char c : trim(s)) {
        if (c == ' ' || c == '-') out.push_back('_');
        else out.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    }
    return out;
}

std::int64_t parse_count(std::string_view cell, std::string_view column, std::size_t line) {
    std::string t = trim(cell);
    std::int64_t value = 0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (t.empty() || ec != std::errc{} || ptr != t.data() + t.size() || value < 0) {
        throw Error(ErrorCode::MalformedValue,
                    "line " + std::to_string(line) + ": column '" + std::string(column) +
                        "' must be a non-negative integer, got '" + t + "'");
    }
    return value;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> split_list(std::string_view s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        auto comma = s.find(',', start);
        if (comma == std::string_view::npos) comma = s.size();
        auto item = trim(s.substr(start, comma - start));
        if (!item.empty()) out.push_back(item);
        start = comma + 1;
    }
    return out;
}

}  // namespace

MetricId MetricId::parse(std::string_view text) {
    std::string key = upper_snake(text);
    static const std::map<std::string, std::string> aliases = {
        {"EXPORT", "EXPORT_COUPLING"},          {"EXPORT_COUPLING", "EXPORT_COUPLING"},
        {"EXPORTCOUPLING", "EXPORT_COUPLING"},  {"IMPORT", "IMPORT_COUPLING"},
        {"IMPORT_COUPLING", "IMPORT_COUPLING"}, {"IMPORTCOUPLING", "IMPORT_COUPLING"},
        {"CBO", "CBO"}, {"DCC", "DCC"}, {"NOM", "NOM"}, {"WMC", "WMC"},
    };
    if (auto it = aliases.find(key); it != aliases.end()) return MetricId{it->second};
    return MetricId{trim(text)};
}

std::vector<MetricId> metrics::standard() {
    return {CBO, DCC, EXPORT_COUPLING, IMPORT_COUPLING, NOM, WMC};
}

std::optional<std::size_t> SystemDataset::metric_index(const MetricId& metric) const {
    auto it = std::find(metric_ids.begin(), metric_ids.end(), metric);
    if (it == metric_ids.end()) return std::nullopt;
    return static_cast<std::size_t>(it - metric_ids.begin());
}

std::vector<std::int64_t> SystemDataset::metric_column(const MetricId& metric) const {
    auto idx = metric_index(metric);
    if (!idx) throw Error(ErrorCode::Config, "metric " + metric.name + " not present in " + display_name());
    std::vector<std::int64_t> out;
    out.reserve(classes.size());
    for (const auto& c : classes) out.push_back(c.metric_values[*idx]);
    return out;
}

Labels SystemDataset::labels() const {
    Labels out;
    out.reserve(classes.size());
    for (const auto& c : classes) out.push_back(c.faulty ? 1 : 0);
    return out;
}

const SystemDataset* Corpus::find(std::string_view system_id, std::string_view version_label) const {
    for (const auto& d : datasets) {
        if (d.system_id == system_id && d.version_label == version_label) return &d;
    }
    return nullptr;
}

std::strong_ordering compare_version_labels(std::string_view a, std::string_view b) {
    auto next = [](std::string_view& s) {
        auto dot = s.find('.');
        std::string_view seg = s.substr(0, dot);
        s = dot == std::string_view::npos ? std::string_view{} : s.substr(dot + 1);
        return seg;
    };
    auto is_number = [](std::string_view seg) {
        return !seg.empty() && std::all_of(seg.begin(), seg.end(),
                                           [](char c) { return c >= '0' && c <= '9'; });
    };
    std::string_view ra = a, rb = b;
    while (!ra.empty() || !rb.empty()) {
        if (ra.empty()) return std::strong_ordering::less;
        if (rb.empty()) return std::strong_ordering::greater;
        auto sa = next(ra), sb = next(rb);
        if (is_number(sa) && is_number(sb)) {
            // Compare by magnitude without overflow: strip zeros, then length, then digits.
            auto strip = [](std::string_view s) {
                auto nz = s.find_first_not_of('0');
                return nz == std::string_view::npos ? std::string_view{} : s.substr(nz);
            };
            auto na = strip(sa), nb = strip(sb);
            if (na.size() != nb.size()) return na.size() <=> nb.size();
            if (auto c = na.compare(nb); c != 0) return c <=> 0;
        } else if (auto c = sa.compare(sb); c != 0) {
            return c <=> 0;
        }
    }
    // Numerically equal ("1.0" vs "1.00"): fall back to text to keep the order strict.
    return a.compare(b) <=> 0;
}

Corpus make_corpus(std::vector<SystemDataset> datasets, std::vector<MetricId> metric_ids,
                   bool explicit_order) {
    if (metric_ids.empty()) throw Error(ErrorCode::Schema, "corpus declares no metric columns");
    {
        std::set<MetricId> seen(metric_ids.begin(), metric_ids.end());
        if (seen.size() != metric_ids.size()) throw Error(ErrorCode::Schema, "duplicate metric names");
    }
    if (datasets.empty()) throw Error(ErrorCode::EmptyInput, "corpus contains no datasets");

    std::set<std::pair<std::string, std::string>> keys;
    for (auto& d : datasets) {
        if (!keys.emplace(d.system_id, d.version_label).second) {
            throw Error(ErrorCode::Duplicate, "duplicate dataset " + d.display_name());
        }
        if (d.classes.empty()) throw Error(ErrorCode::EmptyInput, "dataset " + d.display_name() + " is empty");
        d.metric_ids = metric_ids;
        std::set<std::string_view> names;
        for (auto& c : d.classes) {
            if (!names.insert(c.class_name).second) {
                throw Error(ErrorCode::Duplicate,
                            "duplicate class " + c.class_name + " in " + d.display_name());
            }
            if (c.metric_values.size() != metric_ids.size()) {
                throw Error(ErrorCode::Schema, "class " + c.class_name + " in " + d.display_name() +
                                                   " does not carry every metric");
            }
            if (c.defect_count < 0) throw Error(ErrorCode::MalformedValue, "negative defect count");
            for (auto v : c.metric_values) {
                if (v < 0) throw Error(ErrorCode::MalformedValue, "negative metric value in " + c.class_name);
            }
            c.faulty = c.defect_count >= 1;
        }
    }

    // Group by system and assign / validate ordinal positions.
    std::map<std::string, std::vector<SystemDataset*>> by_system;
    for (auto& d : datasets) by_system[d.system_id].push_back(&d);
    for (auto& [system, group] : by_system) {
        if (explicit_order) {
            std::set<int> orders;
            for (auto* d : group) {
                if (!orders.insert(d->version_order).second) {
                    throw Error(ErrorCode::Duplicate, "version order not strict within system " + system);
                }
            }
        } else {
            std::sort(group.begin(), group.end(), [](const SystemDataset* x, const SystemDataset* y) {
                return compare_version_labels(x->version_label, y->version_label) < 0;
            });
            for (std::size_t i = 0; i < group.size(); ++i) group[i]->version_order = static_cast<int>(i);
        }
    }

    std::stable_sort(datasets.begin(), datasets.end(), [](const SystemDataset& x, const SystemDataset& y) {
        if (x.system_id != y.system_id) return x.system_id < y.system_id;
        return x.version_order < y.version_order;
    });
    return Corpus{std::move(datasets), std::move(metric_ids)};
}

Corpus parse_corpus_csv(std::string_view text, const Schema& schema) {
    auto rows = csv::parse(text);
    if (rows.empty()) throw Error(ErrorCode::EmptyInput, "input has no header row");
    const auto& header = rows.front().fields;

    auto column = [&](const std::string& name) -> std::size_t {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (trim(header[i]) == name) return i;
        }
        throw Error(ErrorCode::Schema, "missing column '" + name + "'");
    };
    const std::size_t col_system = column(schema.system);
    const std::size_t col_version = column(schema.version);
    const std::size_t col_class = column(schema.class_name);
    const std::size_t col_bugs = column(schema.bugs);
    std::optional<std::size_t> col_order;
    std::string order_name = schema.order;
    if (order_name.empty() && schema.metrics.empty() &&
        std::any_of(header.begin(), header.end(), [](const std::string& h) { return trim(h) == "order"; })) {
        order_name = "order";  // files written by corpus_to_csv
    }
    if (!order_name.empty()) col_order = column(order_name);

    std::vector<std::pair<std::size_t, MetricId>> metric_cols;
    if (schema.metrics.empty()) {
        std::set<std::size_t> roles{col_system, col_version, col_class, col_bugs};
        if (col_order) roles.insert(*col_order);
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (!roles.count(i)) metric_cols.emplace_back(i, MetricId::parse(header[i]));
        }
    } else {
        for (const auto& [name, id] : schema.metrics) metric_cols.emplace_back(column(name), id);
    }
    if (metric_cols.empty()) throw Error(ErrorCode::Schema, "header declares no metric column");
    if (rows.size() < 2) throw Error(ErrorCode::EmptyInput, "input has a header but no data rows");

    std::vector<MetricId> metric_ids;
    for (const auto& [idx, id] : metric_cols) metric_ids.push_back(id);

    std::map<std::pair<std::string, std::string>, std::size_t> index;
    std::vector<SystemDataset> datasets;
    std::vector<std::optional<int>> orders;

    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.fields.size() != header.size()) {
            throw Error(ErrorCode::MalformedValue, "line " + std::to_string(row.line) + ": expected " +
                                                       std::to_string(header.size()) + " fields, got " +
                                                       std::to_string(row.fields.size()));
        }
        ClassRecord rec;
        rec.class_name = trim(row.fields[col_class]);
        bool excluded = std::any_of(schema.exclude_prefixes.begin(), schema.exclude_prefixes.end(),
                                    [&](const std::string& p) { return rec.class_name.starts_with(p); });
        if (excluded) continue;
        rec.defect_count = parse_count(row.fields[col_bugs], schema.bugs, row.line);
        rec.faulty = rec.defect_count >= 1;
        for (const auto& [idx, id] : metric_cols) {
            rec.metric_values.push_back(parse_count(row.fields[idx], header[idx], row.line));
        }

        auto key = std::make_pair(trim(row.fields[col_system]), trim(row.fields[col_version]));
        auto [it, inserted] = index.emplace(key, datasets.size());
        if (inserted) {
            SystemDataset d;
            d.system_id = key.first;
            d.version_label = key.second;
            datasets.push_back(std::move(d));
            orders.emplace_back();
        }
        if (col_order) {
            auto order = static_cast<int>(parse_count(row.fields[*col_order], order_name, row.line));
            auto& slot = orders[it->second];
            if (slot && *slot != order) {
                throw Error(ErrorCode::MalformedValue, "line " + std::to_string(row.line) +
                                                           ": inconsistent version order for " +
                                                           key.first + " v" + key.second);
            }
            slot = order;
        }
        auto& classes = datasets[it->second].classes;
        classes.push_back(std::move(rec));
    }
    if (col_order) {
        for (std::size_t i = 0; i < datasets.size(); ++i) datasets[i].version_order = orders[i].value_or(0);
    }
    for (const auto& d : datasets) {
        std::set<std::string_view> names;
        for (const auto& c : d.classes) {
            if (!names.insert(c.class_name).second) {
                throw Error(ErrorCode::Duplicate, "duplicate row (" + d.system_id + ", " + d.version_label +
                                                      ", " + c.class_name + ")");
            }
        }
    }
    return make_corpus(std::move(datasets), std::move(metric_ids), col_order.has_value());
}

Corpus load_corpus(const std::filesystem::path& path, const Schema& schema) {
    std::string text = read_file(path);
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
        throw Error(ErrorCode::EmptyInput, path.string() + " is empty");
    }
    if (path.extension() == ".json") {
        try {
            return corpus_from_json(nlohmann::json::parse(text));
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::MalformedValue, path.string() + ": " + e.what());
        }
    }
    return parse_corpus_csv(text, schema);
}

std::string corpus_to_csv(const Corpus& corpus) {
    std::vector<std::string> header{"system", "version", "order", "class", "bugs"};
    for (const auto& m : corpus.metric_ids) header.push_back(m.name);
    std::string out = csv::join(header) + "\n";
    for (const auto& d : corpus.datasets) {
        for (const auto& c : d.classes) {
            std::vector<std::string> fields{d.system_id, d.version_label, std::to_string(d.version_order),
                                            c.class_name, std::to_string(c.defect_count)};
            for (auto v : c.metric_values) fields.push_back(std::to_string(v));
            out += csv::join(fields);
            out.push_back('\n');
        }
    }
    return out;
}

nlohmann::json corpus_to_json(const Corpus& corpus) {
    nlohmann::json j;
    j["metric_ids"] = nlohmann::json::array();
    for (const auto& m : corpus.metric_ids) j["metric_ids"].push_back(m.name);
    j["datasets"] = nlohmann::json::array();
    for (const auto& d : corpus.datasets) {
        nlohmann::json dj;
        dj["system"] = d.system_id;
        dj["version"] = d.version_label;
        dj["version_order"] = d.version_order;
        dj["size"] = d.size();
        dj["defect_ratio"] = defect_ratio(d);
        dj["classes"] = nlohmann::json::array();
        for (const auto& c : d.classes) {
            nlohmann::json cj;
            cj["class"] = c.class_name;
            cj["bugs"] = c.defect_count;
            cj["faulty"] = c.faulty;
            cj["metrics"] = c.metric_values;
            dj["classes"].push_back(std::move(cj));
        }
        j["datasets"].push_back(std::move(dj));
    }
    return j;
}

Corpus corpus_from_json(const nlohmann::json& j) {
    std::vector<MetricId> metric_ids;
    for (const auto& m : j.at("metric_ids")) metric_ids.push_back(MetricId{m.get<std::string>()});
    std::vector<SystemDataset> datasets;
    for (const auto& dj : j.at("datasets")) {
        SystemDataset d;
        d.system_id = dj.at("system").get<std::string>();
        d.version_label = dj.at("version").get<std::string>();
        d.version_order = dj.at("version_order").get<int>();
        for (const auto& cj : dj.at("classes")) {
            ClassRecord c;
            c.class_name = cj.at("class").get<std::string>();
            c.defect_count = cj.at("bugs").get<std::int64_t>();
            c.metric_values = cj.at("metrics").get<std::vector<std::int64_t>>();
            d.classes.push_back(std::move(c));
        }
        datasets.push_back(std::move(d));
    }
    return make_corpus(std::move(datasets), std::move(metric_ids), true);
}

Schema schema_from_json(const nlohmann::json& j) {
    Schema s;
    auto get = [&](const char* key, std::string& dst) {
        if (j.contains(key)) dst = j.at(key).get<std::string>();
    };
    get("system", s.system);
    get("version", s.version);
    get("class", s.class_name);
    get("bugs", s.bugs);
    get("order", s.order);
    if (j.contains("metrics")) {
        const auto& m = j.at("metrics");
        if (m.is_array()) {
            for (const auto& col : m) {
                auto name = col.get<std::string>();
                s.metrics.emplace_back(name, MetricId::parse(name));
            }
        } else if (m.is_object()) {
            for (const auto& [col, id] : m.items()) s.metrics.emplace_back(col, MetricId::parse(id.get<std::string>()));
        } else {
            throw Error(ErrorCode::Config, "schema 'metrics' must be a list or an object");
        }
    }
    if (j.contains("exclude_prefixes")) s.exclude_prefixes = j.at("exclude_prefixes").get<std::vector<std::string>>();
    return s;
}

Schema schema_from_key_values(std::string_view text) {
    Schema s;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        auto t = trim(line);
        if (!t.empty() && t.back() == '\r') t.pop_back();
        if (t.empty() || t.front() == '#') continue;
        auto eq = t.find('=');
        if (eq == std::string::npos) throw Error(ErrorCode::Config, "schema line without '=': " + t);
        auto key = trim(std::string_view(t).substr(0, eq));
        auto value = trim(std::string_view(t).substr(eq + 1));
        if (key == "system") s.system = value;
        else if (key == "version") s.version = value;
        else if (key == "class") s.class_name = value;
        else if (key == "bugs") s.bugs = value;
        else if (key == "order") s.order = value;
        else if (key == "exclude_prefixes") s.exclude_prefixes = split_list(value);
        else if (key == "metrics") {
            // column or column:METRIC
            for (const auto& item : split_list(value)) {
                auto colon = item.find(':');
                if (colon == std::string::npos) s.metrics.emplace_back(item, MetricId::parse(item));
                else s.metrics.emplace_back(trim(item.substr(0, colon)), MetricId::parse(item.substr(colon + 1)));
            }
        } else {
            throw Error(ErrorCode::Config, "unknown schema key '" + key + "'");
        }
    }
    return s;
}

Schema load_schema(const std::filesystem::path& path) {
    std::string text = read_file(path);
    auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') {
        try {
            return schema_from_json(nlohmann::json::parse(text));
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::Config, path.string() + ": " + e.what());
        }
    }
    return schema_from_key_values(text);
}

double defect_ratio(const SystemDataset& d) {
    if (d.classes.empty()) throw Error(ErrorCode::EmptyInput, "defect ratio of an empty dataset");
    auto faulty = std::count_if(d.classes.begin(), d.classes.end(), [](const ClassRecord& c) { return c.faulty; });
    return static_cast<double>(faulty) / static_cast<double>(d.classes.size());
}

double population_defect_ratio(const Corpus& corpus, RatioMode mode) {
    if (corpus.datasets.empty()) throw Error(ErrorCode::EmptyInput, "population ratio of an empty corpus");
    double ratio = 0.0;
    if (mode == RatioMode::MeanOfRatios) {
        double sum = 0.0;
        for (const auto& d : corpus.datasets) sum += defect_ratio(d);
        ratio = sum / static_cast<double>(corpus.datasets.size());
    } else {
        std::size_t faulty = 0, total = 0;
        for (const auto& d : corpus.datasets) {
            for (const auto& c : d.classes) faulty += c.faulty ? 1 : 0;
            total += d.size();
        }
        if (total == 0) throw Error(ErrorCode::EmptyInput, "population ratio of an empty corpus");
        ratio = static_cast<double>(faulty) / static_cast<double>(total);
    }
    if (!(ratio > 0.0 && ratio < 1.0)) {
        throw Error(ErrorCode::DegeneratePopulation,
                    "population defect ratio is " + std::to_string(ratio) + "; correction needs a value in (0,1)");
    }
    return ratio;
}

std::vector<SystemDataset> latest_versions(const Corpus& corpus) {
    std::map<std::string, const SystemDataset*> best;
    for (const auto& d : corpus.datasets) {
        auto& slot = best[d.system_id];
        if (!slot || d.version_order > slot->version_order) slot = &d;
    }
    std::vector<SystemDataset> out;
    out.reserve(best.size());
    for (const auto& [_, d] : best) out.push_back(*d);
    return out;
}

}  // namespace relthresh
