#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <optional>
#include <string>
#include <vector>

#include "relthresh/error.hpp"
#include "relthresh/estimation.hpp"
#include "relthresh/evaluation.hpp"
#include "relthresh/fixture.hpp"
#include "relthresh/logit.hpp"
#include "relthresh/pipeline.hpp"
#include "relthresh/rank_tests.hpp"
#include "relthresh/synthetic.hpp"

namespace py = pybind11;
using namespace relthresh;

namespace {

// Structured results cross the boundary as plain dicts via their JSON form.
py::object to_py(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

nlohmann::json from_py(const py::object& o) {
    return nlohmann::json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

std::string_view category_name(ErrorCategory c) {
    switch (c) {
        case ErrorCategory::Usage: return "usage";
        case ErrorCategory::Data: return "data";
        case ErrorCategory::Numerical: return "numerical";
    }
    return "usage";
}

std::vector<std::uint8_t> to_labels(const std::vector<int>& ys) {
    std::vector<std::uint8_t> out;
    out.reserve(ys.size());
    for (int y : ys) {
        if (y != 0 && y != 1) throw Error(ErrorCode::MalformedValue, "labels must be 0 or 1");
        out.push_back(static_cast<std::uint8_t>(y));
    }
    return out;
}

py::dict corpus_summary(const Corpus& c) {
    py::list datasets;
    for (const auto& d : c.datasets) {
        py::dict e;
        e["system"] = d.system_id;
        e["version"] = d.version_label;
        e["order"] = d.version_order;
        e["size"] = d.size();
        e["defect_ratio"] = defect_ratio(d);
        datasets.append(e);
    }
    py::list ms;
    for (const auto& m : c.metric_ids) ms.append(m.name);
    py::dict out;
    out["datasets"] = datasets;
    out["metrics"] = ms;
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Size-relative metric thresholds from defect data";

    PYBIND11_CONSTINIT static py::gil_safe_call_once_and_store<py::object> error_storage;
    error_storage.call_once_and_store_result(
        [&]() { return py::object(py::exception<Error>(m, "RelthreshError", PyExc_ValueError)); });
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            const py::object& error_type = error_storage.get_stored();
            py::object exc = error_type(std::string(to_string(e.code())) + ": " + e.what());
            exc.attr("code") = std::string(to_string(e.code()));
            exc.attr("category") = std::string(category_name(e.category()));
            exc.attr("exit_code") = exit_code_for(e.category());
            PyErr_SetObject(error_type.ptr(), exc.ptr());
        }
    });

    py::class_<Corpus>(m, "Corpus")
        .def_static("load", [](const std::filesystem::path& p) { return load_corpus(p); }, py::arg("path"))
        .def_static("from_csv", [](const std::string& text) { return parse_corpus_csv(text); }, py::arg("text"))
        .def_static("from_json", [](const py::object& o) { return corpus_from_json(from_py(o)); }, py::arg("data"))
        .def("to_csv", &corpus_to_csv)
        .def("to_json", [](const Corpus& c) { return to_py(corpus_to_json(c)); })
        .def("summary", &corpus_summary)
        .def("population_ratio",
             [](const Corpus& c, const std::string& mode) { return population_defect_ratio(c, parse_ratio_mode(mode)); },
             py::arg("mode") = "mean")
        .def_property_readonly("metrics",
                               [](const Corpus& c) {
                                   std::vector<std::string> out;
                                   for (const auto& id : c.metric_ids) out.push_back(id.name);
                                   return out;
                               })
        .def("__len__", [](const Corpus& c) { return c.datasets.size(); });

    m.def("load_corpus", [](const std::filesystem::path& p) { return load_corpus(p); }, py::arg("path"));

    m.def(
        "fit_logistic",
        [](const std::vector<double>& xs, const std::vector<int>& ys) {
            return to_py(to_json(fit_univariate_logistic(xs, to_labels(ys))));
        },
        py::arg("x"), py::arg("y"));
    m.def("risk_at", &risk_at, py::arg("alpha"), py::arg("beta"), py::arg("x"));
    m.def("background_risk", &background_risk, py::arg("alpha"));
    m.def(
        "correct_intercept",
        [](double alpha, double y_pop, double y_bar) { return correct_intercept(alpha, CorrectionContext{y_pop, y_bar}); },
        py::arg("alpha"), py::arg("y_pop"), py::arg("y_bar"));
    m.def("varl_threshold", &varl_threshold, py::arg("alpha"), py::arg("beta"), py::arg("p_arl"));
    m.def(
        "finalize_threshold",
        [](double varl, const std::string& rounding) {
            return to_py(to_json(finalize_threshold(varl, parse_rounding_policy(rounding))));
        },
        py::arg("varl"), py::arg("rounding") = "half-up");

    m.def(
        "estimate_from_fixture",
        [](const std::string& metric, std::size_t size) {
            return to_py(to_json(estimate_from_fixture(MetricId::parse(metric), size)));
        },
        py::arg("metric"), py::arg("size"));
    m.def("published_models", [] {
        auto models = published_models();
        return to_py(models_to_json(models));
    });

    m.def(
        "spearman",
        [](const std::vector<double>& x, const std::vector<double>& y, bool exact) {
            if (x.size() != y.size()) throw Error(ErrorCode::Config, "x and y differ in length");
            std::vector<std::pair<double, double>> pairs;
            for (std::size_t i = 0; i < x.size(); ++i) pairs.emplace_back(x[i], y[i]);
            return to_py(to_json(spearman(pairs, exact ? SpearmanPValue::ExactPermutation : SpearmanPValue::TApproximation)));
        },
        py::arg("x"), py::arg("y"), py::arg("exact") = false);

    m.def(
        "g_mean",
        [](std::size_t tp, std::size_t fp, std::size_t tn, std::size_t fn) { return g_mean(ConfusionMatrix{tp, fp, tn, fn}); },
        py::arg("tp"), py::arg("fp"), py::arg("tn"), py::arg("fn"));

    m.def(
        "rank_test",
        [](const std::vector<std::vector<std::optional<double>>>& scores, std::optional<std::vector<std::string>> models,
           bool allow_missing, double alpha) {
            if (scores.empty()) throw Error(ErrorCode::InsufficientData, "score table is empty");
            ScoreTable t;
            t.scores = scores;
            if (models) {
                t.models = *models;
            } else {
                for (std::size_t j = 0; j < scores.front().size(); ++j) t.models.push_back("model" + std::to_string(j));
            }
            for (std::size_t b = 0; b < scores.size(); ++b) t.blocks.push_back("block" + std::to_string(b));
            auto r = friedman_test(t, allow_missing, alpha);
            auto j = to_json(r);
            j["cd_diagram"] = cd_diagram(r);
            return to_py(j);
        },
        py::arg("scores"), py::arg("models") = py::none(), py::arg("allow_missing") = true, py::arg("alpha") = 0.05);
    m.def("nemenyi_cd", &nemenyi_cd, py::arg("k"), py::arg("n_blocks"), py::arg("alpha") = 0.05);

    m.def("planted_line_spec", [](std::uint64_t seed) { return to_py(to_json(planted_line_spec(seed))); },
          py::arg("seed") = 42);
    m.def("planted_boundary_spec", [](std::uint64_t seed) { return to_py(to_json(planted_boundary_spec(seed))); },
          py::arg("seed") = 42);
    m.def(
        "generate_synthetic", [](const py::object& spec) { return generate_synthetic(synthetic_spec_from_json(from_py(spec))); },
        py::arg("spec"));

    m.def(
        "run_pipeline",
        [](const Corpus& corpus, const py::object& config, std::optional<std::filesystem::path> out_dir) {
            RunConfig cfg = config.is_none() ? RunConfig{} : run_config_from_json(from_py(config));
            validate(cfg);
            ReportBundle b;
            {
                py::gil_scoped_release release;
                b = run_pipeline(cfg, corpus);
            }
            if (out_dir) write_bundle(b, *out_dir);
            py::dict files;
            for (const auto& f : b.files) files[py::str(f.name)] = f.content;
            py::list errors;
            for (const auto& e : b.errors) {
                py::dict d;
                d["stage"] = e.stage;
                d["code"] = std::string(to_string(e.code));
                d["message"] = e.message;
                errors.append(d);
            }
            py::list selected;
            for (const auto& id : b.selected) selected.append(id.name);
            py::dict out;
            out["files"] = files;
            out["errors"] = errors;
            out["warnings"] = b.warnings;
            out["selected"] = selected;
            return out;
        },
        py::arg("corpus"), py::arg("config") = py::none(), py::arg("out_dir") = py::none());
}
