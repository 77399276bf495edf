#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "livinglab/ingest.hpp"
#include "livinglab/interleave.hpp"
#include "livinglab/metrics.hpp"
#include "livinglab/report.hpp"
#include "livinglab/stats.hpp"

namespace py = pybind11;
using namespace livinglab;

namespace {

WilcoxonMethod method_from(const std::string& name) {
    if (name == "auto") return WilcoxonMethod::Auto;
    if (name == "exact") return WilcoxonMethod::Exact;
    if (name == "normal") return WilcoxonMethod::Normal;
    throw py::value_error("method must be 'auto', 'exact' or 'normal'");
}

py::dict run_to_dict(const RunFile& run) {
    py::dict entries;
    for (const auto& [qid, list] : run.entries) {
        py::list rows;
        for (const auto& e : list) rows.append(py::make_tuple(e.doc_id, e.rank, e.score));
        entries[py::str(qid)] = rows;
    }
    py::dict out;
    out["tag"] = run.tag;
    out["entries"] = entries;
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Living-lab evaluation core";

    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const ParseError& e) {
            PyErr_SetString(PyExc_ValueError, e.what());
        }
    });

    m.def("outcome", &outcome, py::arg("wins"), py::arg("losses"));
    m.def("ctr", &ctr, py::arg("clicks"), py::arg("impressions"));
    m.def(
        "reward",
        [](const ClickCounts& counts, std::optional<std::map<std::string, double>> weights) {
            auto w = RewardWeights::defaults();
            if (weights) w.weights = *weights;
            return reward(counts, w);
        },
        py::arg("counts"), py::arg("weights") = py::none());
    m.def("nreward", &nreward, py::arg("reward_exp"), py::arg("reward_base"));
    m.def("default_weights", [] { return RewardWeights::defaults().weights; });

    m.def(
        "wilcoxon",
        [](const std::vector<std::pair<double, double>>& pairs, const std::string& method) {
            const auto r = wilcoxon_signed_rank(pairs, method_from(method));
            py::dict out;
            out["statistic"] = r.statistic;
            out["w_plus"] = r.w_plus;
            out["p_value"] = r.p_value;
            out["method"] = std::string(to_string(r.method));
            out["n"] = r.n_effective;
            return out;
        },
        py::arg("pairs"), py::arg("method") = "auto");
    m.def(
        "spearman",
        [](const std::vector<double>& x, const std::vector<double>& y) {
            const auto r = spearman(x, y);
            return py::make_tuple(r.rho, r.p_value);
        },
        py::arg("x"), py::arg("y"));

    m.def(
        "team_draft_interleave",
        [](const std::vector<std::string>& exp, const std::vector<std::string>& base, std::size_t length,
           std::uint64_t seed) {
            auto coin = CoinSource::seeded(seed);
            const auto list = team_draft_interleave(exp, base, length, coin);
            std::vector<std::pair<std::string, std::string>> out;
            for (const auto& e : list.entries) out.emplace_back(e.doc_id, std::string(to_string(e.team)));
            return out;
        },
        py::arg("exp"), py::arg("base"), py::arg("length"), py::arg("seed"),
        "Drafted list as (doc_id, team) pairs.");
    m.def(
        "judge", [](int exp, int base) { return std::string(to_string(judge(exp, base))); }, py::arg("clicks_exp"),
        py::arg("clicks_base"));

    m.def(
        "parse_run", [](const std::string& text) {
            std::istringstream in(text);
            return run_to_dict(parse_run(in));
        },
        py::arg("text"));
    m.def(
        "read_run", [](const std::filesystem::path& path) { return run_to_dict(parse_run_file(path)); },
        py::arg("path"));

    m.def(
        "evaluate",
        [](const std::filesystem::path& log, const std::filesystem::path& out_dir) {
            const auto result = evaluate_log(log, RewardWeights::defaults(), out_dir);
            std::vector<std::string> files;
            for (const auto& f : result.files) files.push_back(f.filename().string());
            return files;
        },
        py::arg("feedback_log"), py::arg("out_dir"), "Writes the round reports; returns the file names.");
}
