#include "livinglab/report.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "livinglab/ingest.hpp"

namespace livinglab {

std::string fixed(double value, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
    return buf;
}

namespace {

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::string csv_row(const std::vector<std::string>& cells) {
    std::string line;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) line.push_back(',');
        line += csv_field(cells[i]);
    }
    line.push_back('\n');
    return line;
}

std::string opt(const std::optional<double>& v, int decimals) { return v ? fixed(*v, decimals) : std::string(); }

Json opt_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

Json test_json(const std::optional<TestResult>& t) {
    if (!t) return nullptr;
    return {{"statistic", t->statistic}, {"w_plus", t->w_plus}, {"p_value", t->p_value},
            {"method", to_string(t->method)}, {"n", t->n_effective}};
}

void write_file(const std::filesystem::path& path, const std::string& content, std::vector<std::filesystem::path>& files) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DomainError("cannot write " + path.string());
    out << content;
    if (!out) throw DomainError("write failed for " + path.string());
    files.push_back(path);
}

const Significance* significance_of(const RoundReport& r, Task task, const std::string& system) {
    for (const auto& s : r.significance) {
        if (s.task == task && s.system == system) return &s;
    }
    return nullptr;
}

}  // namespace

EvaluationResult evaluate_snapshot(const StoreSnapshot& snapshot, const RewardWeights& weights,
                                   const std::filesystem::path& out_dir) {
    weights.validate();
    EvaluationResult result;
    result.round = aggregate_round(snapshot, weights);
    result.queries = query_stats(snapshot);
    result.distributions = distributions(snapshot, weights);
    const auto& round = result.round;
    std::filesystem::create_directories(out_dir);

    // round_report.csv
    std::string csv = csv_row({"Task", "System", "Baseline", "Sessions", "Impressions", "Clicks", "CTR", "Win", "Loss",
                               "Tie", "Outcome", "p_value"});
    for (const auto& s : round.systems) {
        std::string p;
        if (!s.is_baseline) {
            if (const auto* sig = significance_of(round, s.task, s.system); sig && sig->test) {
                p = format_double(sig->test->p_value);
            }
        }
        csv += csv_row({std::string(to_string(s.task)), s.system, s.is_baseline ? "true" : "false",
                        std::to_string(s.sessions), std::to_string(s.impressions), std::to_string(s.clicks),
                        fixed(s.ctr, 4), std::to_string(s.wins), std::to_string(s.losses), std::to_string(s.ties),
                        opt(s.outcome, 2), p});
    }
    write_file(out_dir / "round_report.csv", csv, result.files);

    // reward_report.csv: one row per side of every pair.
    std::set<std::string> elements;
    for (const auto& [name, _] : weights.weights) elements.insert(name);
    for (const auto& r : round.rewards) {
        for (const auto& [name, _] : r.exp_clicks) elements.insert(name);
        for (const auto& [name, _] : r.base_clicks) elements.insert(name);
    }
    std::vector<std::string> header{"Task", "Pair", "System", "Team"};
    header.insert(header.end(), elements.begin(), elements.end());
    for (const char* h : {"Total Clicks", "Reward", "nReward"}) header.emplace_back(h);
    std::string rewards = csv_row(header);
    for (const auto& r : round.rewards) {
        const std::string pair = r.exp_system + " vs " + r.base_system;
        auto row = [&](const std::string& system, const char* team, const ClickCounts& counts, double rew,
                       const std::optional<double>& nr) {
            std::vector<std::string> cells{std::string(to_string(r.task)), pair, system, team};
            std::int64_t total = 0;
            for (const auto& e : elements) {
                auto it = counts.find(e);
                const std::int64_t n = it == counts.end() ? 0 : it->second;
                total += n;
                cells.push_back(std::to_string(n));
            }
            cells.push_back(std::to_string(total));
            cells.push_back(format_double(rew));
            cells.push_back(opt(nr, 4));
            rewards += csv_row(cells);
        };
        row(r.exp_system, "EXP", r.exp_clicks, r.reward_exp, r.nreward_exp);
        row(r.base_system, "BASE", r.base_clicks, r.reward_base, r.nreward_base);
    }
    write_file(out_dir / "reward_report.csv", rewards, result.files);

    // Distribution tables.
    std::string ipq = csv_row({"rank", "query", "impressions"});
    for (std::size_t i = 0; i < result.distributions.impressions_per_query.size(); ++i) {
        const auto& q = result.distributions.impressions_per_query[i];
        ipq += csv_row({std::to_string(i + 1), q.query, std::to_string(q.count)});
    }
    write_file(out_dir / "impressions_per_query.csv", ipq, result.files);

    std::string cbr = csv_row({"rank", "shown", "clicked", "ctr"});
    for (const auto& r : result.distributions.ctr_by_rank) {
        cbr += csv_row({std::to_string(r.rank), std::to_string(r.shown), std::to_string(r.clicked), fixed(r.ctr, 4)});
    }
    write_file(out_dir / "ctr_by_rank.csv", cbr, result.files);

    std::string cbe = csv_row({"element", "clicks"});
    for (const auto& [e, n] : result.distributions.clicks_by_element) cbe += csv_row({e, std::to_string(n)});
    write_file(out_dir / "clicks_by_element.csv", cbe, result.files);

    // JSON documents.
    const auto& qs = result.queries;
    Json qjson{{"unique_queries", qs.unique_queries},
               {"avg_query_length", qs.avg_query_length},
               {"avg_queries_per_session", qs.queries_per_session},
               {"avg_clicks_per_query", qs.clicks_per_query}};
    write_file(out_dir / "query_stats.json", qjson.dump(2) + "\n", result.files);

    Json doc;
    doc["weights"] = weights.to_json();
    doc["significance_pairing"] = kSignificancePairing;
    doc["sites"] = Json::array();
    for (const auto& s : round.sites) {
        doc["sites"].push_back({{"task", to_string(s.task)}, {"sessions", s.sessions}, {"impressions", s.impressions},
                                {"clicks", s.clicks}, {"ctr", s.ctr}});
    }
    doc["systems"] = Json::array();
    for (const auto& s : round.systems) {
        doc["systems"].push_back({{"task", to_string(s.task)}, {"system", s.system}, {"baseline", s.is_baseline},
                                  {"sessions", s.sessions}, {"impressions", s.impressions}, {"clicks", s.clicks},
                                  {"ctr", s.ctr}, {"win", s.wins}, {"loss", s.losses}, {"tie", s.ties},
                                  {"outcome", opt_json(s.outcome)}});
    }
    doc["rewards"] = Json::array();
    for (const auto& r : round.rewards) {
        doc["rewards"].push_back({{"task", to_string(r.task)}, {"exp", r.exp_system}, {"base", r.base_system},
                                  {"exp_clicks", r.exp_clicks}, {"base_clicks", r.base_clicks},
                                  {"reward_exp", r.reward_exp}, {"reward_base", r.reward_base},
                                  {"nreward_exp", opt_json(r.nreward_exp)}, {"nreward_base", opt_json(r.nreward_base)}});
    }
    doc["significance"] = Json::array();
    for (const auto& s : round.significance) {
        Json item{{"task", to_string(s.task)}, {"system", s.system}, {"test", test_json(s.test)}};
        if (!s.note.empty()) item["note"] = s.note;
        doc["significance"].push_back(std::move(item));
    }
    doc["rank_correlation"] = Json::array();
    for (const auto& c : round.correlations) {
        Json item{{"task", to_string(c.task)}};
        if (c.result) {
            item["rho"] = c.result->rho;
            item["p_value"] = c.result->p_value;
            item["n"] = c.result->n;
        } else {
            item["note"] = c.note;
        }
        doc["rank_correlation"].push_back(std::move(item));
    }
    doc["query_stats"] = qjson;
    write_file(out_dir / "round_report.json", doc.dump(2) + "\n", result.files);
    return result;
}

EvaluationResult evaluate_log(const std::filesystem::path& feedback_log, const RewardWeights& weights,
                              const std::filesystem::path& out_dir) {
    return evaluate_snapshot(load_snapshot(feedback_log), weights, out_dir);
}

}  // namespace livinglab
