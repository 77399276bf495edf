// livinglab: gateway, run validation, simulation and round evaluation.

#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "livinglab/baseline.hpp"
#include "livinglab/config.hpp"
#include "livinglab/gateway.hpp"
#include "livinglab/ingest.hpp"
#include "livinglab/log.hpp"
#include "livinglab/metrics.hpp"
#include "livinglab/report.hpp"
#include "livinglab/simulator.hpp"
#include "livinglab/store.hpp"

namespace fs = std::filesystem;
using namespace livinglab;

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

// Every failure ends in exactly one line on stderr: "error: <kind>: <detail>".
int fail(const std::string& kind, const std::string& detail) {
    std::cerr << "error: " << kind << ": " << detail << "\n";
    return 1;
}

std::vector<std::string> read_lines(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DomainError("cannot open " + path.string());
    std::vector<std::string> out;
    for (std::string line; std::getline(in, line);) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) out.push_back(line);
    }
    return out;
}

/// Popularity-ranked request keys: an explicit list, else head queries of a
/// pre-computed ranking system, else the seed ids of the recommendation
/// baseline's publications.
std::vector<std::string> default_vocabulary(const GatewayConfig& cfg, Task task, const std::string& explicit_path) {
    if (!explicit_path.empty()) return read_lines(explicit_path);
    for (const auto& sc : cfg.systems) {
        if (sc.descriptor.task != task) continue;
        if (task == Task::Ranking && !sc.head_queries.empty()) {
            auto hq = parse_head_queries(sc.head_queries);
            std::stable_sort(hq.begin(), hq.end(), [](const HeadQuery& a, const HeadQuery& b) { return a.freq > b.freq; });
            std::vector<std::string> out;
            for (const auto& q : hq) out.push_back(q.qstr);
            return out;
        }
        if (task == Task::Recommendation && !sc.publications.empty()) {
            std::vector<std::string> out;
            for (const auto& d : parse_documents(sc.publications, sc.schema)) out.push_back(d.doc_id);
            return out;
        }
    }
    throw DomainError("no query vocabulary for task " + std::string(to_string(task)) + "; pass --queries");
}

SystemPtr find_system(const std::vector<SystemPtr>& systems, const std::string& name, Task task) {
    for (const auto& s : systems) {
        const auto& d = s->descriptor();
        if (name.empty() ? (d.task == task && d.is_baseline) : d.name == name) return s;
    }
    throw DomainError(name.empty() ? "no baseline for task " + std::string(to_string(task)) : "unknown system '" + name + "'");
}

int cmd_serve(const std::string& config_path, const std::string& listen_override) {
    GatewayConfig cfg;
    try {
        cfg = load_config(config_path);
    } catch (const std::exception& e) {
        return fail("config", e.what());
    }
    if (!listen_override.empty()) {
        const auto colon = listen_override.rfind(':');
        if (colon == std::string::npos) return fail("usage", "--listen must be host:port");
        cfg.listen_host = listen_override.substr(0, colon);
        cfg.listen_port = std::stoi(listen_override.substr(colon + 1));
    }
    std::shared_ptr<Gateway> gateway;
    try {
        auto store = FeedbackStore::open(cfg.feedback_log, cfg.options.site);
        gateway = std::make_shared<Gateway>(cfg.options, build_systems(cfg), store);
    } catch (const std::exception& e) {
        return fail("startup", e.what());
    }
    std::unique_ptr<FeedbackSink> sink;
    if (cfg.sink) sink = make_sink(*cfg.sink);
    HttpGateway http(gateway, std::move(sink), cfg.flush_interval);
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    int port = 0;
    try {
        port = http.start(cfg.listen_host, cfg.listen_port);
    } catch (const std::exception& e) {
        return fail("startup", e.what());
    }
    std::cout << "listening on " << cfg.listen_host << ":" << port << std::endl;
    if (!gateway->prepare()) log(LogLevel::Warning, "baseline not ready; health reports 503");
    while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(200));
    http.stop();
    std::cout << "stopped" << std::endl;
    return 0;
}

int cmd_validate_run(const std::string& run_path, const std::string& head_queries, const std::string& corpus,
                     const std::string& schema) {
    std::optional<std::set<std::string>> qids;
    std::optional<std::set<std::string>> docs;
    try {
        if (!head_queries.empty()) {
            qids.emplace();
            for (const auto& q : parse_head_queries(head_queries)) qids->insert(std::to_string(q.qid));
        }
        if (!corpus.empty()) {
            docs.emplace();
            for (const auto& d : parse_documents(corpus, parse_schema(schema))) docs->insert(d.doc_id);
        }
    } catch (const std::exception& e) {
        return fail("input", e.what());
    }
    ValidationReport report;
    try {
        report = validate_run_file(run_path, qids, docs);
    } catch (const std::exception& e) {
        return fail("io", e.what());
    }
    for (const auto& w : report.warnings) std::cout << run_path << ":" << w.line << ": warning: " << w.message << "\n";
    for (const auto& e : report.line_errors) std::cout << run_path << ":" << e.line << ": error: " << e.message << "\n";
    if (!report.ok) {
        return fail("validation", run_path + ": " + std::to_string(report.line_errors.size()) + " error(s)");
    }
    std::cout << "ok\n";
    return 0;
}

struct SimulateArgs {
    std::string config;
    std::string sim;
    std::string gateway_url;
    std::string queries;
    std::string oracle;
    std::string out;
    std::string task = "ranking";
    std::uint64_t seed = 1;
    std::size_t sessions = 1000;
    bool overwrite = false;
};

int cmd_simulate(const SimulateArgs& a, bool seed_given) {
    try {
        const auto cfg = load_config(a.config);
        TrafficConfig traffic;
        ClickModel model = ClickModel::defaults();
        if (!a.sim.empty()) {
            std::ifstream in(a.sim);
            if (!in) throw DomainError("cannot open " + a.sim);
            const auto doc = Json::parse(in);
            if (auto t = doc.find("traffic"); t != doc.end()) traffic = TrafficConfig::from_json(*t);
            if (auto m = doc.find("click_model"); m != doc.end()) model = ClickModel::from_json(*m);
        }
        traffic.task = parse_task(a.task);
        traffic.sessions = a.sessions;
        if (seed_given || a.sim.empty()) traffic.seed = a.seed;
        std::cerr << "seed=" << traffic.seed << "\n";

        auto systems = build_systems(cfg);
        const auto oracle = oracle_from_system(find_system(systems, a.oracle, traffic.task), traffic.task,
                                               traffic.relevant_per_query);
        const auto vocabulary = default_vocabulary(cfg, traffic.task, a.queries);

        SimulationSummary summary;
        if (!a.gateway_url.empty()) {
            HttpClient client(a.gateway_url);
            summary = run_simulation(client, traffic, model, vocabulary, oracle);
        } else {
            if (a.out.empty()) throw DomainError("--out is required without --gateway");
            if (fs::exists(a.out) && !a.overwrite) throw DomainError(a.out + " exists; pass --overwrite to replace it");
            fs::remove(a.out);
            fs::remove(a.out + ".forwarded");
            auto store = FeedbackStore::open(a.out, cfg.options.site);
            Gateway gateway(cfg.options, systems, store);
            gateway.prepare();
            InProcessClient client(gateway);
            summary = run_simulation(client, traffic, model, vocabulary, oracle);
        }
        std::cout << summary.to_json().dump(2) << "\n";
        if (summary.aborted) return fail("gateway", summary.error);
        return 0;
    } catch (const std::exception& e) {
        return fail("simulate", e.what());
    }
}

int cmd_evaluate(const std::string& feedback, const std::string& weights_path, const std::string& out) {
    RewardWeights weights = RewardWeights::defaults();
    try {
        if (!weights_path.empty()) weights = RewardWeights::load(weights_path);
    } catch (const std::exception& e) {
        return fail("weights", e.what());
    }
    try {
        const auto result = evaluate_log(feedback, weights, out);
        for (const auto& f : result.files) std::cout << f.string() << "\n";
        return 0;
    } catch (const ParseError& e) {
        return fail("parse", e.what());
    } catch (const std::exception& e) {
        return fail("evaluate", e.what());
    }
}

int cmd_make_candidates(const std::string& pubs, const std::string& datasets, const std::string& schema,
                        const std::vector<std::string>& fields, std::size_t top_k, const std::string& out) {
    try {
        const auto s = parse_schema(schema);
        const auto sources = parse_documents(pubs, s);
        const auto targets = parse_documents(datasets, s);
        if (sources.empty() || targets.empty()) throw DomainError("empty corpus");
        if (top_k == 0) throw DomainError("--top-k must be positive");
        const auto lists = tfidf_candidates(sources, targets, fields, top_k);
        std::ofstream file(out, std::ios::binary | std::ios::trunc);
        if (!file) throw DomainError("cannot write " + out);
        write_candidates(file, lists, Task::Recommendation);
        std::cout << lists.size() << " seed(s) written to " << out << "\n";
        return 0;
    } catch (const std::exception& e) {
        return fail("make-candidates", e.what());
    }
}

int cmd_sanity_check(const std::string& config, const std::string& system, const std::string& queries,
                     std::size_t limit) {
    try {
        const auto cfg = load_config(config);
        const auto systems = build_systems(cfg);
        const auto adapter = find_system(systems, system, Task::Ranking);
        const Task task = adapter->descriptor().task;
        if (!adapter->prepare()) throw DomainError("system '" + system + "' is not ready");
        auto vocab = default_vocabulary(cfg, task, queries);
        if (vocab.size() > limit) vocab.resize(limit);
        std::vector<SystemRequest> probes;
        const int rpp = task == Task::Ranking ? cfg.options.rpp_ranking : cfg.options.rpp_recommendation;
        for (const auto& q : vocab) probes.push_back({task, q, 0, rpp});
        const auto report = sanity_check(*adapter, probes);
        for (const auto& p : report.probes) {
            std::cout << (p.passed ? "PASS " : "FAIL ") << p.probe << (p.responded ? "" : " (no response)")
                      << (p.message.empty() ? "" : ": " + p.message) << "\n";
        }
        for (const auto& w : report.warnings) std::cout << "warning: " << w << "\n";
        if (!report.passed) return fail("sanity-check", "system '" + system + "' violated the contract");
        return 0;
    } catch (const std::exception& e) {
        return fail("sanity-check", e.what());
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Living-lab gateway, simulator and round evaluation"};
    app.require_subcommand(1);
    bool verbose = false;
    app.add_flag("-v,--verbose", verbose, "Log informational messages");

    std::string config;
    std::string listen;
    auto* serve = app.add_subcommand("serve", "Run the gateway");
    serve->add_option("--config", config, "Gateway config file")->required()->check(CLI::ExistingFile);
    serve->add_option("--listen", listen, "host:port, overriding the config");

    std::string run_path, head_queries, corpus, schema = "livivo";
    auto* validate = app.add_subcommand("validate-run", "Check a run file");
    validate->add_option("run", run_path, "Run file")->required();
    validate->add_option("--head-queries", head_queries, "Head-query JSONL; unknown qids are reported");
    validate->add_option("--corpus", corpus, "Corpus JSONL; unknown doc ids are reported");
    validate->add_option("--schema", schema, "Corpus schema (livivo | gesis)");

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Drive synthetic traffic through a gateway");
    simulate->add_option("--config", sim.config, "Gateway config file")->required()->check(CLI::ExistingFile);
    simulate->add_option("--sim", sim.sim, "Traffic and click-model JSON");
    simulate->add_option("--gateway", sim.gateway_url, "URL of a running gateway (default: in-process)");
    simulate->add_option("--queries", sim.queries, "Query or item ids, one per line, most popular first");
    simulate->add_option("--oracle", sim.oracle, "System whose top results count as relevant (default: baseline)");
    simulate->add_option("--out", sim.out, "Feedback log to write (in-process mode)");
    simulate->add_option("--task", sim.task, "ranking | recommendation")->capture_default_str();
    auto* seed_opt = simulate->add_option("--seed", sim.seed, "Random seed")->capture_default_str();
    simulate->add_option("--sessions", sim.sessions, "Number of sessions")->capture_default_str();
    simulate->add_flag("--overwrite", sim.overwrite, "Replace an existing --out log");

    std::string feedback, weights, out_dir;
    auto* evaluate = app.add_subcommand("evaluate", "Compute round reports from a feedback log");
    evaluate->add_option("--feedback", feedback, "Feedback log")->required()->check(CLI::ExistingFile);
    evaluate->add_option("--weights", weights, "SERP element weights JSON");
    evaluate->add_option("--out", out_dir, "Report directory")->required();

    std::string pubs, datasets, cand_out, cand_schema = "gesis";
    std::vector<std::string> fields{"title", "abstract"};
    std::size_t top_k = 10;
    auto* make = app.add_subcommand("make-candidates", "TF-IDF recommendation candidates");
    make->add_option("--publications", pubs, "Publication corpus")->required()->check(CLI::ExistingFile);
    make->add_option("--datasets", datasets, "Dataset corpus")->required()->check(CLI::ExistingFile);
    make->add_option("--schema", cand_schema, "Corpus schema")->capture_default_str();
    make->add_option("--fields", fields, "Fields to compare")->delimiter(',')->capture_default_str();
    make->add_option("--top-k", top_k, "Candidates per publication")->capture_default_str();
    make->add_option("--out", cand_out, "Candidate file")->required();

    std::string sanity_system, sanity_queries;
    std::size_t sanity_limit = 20;
    auto* sanity = app.add_subcommand("sanity-check", "Probe a registered system against the contract");
    sanity->add_option("--config", config, "Gateway config file")->required()->check(CLI::ExistingFile);
    sanity->add_option("--system", sanity_system, "System name")->required();
    sanity->add_option("--queries", sanity_queries, "Probe queries, one per line");
    sanity->add_option("--limit", sanity_limit, "Maximum probes")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: usage: " << e.what() << "\n";
        return 2;
    }
    set_log_level(verbose ? LogLevel::Info : LogLevel::Warning);

    if (*serve) return cmd_serve(config, listen);
    if (*validate) return cmd_validate_run(run_path, head_queries, corpus, schema);
    if (*simulate) return cmd_simulate(sim, seed_opt->count() > 0);
    if (*evaluate) return cmd_evaluate(feedback, weights, out_dir);
    if (*make) return cmd_make_candidates(pubs, datasets, cand_schema, fields, top_k, cand_out);
    if (*sanity) return cmd_sanity_check(config, sanity_system, sanity_queries, sanity_limit);
    std::cerr << "error: usage: no command given (see --help)\n";
    return 2;
}
