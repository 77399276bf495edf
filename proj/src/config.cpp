#include "livinglab/config.hpp"

#include <fstream>
#include <set>

#include "livinglab/log.hpp"

namespace livinglab {

namespace {

const Json* find(const Json& obj, const char* key) {
    auto it = obj.find(key);
    return it == obj.end() || it->is_null() ? nullptr : &*it;
}

std::string get_string(const Json& obj, const char* key, const std::string& where, std::optional<std::string> fallback = {}) {
    const Json* v = find(obj, key);
    if (!v) {
        if (fallback) return *fallback;
        throw ConfigError(where + ": missing '" + key + "'");
    }
    if (!v->is_string()) throw ConfigError(where + ": '" + key + "' must be a string");
    return v->get<std::string>();
}

std::int64_t get_int(const Json& obj, const char* key, const std::string& where, std::int64_t fallback) {
    const Json* v = find(obj, key);
    if (!v) return fallback;
    if (!v->is_number_integer()) throw ConfigError(where + ": '" + key + "' must be an integer");
    return v->get<std::int64_t>();
}

double get_double(const Json& obj, const char* key, const std::string& where, double fallback) {
    const Json* v = find(obj, key);
    if (!v) return fallback;
    if (!v->is_number()) throw ConfigError(where + ": '" + key + "' must be a number");
    return v->get<double>();
}

std::filesystem::path existing_file(const std::filesystem::path& base, const std::string& value, const std::string& where) {
    std::filesystem::path p(value);
    if (p.is_relative()) p = base / p;
    p = p.lexically_normal();
    if (!std::filesystem::is_regular_file(p)) throw ConfigError(where + ": missing file " + p.string());
    return p;
}

template <typename F>
auto wrap(const std::string& where, F&& f) {
    try {
        return f();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(where + ": " + e.what());
    }
}

SystemConfig parse_system(const Json& item, std::size_t index, const std::filesystem::path& base) {
    std::string where = "systems[" + std::to_string(index) + "]";
    if (!item.is_object()) throw ConfigError(where + ": must be an object");
    SystemConfig sc;
    auto& d = sc.descriptor;
    d.name = get_string(item, "name", where);
    where += " (" + d.name + ")";
    d.kind = wrap(where, [&] { return parse_system_kind(get_string(item, "kind", where)); });
    d.task = wrap(where, [&] { return parse_task(get_string(item, "task", where)); });
    if (const Json* b = find(item, "baseline")) {
        if (!b->is_boolean()) throw ConfigError(where + ": 'baseline' must be a boolean");
        d.is_baseline = b->get<bool>();
    }
    d.source = get_string(item, "source", where);

    if (d.kind == SystemKind::LiveRemote) {
        sc.url = d.source;
        wrap(where, [&] { RemoteContract{sc.url}.validate(); return 0; });
        sc.timeout = std::chrono::milliseconds(get_int(item, "timeout_ms", where, 2000));
        if (sc.timeout.count() <= 0) throw ConfigError(where + ": 'timeout_ms' must be positive");
    } else {
        sc.source_path = existing_file(base, d.source, where);
    }
    if (d.kind == SystemKind::BuiltinBaseline) {
        sc.schema = wrap(where, [&] { return parse_schema(get_string(item, "schema", where, std::string("livivo"))); });
        if (const Json* f = find(item, "fields")) {
            if (!f->is_array()) throw ConfigError(where + ": 'fields' must be an array of strings");
            for (const auto& name : *f) {
                if (!name.is_string()) throw ConfigError(where + ": 'fields' must be an array of strings");
                sc.fields.push_back(name.get<std::string>());
            }
        }
        if (const Json* p = find(item, "bm25")) {
            sc.bm25.k1 = get_double(*p, "k1", where, sc.bm25.k1);
            sc.bm25.b = get_double(*p, "b", where, sc.bm25.b);
            wrap(where, [&] { sc.bm25.validate(); return 0; });
        }
        if (d.task == Task::Recommendation) {
            sc.publications = existing_file(base, get_string(item, "publications", where), where);
        }
    }
    if (d.kind == SystemKind::Precomputed && d.task == Task::Ranking) {
        sc.head_queries = existing_file(base, get_string(item, "head_queries", where), where);
    }
    return sc;
}

}  // namespace

GatewayConfig parse_config(const Json& doc, const std::filesystem::path& base_dir) {
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    GatewayConfig cfg;
    cfg.options.site = get_string(doc, "site", "config", std::string("site"));

    const std::string listen = get_string(doc, "listen", "config", std::string("127.0.0.1:8080"));
    const auto colon = listen.rfind(':');
    if (colon == std::string::npos) throw ConfigError("config: 'listen' must be host:port");
    cfg.listen_host = listen.substr(0, colon);
    try {
        cfg.listen_port = std::stoi(listen.substr(colon + 1));
    } catch (const std::exception&) {
        throw ConfigError("config: 'listen' has an invalid port");
    }
    if (cfg.listen_port < 0 || cfg.listen_port > 65535) throw ConfigError("config: 'listen' has an invalid port");

    std::filesystem::path log_path(get_string(doc, "feedback_log", "config", std::string("feedback.jsonl")));
    cfg.feedback_log = log_path.is_relative() ? (base_dir / log_path).lexically_normal() : log_path;
    if (find(doc, "sink")) {
        std::string sink = get_string(doc, "sink", "config");
        if (sink.rfind("http://", 0) != 0 && sink.rfind("https://", 0) != 0 && std::filesystem::path(sink).is_relative()) {
            sink = (base_dir / sink).lexically_normal().string();
        }
        cfg.sink = sink;
    }
    cfg.flush_interval = std::chrono::seconds(get_int(doc, "flush_interval_s", "config", 60));
    if (cfg.flush_interval.count() <= 0) throw ConfigError("config: 'flush_interval_s' must be positive");
    cfg.options.session_timeout = std::chrono::seconds(get_int(doc, "session_timeout_s", "config", 1800));
    if (cfg.options.session_timeout.count() <= 0) throw ConfigError("config: 'session_timeout_s' must be positive");
    cfg.options.rotation_seed = static_cast<std::uint64_t>(get_int(doc, "rotation_seed", "config", 1));
    if (const Json* rpp = find(doc, "rpp")) {
        cfg.options.rpp_ranking = static_cast<int>(get_int(*rpp, "ranking", "config.rpp", 10));
        cfg.options.rpp_recommendation = static_cast<int>(get_int(*rpp, "recommendation", "config.rpp", 6));
        if (cfg.options.rpp_ranking < 1 || cfg.options.rpp_recommendation < 1) {
            throw ConfigError("config.rpp: values must be positive");
        }
    }
    if (const Json* w = find(doc, "weights")) {
        if (w->is_string()) {
            const auto path = existing_file(base_dir, w->get<std::string>(), "config.weights");
            cfg.weights = wrap("config.weights", [&] { return RewardWeights::load(path); });
        } else {
            cfg.weights = wrap("config.weights", [&] { return RewardWeights::from_json(*w); });
        }
    }

    const Json* systems = find(doc, "systems");
    if (!systems || !systems->is_array()) throw ConfigError("config: 'systems' must be an array");
    std::vector<SystemDescriptor> descriptors;
    for (std::size_t i = 0; i < systems->size(); ++i) {
        cfg.systems.push_back(parse_system((*systems)[i], i, base_dir));
        const auto& d = cfg.systems.back().descriptor;
        if (d.is_baseline && d.kind != SystemKind::BuiltinBaseline && d.kind != SystemKind::LiveRemote) {
            throw ConfigError("systems[" + std::to_string(i) + "] (" + d.name + "): a baseline must be builtin or live");
        }
        if (!d.is_baseline && d.kind == SystemKind::BuiltinBaseline) {
            log(LogLevel::Info, "builtin system '" + d.name + "' registered as experimental");
        }
        descriptors.push_back(d);
    }
    wrap("config.systems", [&] { validate_registry(descriptors); return 0; });
    return cfg;
}

GatewayConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    Json doc;
    try {
        doc = Json::parse(in);
    } catch (const Json::exception& e) {
        throw ConfigError("config file " + path.string() + ": " + e.what());
    }
    return parse_config(doc, path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

namespace {

std::vector<std::string> all_fields(const std::vector<DocumentRecord>& docs) {
    std::set<std::string> names;
    for (const auto& d : docs) {
        for (const auto& [name, _] : d.fields) names.insert(name);
    }
    return {names.begin(), names.end()};
}

SystemPtr build_one(const SystemConfig& sc) {
    const auto& d = sc.descriptor;
    switch (d.kind) {
        case SystemKind::LiveRemote:
            return std::make_shared<RemoteSystem>(d, RemoteContract{sc.url}, sc.timeout);
        case SystemKind::Precomputed: {
            auto run = parse_run_file(sc.source_path);
            if (d.task == Task::Ranking) {
                return PrecomputedSystem::for_ranking(d, std::move(run), parse_head_queries(sc.head_queries));
            }
            return PrecomputedSystem::for_recommendation(d, std::move(run));
        }
        case SystemKind::BuiltinBaseline: {
            const auto docs = parse_documents(sc.source_path, sc.schema);
            const auto fields = sc.fields.empty() ? all_fields(docs) : sc.fields;
            auto index = std::make_shared<const InvertedIndex>(build_index(docs, fields));
            if (d.task == Task::Ranking) return std::make_shared<BaselineRankingSystem>(d, index, sc.bm25);
            return std::make_shared<BaselineRecommendationSystem>(d, index, parse_documents(sc.publications, sc.schema),
                                                                  sc.bm25);
        }
    }
    throw ConfigError("unsupported system kind");
}

}  // namespace

std::vector<SystemPtr> build_systems(const GatewayConfig& config) {
    std::vector<SystemPtr> out;
    for (const auto& sc : config.systems) {
        out.push_back(wrap("system '" + sc.descriptor.name + "'", [&] { return build_one(sc); }));
    }
    return out;
}

}  // namespace livinglab
