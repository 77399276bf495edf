#include "livinglab/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include <httplib.h>

namespace livinglab {

ClickModel ClickModel::defaults() {
    ClickModel m;
    m.elements = {{"Details", 0.30}, {"Title", 0.24},   {"Bookmark", 0.16}, {"Fulltext", 0.15},
                  {"More Links", 0.06}, {"In Stock", 0.05}, {"Order", 0.04}};
    return m;
}

ClickModel ClickModel::from_json(const Json& doc) {
    if (!doc.is_object()) throw DomainError("click model must be a JSON object");
    ClickModel m = defaults();
    m.gamma = doc.value("gamma", m.gamma);
    m.default_attractiveness = doc.value("default_attractiveness", m.default_attractiveness);
    m.nonrelevant_click = doc.value("nonrelevant_click", m.nonrelevant_click);
    if (auto it = doc.find("examination"); it != doc.end()) m.examination = it->get<std::vector<double>>();
    if (auto it = doc.find("attractiveness"); it != doc.end()) {
        m.attractiveness = it->get<std::map<std::string, double>>();
    }
    if (auto it = doc.find("elements"); it != doc.end()) {
        m.elements.clear();
        for (const auto& [name, p] : it->items()) m.elements.emplace_back(name, p.get<double>());
    }
    m.validate();
    return m;
}

double ClickModel::examine(std::size_t rank) const {
    if (rank == 0) throw DomainError("ranks are 1-based");
    if (!examination.empty()) return rank <= examination.size() ? examination[rank - 1] : 0.0;
    return std::pow(gamma, static_cast<double>(rank - 1));
}

double ClickModel::attract(const std::string& system) const {
    auto it = attractiveness.find(system);
    return it == attractiveness.end() ? default_attractiveness : it->second;
}

void ClickModel::validate() const {
    auto prob = [](double p, const std::string& what) {
        if (!(p >= 0.0 && p <= 1.0)) throw DomainError(what + " must lie in [0, 1]");
    };
    if (examination.empty() && !(gamma > 0.0 && gamma < 1.0)) throw DomainError("gamma must lie in (0, 1)");
    for (double p : examination) prob(p, "examination probability");
    for (const auto& [name, p] : attractiveness) prob(p, "attractiveness of " + name);
    prob(default_attractiveness, "default attractiveness");
    prob(nonrelevant_click, "non-relevant click probability");
    if (elements.empty()) throw DomainError("element distribution is empty");
    double sum = 0.0;
    for (const auto& [name, p] : elements) {
        prob(p, "probability of element " + name);
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw DomainError("element distribution must sum to 1");
}

TrafficConfig TrafficConfig::from_json(const Json& doc) {
    if (!doc.is_object()) throw DomainError("traffic config must be a JSON object");
    TrafficConfig t;
    t.sessions = doc.value("sessions", t.sessions);
    t.queries_per_session = doc.value("queries_per_session", t.queries_per_session);
    t.zipf_exponent = doc.value("zipf_exponent", t.zipf_exponent);
    t.seed = doc.value("seed", t.seed);
    if (auto it = doc.find("task"); it != doc.end()) t.task = parse_task(it->get<std::string>());
    t.relevant_per_query = doc.value("relevant_per_query", t.relevant_per_query);
    if (auto it = doc.find("start_ms"); it != doc.end()) t.start = from_millis(it->get<std::int64_t>());
    t.validate();
    return t;
}

void TrafficConfig::validate() const {
    if (!(zipf_exponent >= 0.0) || !std::isfinite(zipf_exponent)) throw DomainError("zipf exponent must be >= 0");
    if (!(queries_per_session >= 1.0) || !std::isfinite(queries_per_session)) {
        throw DomainError("queries per session must be >= 1");
    }
    if (relevant_per_query == 0) throw DomainError("relevant_per_query must be positive");
}

namespace {

std::vector<double> zipf_weights(std::size_t n, double exponent) {
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = std::pow(static_cast<double>(i + 1), -exponent);
    return w;
}

}  // namespace

ZipfSampler::ZipfSampler(std::vector<std::string> vocabulary, double exponent) : vocabulary_(std::move(vocabulary)) {
    if (vocabulary_.empty()) throw DomainError("query vocabulary is empty");
    if (!(exponent >= 0.0) || !std::isfinite(exponent)) throw DomainError("zipf exponent must be >= 0");
    const auto w = zipf_weights(vocabulary_.size(), exponent);
    dist_ = std::discrete_distribution<std::size_t>(w.begin(), w.end());
}

const std::string& ZipfSampler::operator()(std::mt19937_64& rng) { return vocabulary_[dist_(rng)]; }

std::vector<std::string> sample_queries(const std::vector<std::string>& vocabulary, double exponent, std::size_t n,
                                        std::uint64_t seed) {
    ZipfSampler sampler(vocabulary, exponent);
    std::mt19937_64 rng(seed);
    std::vector<std::string> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(sampler(rng));
    return out;
}

std::vector<ClickEvent> simulate_clicks(const InterleavedList& page, const std::set<std::string>& relevant,
                                        const ClickModel& model, std::mt19937_64& rng, Timestamp page_time) {
    std::vector<double> element_p;
    for (const auto& [_, p] : model.elements) element_p.push_back(p);
    std::discrete_distribution<std::size_t> element(element_p.begin(), element_p.end());
    std::uniform_real_distribution<double> u(0.0, 1.0);

    std::vector<ClickEvent> clicks;
    for (std::size_t i = 0; i < page.entries.size(); ++i) {
        const auto& entry = page.entries[i];
        // Both draws happen for every position so later positions see the
        // same random stream whatever happened earlier.
        const double examined = u(rng);
        const double attracted = u(rng);
        if (examined >= model.examine(i + 1)) continue;
        const double p = relevant.count(entry.doc_id)
                             ? model.attract(entry.team == Team::Exp ? page.exp_system : page.base_system)
                             : model.nonrelevant_click;
        if (attracted >= p) continue;
        clicks.push_back({entry.doc_id, model.elements[element(rng)].first,
                          page_time + std::chrono::seconds(static_cast<long>(i) + 1)});
    }
    return clicks;
}

std::vector<ClickEvent> simulate_clicks(const InterleavedList& page, const std::set<std::string>& relevant,
                                        const ClickModel& model, std::uint64_t seed, Timestamp page_time) {
    std::mt19937_64 rng(seed);
    return simulate_clicks(page, relevant, model, rng, page_time);
}

RelevanceOracle oracle_from_system(SystemPtr hidden, Task task, std::size_t m) {
    if (!hidden) throw DomainError("oracle needs a system");
    if (m == 0) throw DomainError("oracle depth must be positive");
    struct Memo {
        std::mutex mutex;
        std::map<std::string, std::set<std::string>> cache;
    };
    auto memo = std::make_shared<Memo>();
    return [hidden, task, m, memo](const std::string& key) {
        {
            std::lock_guard lock(memo->mutex);
            if (auto it = memo->cache.find(key); it != memo->cache.end()) return it->second;
        }
        std::set<std::string> rel;
        const auto r = hidden->respond({task, key, 0, static_cast<int>(m)});
        if (r.responded) {
            for (std::size_t i = 0; i < r.results.size() && i < m; ++i) rel.insert(r.results[i].doc_id);
        }
        std::lock_guard lock(memo->mutex);
        memo->cache.emplace(key, rel);
        return rel;
    };
}

ReversedSystem::ReversedSystem(SystemDescriptor descriptor, SystemPtr inner, int depth)
    : descriptor_(std::move(descriptor)), inner_(std::move(inner)), depth_(depth) {
    if (!inner_) throw DomainError("reversed system needs an inner system");
    if (depth_ < 1) throw DomainError("depth must be positive");
}

SystemResponse ReversedSystem::respond(const SystemRequest& request) {
    SystemRequest full = request;
    full.page = 0;
    full.rpp = depth_;
    SystemResponse inner = inner_->respond(full);
    if (!inner.responded) return inner;
    std::reverse(inner.results.begin(), inner.results.end());
    for (std::size_t i = 0; i < inner.results.size(); ++i) inner.results[i].rank = static_cast<int>(i) + 1;
    SystemResponse out;
    out.responded = true;
    out.num_found = static_cast<std::int64_t>(inner.results.size());
    out.results = page_slice(inner.results, request.page, request.rpp);
    return out;
}

PageResponse InProcessClient::page(Task task, const std::string& key, const std::string& user, int page, Timestamp now) {
    return task == Task::Ranking ? gateway_.handle_ranking(key, user, page, std::nullopt, now)
                                 : gateway_.handle_recommendation(key, user, page, std::nullopt, now);
}

FeedbackAck InProcessClient::feedback(const FeedbackEvent& event, Timestamp now) {
    return gateway_.handle_feedback(feedback_to_json(event), now);
}

HttpClient::HttpClient(std::string base_url, std::chrono::milliseconds timeout)
    : base_url_(std::move(base_url)), timeout_(timeout) {
    while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
    if (base_url_.rfind("http://", 0) != 0 && base_url_.rfind("https://", 0) != 0) {
        throw DomainError("gateway url must start with http:// or https://");
    }
}

namespace {

httplib::Client make_client(const std::string& url, std::chrono::milliseconds timeout) {
    httplib::Client cli(url);
    cli.set_connection_timeout(timeout);
    cli.set_read_timeout(timeout);
    cli.set_write_timeout(timeout);
    return cli;
}

}  // namespace

PageResponse HttpClient::page(Task task, const std::string& key, const std::string& user, int page, Timestamp now) {
    auto cli = make_client(base_url_, timeout_);
    httplib::Params params{{task == Task::Ranking ? "query" : "itemid", key},
                           {"user", user},
                           {"page", std::to_string(page)},
                           {"ts", std::to_string(to_millis(now))}};
    const char* path = task == Task::Ranking ? "/api/v1/ranking" : "/api/v1/recommendation/datasets";
    auto res = cli.Get(path, params, httplib::Headers{});
    if (!res) throw std::runtime_error("gateway unreachable: " + httplib::to_string(res.error()));
    if (res->status != 200) {
        throw std::runtime_error("gateway returned HTTP " + std::to_string(res->status) + ": " + res->body);
    }
    return page_from_json(Json::parse(res->body), task);
}

FeedbackAck HttpClient::feedback(const FeedbackEvent& event, Timestamp now) {
    auto cli = make_client(base_url_, timeout_);
    const std::string path = "/api/v1/feedback?ts=" + std::to_string(to_millis(now));
    auto res = cli.Post(path, feedback_to_json(event).dump(), "application/json");
    if (!res) throw std::runtime_error("gateway unreachable: " + httplib::to_string(res.error()));
    if (res->status != 200 && res->status != 422) {
        throw std::runtime_error("gateway returned HTTP " + std::to_string(res->status) + ": " + res->body);
    }
    const auto body = Json::parse(res->body);
    FeedbackAck ack;
    ack.accepted = body.value("accepted", false);
    ack.impression_id = body.value("impression_id", std::string());
    ack.new_clicks = body.value("new_clicks", std::size_t{0});
    ack.duplicate_clicks = body.value("duplicate_clicks", std::size_t{0});
    ack.error = body.value("error", std::string());
    return ack;
}

PageResponse page_from_json(const Json& wire, Task task) {
    const auto& header = wire.at("header");
    PageResponse page;
    page.task = task;
    page.session_id = header.at("sid").get<std::string>();
    if (!header.at("impression_id").is_null()) page.impression_id = header.at("impression_id").get<std::string>();
    page.query_or_item = header.at(task == Task::Ranking ? "q" : "itemid").get<std::string>();
    page.page = header.at("page").get<int>();
    page.rpp = header.at("rpp").get<int>();
    page.num_found = header.at("num_found").get<std::int64_t>();
    const auto& container = header.at("container");
    const std::string exp = container.at("exp").is_null() ? std::string() : container.at("exp").get<std::string>();
    page.list = interleaved_from_json(wire.at("body"), exp, container.at("base").get<std::string>());
    return page;
}

Json SimulationSummary::to_json() const {
    Json out{{"sessions", sessions},         {"requests", requests},         {"impressions", impressions},
             {"baseline_only", baseline_only}, {"clicks", clicks},           {"feedback_events", feedback_events},
             {"rejected_feedback", rejected_feedback}, {"aborted", aborted}};
    if (!error.empty()) out["error"] = error;
    return out;
}

SimulationSummary run_simulation(GatewayClient& client, const TrafficConfig& traffic, const ClickModel& model,
                                 const std::vector<std::string>& vocabulary, const RelevanceOracle& oracle) {
    traffic.validate();
    model.validate();
    SimulationSummary summary;
    if (traffic.sessions == 0) return summary;
    ZipfSampler sampler(vocabulary, traffic.zipf_exponent);
    const auto seed_lo = static_cast<std::uint32_t>(traffic.seed);
    const auto seed_hi = static_cast<std::uint32_t>(traffic.seed >> 32);

    for (std::size_t s = 0; s < traffic.sessions; ++s) {
        std::seed_seq seq{seed_lo, seed_hi, static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32)};
        std::mt19937_64 rng(seq);
        std::size_t n = 1;
        if (traffic.queries_per_session > 1.0) {
            n += std::poisson_distribution<std::size_t>(traffic.queries_per_session - 1.0)(rng);
        }
        const std::string user = "sim-user-" + std::to_string(s + 1);
        const Timestamp session_start = traffic.start + std::chrono::minutes(static_cast<long>(s));
        ++summary.sessions;
        for (std::size_t q = 0; q < n; ++q) {
            const std::string& key = sampler(rng);
            const Timestamp now = session_start + std::chrono::seconds(20 * static_cast<long>(q));
            PageResponse page;
            try {
                page = client.page(traffic.task, key, user, 0, now);
            } catch (const std::exception& e) {
                summary.aborted = true;
                summary.error = e.what();
                return summary;
            }
            ++summary.requests;
            const auto clicks = simulate_clicks(page.list, oracle(key), model, rng, now);
            if (!page.impression_id) {
                ++summary.baseline_only;
                continue;
            }
            ++summary.impressions;
            if (clicks.empty()) continue;
            FeedbackAck ack;
            try {
                ack = client.feedback({*page.impression_id, clicks}, now + std::chrono::seconds(15));
            } catch (const std::exception& e) {
                summary.aborted = true;
                summary.error = e.what();
                return summary;
            }
            if (ack.accepted) {
                ++summary.feedback_events;
                summary.clicks += ack.new_clicks;
            } else {
                ++summary.rejected_feedback;
            }
        }
    }
    return summary;
}

namespace {

std::string make_word(std::mt19937_64& rng) {
    static const char* const syllables[] = {"ka", "lo", "mi", "ne", "ra", "su", "ti", "vo", "ze", "do",
                                            "pa", "gen", "tor", "bal", "cor", "fin", "mus", "ler", "ith", "an"};
    std::uniform_int_distribution<int> count(2, 3);
    std::uniform_int_distribution<std::size_t> pick(0, std::size(syllables) - 1);
    std::string w;
    for (int i = count(rng); i > 0; --i) w += syllables[pick(rng)];
    return w;
}

}  // namespace

SyntheticSite make_synthetic_site(std::size_t documents, std::size_t queries, std::uint64_t seed) {
    if (documents == 0 || queries == 0) throw DomainError("synthetic site needs documents and queries");
    std::mt19937_64 rng(seed);
    std::set<std::string> seen;
    std::vector<std::string> terms;
    const std::size_t vocab = std::max<std::size_t>(50, documents / 2);
    while (terms.size() < vocab) {
        auto w = make_word(rng);
        if (seen.insert(w).second) terms.push_back(w);
    }
    const auto w = zipf_weights(terms.size(), 0.8);
    std::discrete_distribution<std::size_t> term(w.begin(), w.end());
    std::uniform_int_distribution<int> title_len(4, 8);
    std::uniform_int_distribution<int> abstract_len(20, 40);

    SyntheticSite site;
    for (std::size_t i = 0; i < documents; ++i) {
        DocumentRecord d;
        d.doc_id = "doc-" + std::to_string(i + 1);
        auto text = [&](int n) {
            std::string s;
            for (int k = 0; k < n; ++k) {
                if (k) s.push_back(' ');
                s += terms[term(rng)];
            }
            return s;
        };
        d.fields["TITLE"] = {text(title_len(rng))};
        d.fields["ABSTRACT"] = {text(abstract_len(rng))};
        site.documents.push_back(std::move(d));
    }
    std::uniform_int_distribution<int> query_len(1, 3);
    std::set<std::string> qseen;
    std::size_t attempts = 0;
    while (site.queries.size() < queries && attempts++ < queries * 100) {
        std::string q;
        for (int k = query_len(rng); k > 0; --k) {
            if (!q.empty()) q.push_back(' ');
            q += terms[term(rng)];
        }
        if (qseen.insert(q).second) site.queries.push_back(q);
    }
    return site;
}

}  // namespace livinglab
