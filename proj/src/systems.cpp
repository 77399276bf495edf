#include "livinglab/systems.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "livinglab/log.hpp"

namespace livinglab {

using nlohmann::json;

std::string normalize_request(std::string_view text) {
    auto first = text.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    auto last = text.find_last_not_of(" \t\r\n");
    std::string out(text.substr(first, last - first + 1));
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::vector<RankedResult> page_slice(const std::vector<RankedResult>& all, int page, int rpp) {
    if (page < 0 || rpp < 1) throw DomainError("page must be >= 0 and rpp >= 1");
    const auto begin = static_cast<std::size_t>(page) * static_cast<std::size_t>(rpp);
    if (begin >= all.size()) return {};
    const auto end = std::min(all.size(), begin + static_cast<std::size_t>(rpp));
    return {all.begin() + static_cast<std::ptrdiff_t>(begin), all.begin() + static_cast<std::ptrdiff_t>(end)};
}

SystemResponse precomputed_respond(const RunFile& run, const std::map<std::string, std::string>& request_to_qid,
                                   const SystemRequest& request) {
    SystemResponse response;
    auto key = request_to_qid.find(normalize_request(request.query_or_item));
    if (key == request_to_qid.end()) return response;
    auto entries = run.entries.find(key->second);
    if (entries == run.entries.end()) return response;
    std::vector<RankedResult> all;
    all.reserve(entries->second.size());
    for (const auto& e : entries->second) all.push_back({e.doc_id, e.rank, e.score});
    response.responded = true;
    response.num_found = static_cast<std::int64_t>(all.size());
    response.results = page_slice(all, request.page, request.rpp);
    return response;
}

std::shared_ptr<PrecomputedSystem> PrecomputedSystem::for_ranking(SystemDescriptor descriptor, RunFile run,
                                                                  const std::vector<HeadQuery>& head_queries) {
    std::map<std::string, std::string> keys;
    for (const auto& q : head_queries) keys.emplace(normalize_request(q.qstr), std::to_string(q.qid));
    return std::shared_ptr<PrecomputedSystem>(new PrecomputedSystem(std::move(descriptor), std::move(run), keys));
}

std::shared_ptr<PrecomputedSystem> PrecomputedSystem::for_recommendation(SystemDescriptor descriptor, RunFile run) {
    std::map<std::string, std::string> keys;
    for (const auto& [qid, list] : run.entries) keys.emplace(normalize_request(qid), qid);
    return std::shared_ptr<PrecomputedSystem>(new PrecomputedSystem(std::move(descriptor), std::move(run), keys));
}

SystemResponse PrecomputedSystem::respond(const SystemRequest& request) {
    return precomputed_respond(run_, request_to_qid_, request);
}

BaselineRankingSystem::BaselineRankingSystem(SystemDescriptor descriptor, std::shared_ptr<const InvertedIndex> index,
                                             Bm25Params params)
    : descriptor_(std::move(descriptor)), index_(std::move(index)), params_(params) {
    params_.validate();
}

SystemResponse BaselineRankingSystem::respond(const SystemRequest& request) {
    SystemResponse response;
    response.responded = true;
    auto all = bm25_rank(*index_, request.query_or_item, index_->doc_count(), params_);
    response.num_found = static_cast<std::int64_t>(all.size());
    response.results = page_slice(all, request.page, request.rpp);
    return response;
}

BaselineRecommendationSystem::BaselineRecommendationSystem(SystemDescriptor descriptor,
                                                           std::shared_ptr<const InvertedIndex> dataset_index,
                                                           std::vector<DocumentRecord> publications,
                                                           Bm25Params params)
    : descriptor_(std::move(descriptor)), index_(std::move(dataset_index)), params_(params) {
    params_.validate();
    for (auto& p : publications) {
        auto id = p.doc_id;
        publications_.emplace(std::move(id), std::move(p));
    }
}

SystemResponse BaselineRecommendationSystem::respond(const SystemRequest& request) {
    SystemResponse response;
    response.responded = true;
    auto it = publications_.find(request.query_or_item);
    if (it == publications_.end() || record_title(it->second).empty()) return response;
    auto all = recommend_for_publication(*index_, it->second, index_->doc_count(), params_);
    // A seed that is itself in the dataset corpus is not recommended to itself.
    std::erase_if(all, [&](const RankedResult& r) { return r.doc_id == request.query_or_item; });
    for (std::size_t i = 0; i < all.size(); ++i) all[i].rank = static_cast<int>(i) + 1;
    response.num_found = static_cast<std::int64_t>(all.size());
    response.results = page_slice(all, request.page, request.rpp);
    return response;
}

void RemoteContract::validate() const {
    if (base_url.empty()) throw DomainError("remote system needs a base URL");
    for (const auto* p : {&index_path, &ranking_path, &recommendation_path}) {
        if (p->empty() || p->front() != '/') throw DomainError("remote endpoint paths must start with '/'");
    }
}

namespace {

std::string request_path(const RemoteContract& contract, const SystemRequest& request) {
    httplib::Params params;
    if (request.task == Task::Ranking) {
        params.emplace("query", request.query_or_item);
    } else {
        params.emplace("itemid", request.query_or_item);
    }
    params.emplace("page", std::to_string(request.page));
    params.emplace("rpp", std::to_string(request.rpp));
    const auto& path = request.task == Task::Ranking ? contract.ranking_path : contract.recommendation_path;
    return httplib::append_query_params(path, params);
}

// Parses {"header": {..., "num_found": n}, "itemlist": ["d1", ...]}.
SystemResponse parse_contract_body(const std::string& body, const SystemRequest& request) {
    SystemResponse response;
    json doc = json::parse(body);
    if (!doc.is_object()) throw std::invalid_argument("response is not a JSON object");
    auto items = doc.find("itemlist");
    if (items == doc.end() || !items->is_array()) throw std::invalid_argument("missing array 'itemlist'");
    std::set<std::string> seen;
    const int offset = request.page * request.rpp;
    for (const auto& item : *items) {
        if (!item.is_string()) throw std::invalid_argument("itemlist entries must be strings");
        auto id = item.get<std::string>();
        if (id.empty()) throw std::invalid_argument("empty doc id in itemlist");
        if (!seen.insert(id).second) throw std::invalid_argument("duplicate doc id '" + id + "' in itemlist");
        const int rank = offset + static_cast<int>(response.results.size()) + 1;
        response.results.push_back({std::move(id), rank, 0.0});
    }
    if (static_cast<int>(response.results.size()) > request.rpp) {
        throw std::invalid_argument("itemlist longer than rpp");
    }
    response.num_found = static_cast<std::int64_t>(response.results.size());
    if (auto header = doc.find("header"); header != doc.end() && header->is_object()) {
        if (auto nf = header->find("num_found"); nf != header->end() && nf->is_number_integer()) {
            response.num_found = nf->get<std::int64_t>();
        }
    }
    response.responded = true;
    return response;
}

httplib::Client make_client(const std::string& base_url, std::chrono::milliseconds timeout) {
    httplib::Client client(base_url);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    return client;
}

}  // namespace

SystemResponse remote_respond(const RemoteContract& contract, const SystemRequest& request,
                              std::chrono::milliseconds timeout) {
    if (timeout.count() <= 0) throw DomainError("timeout must be positive");
    auto client = make_client(contract.base_url, timeout);
    auto result = client.Get(request_path(contract, request));
    SystemResponse response;
    if (!result) {
        log(LogLevel::Info, contract.base_url + ": no response (" + httplib::to_string(result.error()) + ")");
        return response;
    }
    if (result->status != 200) return response;
    try {
        return parse_contract_body(result->body, request);
    } catch (const std::exception& e) {
        response = SystemResponse{};
        response.protocol_error = e.what();
        log(LogLevel::Warning, contract.base_url + ": protocol error: " + e.what());
        return response;
    }
}

RemoteSystem::RemoteSystem(SystemDescriptor descriptor, RemoteContract contract, std::chrono::milliseconds timeout,
                           int max_in_flight)
    : descriptor_(std::move(descriptor)),
      contract_(std::move(contract)),
      timeout_(timeout),
      in_flight_(std::clamp(max_in_flight, 1, 1024)) {
    contract_.validate();
    if (timeout_.count() <= 0) throw DomainError("timeout must be positive");
}

SystemResponse RemoteSystem::respond(const SystemRequest& request) {
    if (!in_flight_.try_acquire_for(timeout_)) return {};
    struct Release {
        std::counting_semaphore<1024>& s;
        ~Release() { s.release(); }
    } release{in_flight_};
    return remote_respond(contract_, request, timeout_);
}

bool RemoteSystem::prepare() {
    auto client = make_client(contract_.base_url, std::max(timeout_, std::chrono::milliseconds(5000)));
    auto result = client.Get(contract_.index_path);
    return result && result->status == 200;
}

struct ParticipantService::Impl {
    SystemPtr system;
    RemoteContract paths;
    httplib::Server server;
    std::thread thread;
};

ParticipantService::ParticipantService(SystemPtr system, RemoteContract paths) : impl_(std::make_unique<Impl>()) {
    impl_->system = std::move(system);
    impl_->paths = std::move(paths);
    auto* impl = impl_.get();
    auto handler = [impl](Task task) {
        return [impl, task](const httplib::Request& req, httplib::Response& res) {
            SystemRequest request;
            request.task = task;
            request.query_or_item = req.get_param_value(task == Task::Ranking ? "query" : "itemid");
            try {
                request.page = req.has_param("page") ? std::stoi(req.get_param_value("page")) : 0;
                request.rpp = req.has_param("rpp") ? std::stoi(req.get_param_value("rpp")) : 10;
            } catch (const std::exception&) {
                res.status = 400;
                return;
            }
            if (request.page < 0 || request.rpp < 1) {
                res.status = 400;
                return;
            }
            auto response = impl->system->respond(request);
            if (!response.responded) {
                res.status = 404;
                res.set_content(R"({"error":"no result"})", "application/json");
                return;
            }
            json header;
            header[task == Task::Ranking ? "q" : "itemid"] = request.query_or_item;
            header["page"] = request.page;
            header["rpp"] = request.rpp;
            header["num_found"] = response.num_found;
            json items = json::array();
            for (const auto& r : response.results) items.push_back(r.doc_id);
            res.set_content(json{{"header", header}, {"itemlist", items}}.dump(), "application/json");
        };
    };
    impl_->server.Get(impl_->paths.index_path, [](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"status":"ready"})", "application/json");
    });
    impl_->server.Get(impl_->paths.ranking_path, handler(Task::Ranking));
    impl_->server.Get(impl_->paths.recommendation_path, handler(Task::Recommendation));
}

ParticipantService::~ParticipantService() { stop(); }

int ParticipantService::start(const std::string& host, int port) {
    int bound = port;
    if (port == 0) {
        bound = impl_->server.bind_to_any_port(host);
    } else if (!impl_->server.bind_to_port(host, port)) {
        bound = -1;
    }
    if (bound < 0) throw std::runtime_error("cannot bind participant service on " + host);
    impl_->thread = std::thread([impl = impl_.get()] { impl->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return bound;
}

void ParticipantService::stop() {
    if (!impl_) return;
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

SanityReport sanity_check(SystemAdapter& system, const std::vector<SystemRequest>& probes) {
    if (probes.empty()) throw DomainError("sanity check needs at least one probe");
    SanityReport report;
    std::size_t responded = 0;
    for (const auto& probe : probes) {
        ProbeVerdict verdict;
        verdict.probe = probe.query_or_item;
        SystemResponse response;
        try {
            response = system.respond(probe);
        } catch (const std::exception& e) {
            verdict.passed = false;
            verdict.message = std::string("exception: ") + e.what();
            report.probes.push_back(std::move(verdict));
            continue;
        }
        verdict.responded = response.responded;
        if (!response.protocol_error.empty()) {
            verdict.passed = false;
            verdict.message = "protocol error: " + response.protocol_error;
        } else if (response.responded) {
            ++responded;
            std::set<std::string> ids;
            int expected = probe.page * probe.rpp + 1;
            for (const auto& r : response.results) {
                if (!ids.insert(r.doc_id).second) {
                    verdict.passed = false;
                    verdict.message = "duplicate doc_id " + r.doc_id;
                    break;
                }
                if (r.rank != expected) {
                    verdict.passed = false;
                    verdict.message = "rank gap: expected " + std::to_string(expected) + ", found " +
                                      std::to_string(r.rank);
                    break;
                }
                ++expected;
            }
            if (static_cast<int>(response.results.size()) > probe.rpp && verdict.passed) {
                verdict.passed = false;
                verdict.message = "more results than rpp";
            }
            if (verdict.passed) verdict.message = std::to_string(response.results.size()) + " results";
        } else {
            verdict.message = "no response";
        }
        report.passed = report.passed && verdict.passed;
        report.probes.push_back(std::move(verdict));
    }
    if (responded == 0) report.warnings.push_back("no responses observed");
    return report;
}

}  // namespace livinglab
