#include "livinglab/gateway.hpp"

#include <algorithm>
#include <future>

#include <httplib.h>

#include "livinglab/interleave.hpp"
#include "livinglab/log.hpp"

namespace livinglab {

Json PageResponse::to_json() const {
    Json header;
    header["sid"] = session_id;
    header["impression_id"] = impression_id ? Json(*impression_id) : Json(nullptr);
    header[task == Task::Ranking ? "q" : "itemid"] = query_or_item;
    header["page"] = page;
    header["rpp"] = rpp;
    header["num_found"] = num_found;
    header["container"] = {{"exp", list.exp_system.empty() ? Json(nullptr) : Json(list.exp_system)},
                           {"base", list.base_system}};
    return {{"header", header}, {"body", interleaved_to_json(list)}};
}

Json FeedbackAck::to_json() const {
    Json out{{"accepted", accepted}, {"impression_id", impression_id}};
    if (accepted) {
        out["new_clicks"] = new_clicks;
        out["duplicate_clicks"] = duplicate_clicks;
    } else {
        out["error"] = error;
    }
    return out;
}

Gateway::Gateway(GatewayOptions options, std::vector<SystemPtr> systems, std::shared_ptr<FeedbackStore> store)
    : options_(std::move(options)),
      systems_(std::move(systems)),
      store_(std::move(store)),
      rotation_rng_(options_.rotation_seed) {
    if (!store_) throw DomainError("gateway needs a feedback store");
    if (options_.rpp_ranking < 1 || options_.rpp_recommendation < 1) throw DomainError("rpp must be positive");
    if (options_.session_timeout.count() <= 0) throw DomainError("session timeout must be positive");
    std::vector<SystemDescriptor> descriptors;
    for (const auto& s : systems_) {
        if (!s) throw DomainError("null system adapter");
        descriptors.push_back(s->descriptor());
    }
    validate_registry(descriptors);
    for (const auto& s : systems_) {
        const auto& d = s->descriptor();
        if (d.is_baseline) {
            baselines_[d.task] = s;
        } else {
            experimental_[d.task].push_back(s);
            selections_[d.name] = 0;
        }
    }

    // Resume counters and open sessions from an existing log.
    const auto snap = store_->snapshot();
    std::map<std::string, std::pair<std::string, Timestamp>> last_activity;  // session -> (user, ts)
    for (const auto& s : snap.sessions) last_activity[s.session_id] = {s.site_user, s.start};
    auto touch = [&](const std::string& sid, Timestamp ts) {
        auto it = last_activity.find(sid);
        if (it != last_activity.end()) it->second.second = std::max(it->second.second, ts);
    };
    for (const auto& imp : snap.impressions) {
        impression_ids_.observe(imp.impression_id);
        touch(imp.session_id, imp.timestamp);
    }
    for (const auto& t : snap.traffic) touch(t.session_id, t.timestamp);
    for (const auto& [sid, entry] : last_activity) sessions_.restore(entry.first, sid, entry.second);
}

bool Gateway::prepare() {
    bool ok = true;
    for (const auto& s : systems_) {
        const bool ready = s->prepare();
        if (!ready) {
            log(LogLevel::Warning, "system '" + s->descriptor().name + "' is not ready");
            if (s->descriptor().is_baseline) ok = false;
        }
    }
    ready_ = ok;
    return ok;
}

bool Gateway::ready() const { return ready_; }

std::vector<SystemDescriptor> Gateway::descriptors() const {
    std::vector<SystemDescriptor> out;
    for (const auto& s : systems_) out.push_back(s->descriptor());
    return out;
}

std::map<std::string, std::int64_t> Gateway::selection_counts() const {
    std::lock_guard lock(rotation_mutex_);
    return selections_;
}

PageResponse Gateway::handle_ranking(const std::string& query, const std::string& site_user, int page,
                                     std::optional<int> rpp, Timestamp now) {
    return handle(Task::Ranking, query, site_user, page, rpp, now);
}

PageResponse Gateway::handle_recommendation(const std::string& item_id, const std::string& site_user, int page,
                                            std::optional<int> rpp, Timestamp now) {
    return handle(Task::Recommendation, item_id, site_user, page, rpp, now);
}

PageResponse Gateway::handle(Task task, const std::string& key, const std::string& site_user, int page,
                             std::optional<int> rpp, Timestamp now) {
    if (normalize_request(key).empty()) {
        throw DomainError(task == Task::Ranking ? "query must not be empty" : "itemid must not be empty");
    }
    if (page < 0) throw DomainError("page must be non-negative");
    const int cap = task == Task::Ranking ? options_.rpp_ranking : options_.rpp_recommendation;
    if (rpp && *rpp < 1) throw DomainError("rpp must be positive");
    const int size = std::min(rpp.value_or(cap), cap);

    auto base_it = baselines_.find(task);
    if (base_it == baselines_.end()) throw ServiceError(std::string("no baseline for task ") + std::string(to_string(task)));
    const SystemPtr base = base_it->second;

    SystemPtr exp;
    std::uint64_t coin_seed = 0;
    {
        std::lock_guard lock(rotation_mutex_);
        auto ex = experimental_.find(task);
        if (ex != experimental_.end() && !ex->second.empty()) {
            std::uniform_int_distribution<std::size_t> pick(0, ex->second.size() - 1);
            exp = ex->second[pick(rotation_rng_)];
            ++selections_[exp->descriptor().name];
        }
        coin_seed = rotation_rng_();
    }

    const SystemRequest request{task, key, page, size};
    std::future<SystemResponse> exp_future;
    if (exp) {
        const bool remote = exp->descriptor().kind == SystemKind::LiveRemote;
        exp_future = std::async(remote ? std::launch::async : std::launch::deferred,
                                [exp, request] { return exp->respond(request); });
    }
    SystemResponse base_response;
    try {
        base_response = base->respond(request);
    } catch (const std::exception& e) {
        throw ServiceError("baseline '" + base->descriptor().name + "' failed: " + e.what());
    }
    if (!base_response.responded) throw ServiceError("baseline '" + base->descriptor().name + "' did not respond");

    SystemResponse exp_response;
    if (exp) {
        try {
            exp_response = exp_future.get();
        } catch (const std::exception& e) {
            log(LogLevel::Warning, "system '" + exp->descriptor().name + "' failed: " + e.what());
            exp_response = {};
        }
    }

    const std::string session_id = [&] {
        std::lock_guard lock(session_mutex_);
        auto res = sessions_.resolve(site_user, now, options_.session_timeout);
        if (res.created) store_->record_session({res.session_id, site_user, res.start});
        return res.session_id;
    }();

    PageResponse out;
    out.task = task;
    out.session_id = session_id;
    out.query_or_item = key;
    out.page = page;
    out.rpp = size;
    out.num_found = base_response.num_found;
    out.list.base_system = base->descriptor().name;

    auto ids = [](const SystemResponse& r) {
        std::vector<std::string> v;
        for (const auto& e : r.results) v.push_back(e.doc_id);
        return v;
    };
    const auto base_ids = ids(base_response);

    if (exp && exp_response.responded && !exp_response.results.empty()) {
        const auto exp_ids = ids(exp_response);
        CoinSource coin = CoinSource::seeded(coin_seed);
        out.list = team_draft_interleave(exp_ids, base_ids, static_cast<std::size_t>(size), coin);
        out.list.exp_system = exp->descriptor().name;
        out.list.base_system = base->descriptor().name;
        out.num_found = std::max(out.num_found, exp_response.num_found);

        Impression imp;
        imp.impression_id = impression_ids_.next();
        imp.session_id = session_id;
        imp.task = task;
        imp.query_or_item = key;
        imp.page = page;
        imp.rpp = size;
        imp.interleaved = out.list;
        imp.timestamp = now;
        store_->record_impression(imp);
        out.impression_id = imp.impression_id;
    } else {
        for (std::size_t i = 0; i < base_ids.size() && i < static_cast<std::size_t>(size); ++i) {
            out.list.entries.push_back({base_ids[i], Team::Base});
        }
        store_->record_traffic({session_id, task, key, base->descriptor().name, now});
    }
    return out;
}

FeedbackAck Gateway::handle_feedback(const Json& payload, Timestamp now) {
    FeedbackAck ack;
    try {
        const FeedbackEvent fb = feedback_from_json(payload, now);
        ack.impression_id = fb.impression_id;
        if (fb.clicks.empty()) throw DomainError("feedback carries no clicks");
        const auto appended = store_->record_feedback(fb);
        ack.accepted = true;
        ack.new_clicks = appended.new_clicks;
        ack.duplicate_clicks = appended.duplicate_clicks;
    } catch (const std::exception& e) {
        ack.accepted = false;
        ack.error = e.what();
    }
    return ack;
}

// ---------------------------------------------------------------------------

struct HttpGateway::Impl {
    std::shared_ptr<Gateway> gateway;
    std::unique_ptr<FeedbackSink> sink;
    std::chrono::milliseconds flush_interval;
    httplib::Server server;
    std::thread server_thread;
    std::thread flush_thread;
    std::mutex stop_mutex;
    std::condition_variable stop_cv;
    bool stopping = false;
    bool started = false;

    void flush_loop() {
        std::unique_lock lock(stop_mutex);
        while (!stopping) {
            stop_cv.wait_for(lock, flush_interval, [this] { return stopping; });
            lock.unlock();
            try {
                const auto n = gateway->store().flush_to(*sink);
                if (n > 0) log(LogLevel::Info, "forwarded " + std::to_string(n) + " records");
            } catch (const std::exception& e) {
                log(LogLevel::Warning, std::string("feedback flush failed: ") + e.what());
            }
            lock.lock();
        }
    }
};

namespace {

void send_json(httplib::Response& res, int status, const Json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
    send_json(res, status, {{"error", message}});
}

int int_param(const httplib::Request& req, const char* name, int fallback) {
    if (!req.has_param(name)) return fallback;
    const auto text = req.get_param_value(name);
    std::size_t used = 0;
    int value = 0;
    try {
        value = std::stoi(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != text.size()) throw DomainError(std::string("parameter '") + name + "' must be an integer");
    return value;
}

Timestamp request_time(const httplib::Request& req) {
    if (req.has_param("ts")) {
        const auto text = req.get_param_value("ts");
        try {
            std::size_t used = 0;
            const auto ms = std::stoll(text, &used);
            if (used == text.size()) return from_millis(ms);
        } catch (const std::exception&) {
        }
        throw DomainError("parameter 'ts' must be integer milliseconds");
    }
    return std::chrono::time_point_cast<Millis>(std::chrono::system_clock::now());
}

}  // namespace

HttpGateway::HttpGateway(std::shared_ptr<Gateway> gateway, std::unique_ptr<FeedbackSink> sink,
                         std::chrono::milliseconds flush_interval)
    : impl_(std::make_unique<Impl>()) {
    if (!gateway) throw DomainError("http gateway needs a gateway");
    if (flush_interval.count() <= 0) throw DomainError("flush interval must be positive");
    impl_->gateway = std::move(gateway);
    impl_->sink = std::move(sink);
    impl_->flush_interval = flush_interval;
    Gateway* gw = impl_->gateway.get();
    auto& server = impl_->server;

    auto page_handler = [gw](Task task) {
        return [gw, task](const httplib::Request& req, httplib::Response& res) {
            const char* key_name = task == Task::Ranking ? "query" : "itemid";
            try {
                if (!req.has_param(key_name)) throw DomainError(std::string("missing parameter '") + key_name + "'");
                const auto key = req.get_param_value(key_name);
                const auto user = req.has_param("user") ? req.get_param_value("user") : std::string("anonymous");
                const int page = int_param(req, "page", 0);
                std::optional<int> rpp;
                if (req.has_param("rpp")) rpp = int_param(req, "rpp", 0);
                const auto now = request_time(req);
                const auto page_out = task == Task::Ranking ? gw->handle_ranking(key, user, page, rpp, now)
                                                            : gw->handle_recommendation(key, user, page, rpp, now);
                send_json(res, 200, page_out.to_json());
            } catch (const DomainError& e) {
                send_error(res, 400, e.what());
            } catch (const ServiceError& e) {
                send_error(res, 503, e.what());
            } catch (const std::exception& e) {
                send_error(res, 500, e.what());
            }
        };
    };
    server.Get("/api/v1/ranking", page_handler(Task::Ranking));
    server.Get("/api/v1/recommendation/datasets", page_handler(Task::Recommendation));

    server.Post("/api/v1/feedback", [gw](const httplib::Request& req, httplib::Response& res) {
        Json payload;
        try {
            payload = Json::parse(req.body);
        } catch (const Json::exception& e) {
            send_error(res, 400, std::string("malformed JSON: ") + e.what());
            return;
        }
        Timestamp now;
        try {
            now = request_time(req);
        } catch (const DomainError& e) {
            send_error(res, 400, e.what());
            return;
        }
        const auto ack = gw->handle_feedback(payload, now);
        send_json(res, ack.accepted ? 200 : 422, ack.to_json());
    });

    server.Get("/api/v1/systems", [gw](const httplib::Request&, httplib::Response& res) {
        const auto counts = gw->selection_counts();
        Json systems = Json::array();
        for (const auto& d : gw->descriptors()) {
            Json item{{"name", d.name}, {"kind", to_string(d.kind)}, {"task", to_string(d.task)},
                      {"baseline", d.is_baseline}, {"source", d.source}};
            if (auto it = counts.find(d.name); it != counts.end()) item["selected"] = it->second;
            systems.push_back(std::move(item));
        }
        send_json(res, 200, {{"site", gw->options().site}, {"systems", systems}});
    });

    server.Get("/api/v1/health", [gw](const httplib::Request&, httplib::Response& res) {
        if (gw->ready()) {
            send_json(res, 200, {{"status", "ready"}});
        } else {
            send_json(res, 503, {{"status", "starting"}});
        }
    });
}

HttpGateway::~HttpGateway() { stop(); }

int HttpGateway::start(const std::string& host, int port) {
    if (impl_->started) throw DomainError("http gateway already started");
    int bound = port;
    if (port == 0) {
        bound = impl_->server.bind_to_any_port(host);
    } else if (!impl_->server.bind_to_port(host, port)) {
        bound = -1;
    }
    if (bound < 0) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
    impl_->started = true;
    impl_->server_thread = std::thread([impl = impl_.get()] { impl->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    if (impl_->sink) impl_->flush_thread = std::thread([impl = impl_.get()] { impl->flush_loop(); });
    return bound;
}

void HttpGateway::wait() {
    std::unique_lock lock(impl_->stop_mutex);
    impl_->stop_cv.wait(lock, [this] { return impl_->stopping; });
}

void HttpGateway::stop() {
    if (!impl_) return;
    {
        std::lock_guard lock(impl_->stop_mutex);
        if (impl_->stopping && !impl_->server_thread.joinable() && !impl_->flush_thread.joinable()) return;
        impl_->stopping = true;
    }
    impl_->stop_cv.notify_all();
    impl_->server.stop();
    if (impl_->server_thread.joinable()) impl_->server_thread.join();
    if (impl_->flush_thread.joinable()) impl_->flush_thread.join();
    // Final forward so nothing accepted before shutdown is left behind.
    if (impl_->sink && impl_->started) {
        try {
            impl_->gateway->store().flush_to(*impl_->sink);
        } catch (const std::exception& e) {
            log(LogLevel::Warning, std::string("final feedback flush failed: ") + e.what());
        }
        impl_->started = false;
    }
}

}  // namespace livinglab
