#pragma once

// Request distribution: one experimental system per request, interleaved
// with the task's baseline, every page logged to the feedback store.

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "livinglab/codec.hpp"
#include "livinglab/model.hpp"
#include "livinglab/store.hpp"
#include "livinglab/systems.hpp"

namespace livinglab {

/// The baseline failed; the page cannot be served.
class ServiceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct GatewayOptions {
    std::string site = "site";
    int rpp_ranking = 10;
    int rpp_recommendation = 6;
    Millis session_timeout = std::chrono::minutes(30);
    std::uint64_t rotation_seed = 1;
};

struct PageResponse {
    Task task = Task::Ranking;
    std::string session_id;
    std::optional<std::string> impression_id;  // absent on baseline-only pages
    std::string query_or_item;
    int page = 0;
    int rpp = 10;
    std::int64_t num_found = 0;
    InterleavedList list;  // exp_system empty on baseline-only pages

    Json to_json() const;
};

struct FeedbackAck {
    bool accepted = false;
    std::string impression_id;
    std::size_t new_clicks = 0;
    std::size_t duplicate_clicks = 0;
    std::string error;

    Json to_json() const;
};

class Gateway {
public:
    /// Validates the registry and resumes session and id counters from the
    /// store's existing contents.
    Gateway(GatewayOptions options, std::vector<SystemPtr> systems, std::shared_ptr<FeedbackStore> store);

    PageResponse handle_ranking(const std::string& query, const std::string& site_user, int page,
                                std::optional<int> rpp, Timestamp now);
    PageResponse handle_recommendation(const std::string& item_id, const std::string& site_user, int page,
                                       std::optional<int> rpp, Timestamp now);
    /// Never throws for bad payloads; rejections carry a diagnostic.
    FeedbackAck handle_feedback(const Json& payload, Timestamp now);

    /// Calls prepare() on every system; true when all baselines are ready.
    bool prepare();
    bool ready() const;

    std::vector<SystemDescriptor> descriptors() const;
    /// How often each experimental system was picked by the rotation.
    std::map<std::string, std::int64_t> selection_counts() const;
    const GatewayOptions& options() const { return options_; }
    FeedbackStore& store() { return *store_; }

private:
    PageResponse handle(Task task, const std::string& key, const std::string& site_user, int page,
                        std::optional<int> rpp, Timestamp now);

    GatewayOptions options_;
    std::vector<SystemPtr> systems_;
    std::map<Task, SystemPtr> baselines_;
    std::map<Task, std::vector<SystemPtr>> experimental_;
    std::shared_ptr<FeedbackStore> store_;
    SessionStore sessions_;
    ImpressionIdGenerator impression_ids_;

    std::mutex session_mutex_;
    mutable std::mutex rotation_mutex_;
    std::mt19937_64 rotation_rng_;
    std::map<std::string, std::int64_t> selections_;
    std::atomic<bool> ready_{false};
};

/// HTTP front end plus the periodic feedback forwarder.
///
///   GET  /api/v1/ranking?query=&page=&rpp=&user=[&ts=]
///   GET  /api/v1/recommendation/datasets?itemid=&page=&rpp=&user=[&ts=]
///   POST /api/v1/feedback
///   GET  /api/v1/systems
///   GET  /api/v1/health
///
/// `ts` (integer milliseconds) overrides the wall clock; the simulator uses
/// it to stay deterministic over HTTP.
class HttpGateway {
public:
    HttpGateway(std::shared_ptr<Gateway> gateway, std::unique_ptr<FeedbackSink> sink = nullptr,
                std::chrono::milliseconds flush_interval = std::chrono::seconds(60));
    ~HttpGateway();

    HttpGateway(const HttpGateway&) = delete;
    HttpGateway& operator=(const HttpGateway&) = delete;

    /// Binds and serves on background threads; returns the bound port.
    int start(const std::string& host = "127.0.0.1", int port = 0);
    /// Blocks until stop() is called from another thread.
    void wait();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace livinglab
