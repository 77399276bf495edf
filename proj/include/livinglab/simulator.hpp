#pragma once

// Synthetic traffic: Zipf-distributed queries, a position-based click model
// and a driver that pushes sessions through a gateway.

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "livinglab/gateway.hpp"
#include "livinglab/model.hpp"
#include "livinglab/systems.hpp"

namespace livinglab {

/// Position-based model: rank r is examined with probability gamma^(r-1)
/// (or examination[r-1] when given); an examined relevant document is
/// clicked with the attractiveness of the system whose team placed it.
struct ClickModel {
    double gamma = 0.7;
    std::vector<double> examination;
    std::map<std::string, double> attractiveness;
    double default_attractiveness = 0.6;
    double nonrelevant_click = 0.05;
    std::vector<std::pair<std::string, double>> elements;

    static ClickModel defaults();
    static ClickModel from_json(const Json& doc);

    double examine(std::size_t rank) const;  // 1-based
    double attract(const std::string& system) const;
    void validate() const;
};

struct TrafficConfig {
    std::size_t sessions = 1000;
    double queries_per_session = 2.0;  // mean, at least 1
    double zipf_exponent = 1.0;
    std::uint64_t seed = 1;
    Task task = Task::Ranking;
    std::size_t relevant_per_query = 3;
    Timestamp start = from_millis(1614556800000);  // 2021-03-01T00:00:00Z

    static TrafficConfig from_json(const Json& doc);
    void validate() const;
};

/// Draws from a popularity-ranked vocabulary with P(i) proportional to
/// i^(-exponent), i being the 1-based rank.
class ZipfSampler {
public:
    ZipfSampler(std::vector<std::string> vocabulary, double exponent);

    const std::string& operator()(std::mt19937_64& rng);
    const std::vector<std::string>& vocabulary() const { return vocabulary_; }

private:
    std::vector<std::string> vocabulary_;
    std::discrete_distribution<std::size_t> dist_;
};

std::vector<std::string> sample_queries(const std::vector<std::string>& vocabulary, double exponent, std::size_t n,
                                        std::uint64_t seed);

/// Clicks on one page. Timestamps are `page_time` plus one second per
/// position.
std::vector<ClickEvent> simulate_clicks(const InterleavedList& page, const std::set<std::string>& relevant,
                                        const ClickModel& model, std::mt19937_64& rng, Timestamp page_time = {});
std::vector<ClickEvent> simulate_clicks(const InterleavedList& page, const std::set<std::string>& relevant,
                                        const ClickModel& model, std::uint64_t seed, Timestamp page_time = {});

/// Relevant documents for a query or seed item.
using RelevanceOracle = std::function<std::set<std::string>(const std::string&)>;

/// Top-m documents of a hidden ranking, memoised per request.
RelevanceOracle oracle_from_system(SystemPtr hidden, Task task, std::size_t m);

/// The inner system's top `depth` results in reverse order.
class ReversedSystem final : public SystemAdapter {
public:
    ReversedSystem(SystemDescriptor descriptor, SystemPtr inner, int depth = 10);
    const SystemDescriptor& descriptor() const override { return descriptor_; }
    SystemResponse respond(const SystemRequest& request) override;

private:
    SystemDescriptor descriptor_;
    SystemPtr inner_;
    int depth_;
};

/// Forwards to another adapter under a different identity.
class AliasSystem final : public SystemAdapter {
public:
    AliasSystem(SystemDescriptor descriptor, SystemPtr inner)
        : descriptor_(std::move(descriptor)), inner_(std::move(inner)) {}
    const SystemDescriptor& descriptor() const override { return descriptor_; }
    SystemResponse respond(const SystemRequest& request) override { return inner_->respond(request); }
    bool prepare() override { return inner_->prepare(); }

private:
    SystemDescriptor descriptor_;
    SystemPtr inner_;
};

class GatewayClient {
public:
    virtual ~GatewayClient() = default;
    virtual PageResponse page(Task task, const std::string& key, const std::string& user, int page, Timestamp now) = 0;
    virtual FeedbackAck feedback(const FeedbackEvent& event, Timestamp now) = 0;
};

class InProcessClient final : public GatewayClient {
public:
    explicit InProcessClient(Gateway& gateway) : gateway_(gateway) {}
    PageResponse page(Task task, const std::string& key, const std::string& user, int page, Timestamp now) override;
    FeedbackAck feedback(const FeedbackEvent& event, Timestamp now) override;

private:
    Gateway& gateway_;
};

/// Talks to a running gateway; throws std::runtime_error when unreachable.
class HttpClient final : public GatewayClient {
public:
    explicit HttpClient(std::string base_url, std::chrono::milliseconds timeout = std::chrono::seconds(10));
    PageResponse page(Task task, const std::string& key, const std::string& user, int page, Timestamp now) override;
    FeedbackAck feedback(const FeedbackEvent& event, Timestamp now) override;

private:
    std::string base_url_;
    std::chrono::milliseconds timeout_;
};

/// Inverse of PageResponse::to_json.
PageResponse page_from_json(const Json& wire, Task task);

struct SimulationSummary {
    std::size_t sessions = 0;
    std::size_t requests = 0;
    std::size_t impressions = 0;     // pages carrying an experiment
    std::size_t baseline_only = 0;
    std::size_t clicks = 0;
    std::size_t feedback_events = 0;
    std::size_t rejected_feedback = 0;
    bool aborted = false;
    std::string error;

    Json to_json() const;
};

/// Drives `traffic.sessions` sessions, each with its own user and an rng
/// seeded from (seed, session index). Time is simulated, so identical
/// inputs give identical logs. A failing gateway aborts the run and the
/// partial summary is returned.
SimulationSummary run_simulation(GatewayClient& client, const TrafficConfig& traffic, const ClickModel& model,
                                 const std::vector<std::string>& vocabulary, const RelevanceOracle& oracle);

/// A small generated corpus and popularity-ranked query list whose terms
/// overlap, for demos and end-to-end tests.
struct SyntheticSite {
    std::vector<DocumentRecord> documents;
    std::vector<std::string> queries;
};

SyntheticSite make_synthetic_site(std::size_t documents, std::size_t queries, std::uint64_t seed);

}  // namespace livinglab
