#pragma once

// Uniform adapters over the three system kinds: pre-computed run files,
// remote systems behind the HTTP contract, and built-in baselines.

#include <chrono>
#include <map>
#include <memory>
#include <semaphore>
#include <string>
#include <vector>

#include "livinglab/baseline.hpp"
#include "livinglab/ingest.hpp"
#include "livinglab/model.hpp"

namespace livinglab {

struct SystemRequest {
    Task task = Task::Ranking;
    std::string query_or_item;
    int page = 0;
    int rpp = 10;
};

struct SystemResponse {
    std::vector<RankedResult> results;
    std::int64_t num_found = 0;
    bool responded = false;
    std::string protocol_error;  // empty unless the system broke the contract
};

class SystemAdapter {
public:
    virtual ~SystemAdapter() = default;

    virtual const SystemDescriptor& descriptor() const = 0;
    virtual SystemResponse respond(const SystemRequest& request) = 0;
    /// Readiness after indexing; remote systems ask their index endpoint.
    virtual bool prepare() { return true; }
};

using SystemPtr = std::shared_ptr<SystemAdapter>;

/// Trim plus ASCII case-fold; the key used for head-query matching.
std::string normalize_request(std::string_view text);

/// Slice of a full ranked list for page `page` of size `rpp`.
std::vector<RankedResult> page_slice(const std::vector<RankedResult>& all, int page, int rpp);

/// Answers from a run file, only for requests in its head-query or seed set.
SystemResponse precomputed_respond(const RunFile& run, const std::map<std::string, std::string>& request_to_qid,
                                   const SystemRequest& request);

class PrecomputedSystem final : public SystemAdapter {
public:
    /// Ranking: requests are matched against head-query strings.
    static std::shared_ptr<PrecomputedSystem> for_ranking(SystemDescriptor descriptor, RunFile run,
                                                         const std::vector<HeadQuery>& head_queries);
    /// Recommendation: the run's qids are the seed item ids.
    static std::shared_ptr<PrecomputedSystem> for_recommendation(SystemDescriptor descriptor, RunFile run);

    const SystemDescriptor& descriptor() const override { return descriptor_; }
    SystemResponse respond(const SystemRequest& request) override;

    const std::map<std::string, std::string>& request_keys() const { return request_to_qid_; }

private:
    PrecomputedSystem(SystemDescriptor descriptor, RunFile run, std::map<std::string, std::string> keys)
        : descriptor_(std::move(descriptor)), run_(std::move(run)), request_to_qid_(std::move(keys)) {}

    SystemDescriptor descriptor_;
    RunFile run_;
    std::map<std::string, std::string> request_to_qid_;
};

class BaselineRankingSystem final : public SystemAdapter {
public:
    BaselineRankingSystem(SystemDescriptor descriptor, std::shared_ptr<const InvertedIndex> index,
                          Bm25Params params = {});

    const SystemDescriptor& descriptor() const override { return descriptor_; }
    SystemResponse respond(const SystemRequest& request) override;

private:
    SystemDescriptor descriptor_;
    std::shared_ptr<const InvertedIndex> index_;
    Bm25Params params_;
};

/// Recommends datasets for a seed publication by querying the dataset index
/// with the publication title.
class BaselineRecommendationSystem final : public SystemAdapter {
public:
    BaselineRecommendationSystem(SystemDescriptor descriptor, std::shared_ptr<const InvertedIndex> dataset_index,
                                 std::vector<DocumentRecord> publications, Bm25Params params = {});

    const SystemDescriptor& descriptor() const override { return descriptor_; }
    SystemResponse respond(const SystemRequest& request) override;

private:
    SystemDescriptor descriptor_;
    std::shared_ptr<const InvertedIndex> index_;
    std::map<std::string, DocumentRecord> publications_;
    Bm25Params params_;
};

struct RemoteContract {
    std::string base_url;  // scheme://host:port
    std::string index_path = "/index";
    std::string ranking_path = "/ranking";
    std::string recommendation_path = "/recommendation";

    void validate() const;
};

/// Issues one contract request. Timeouts, non-success statuses and malformed
/// bodies all yield responded = false; only a malformed body sets
/// protocol_error.
SystemResponse remote_respond(const RemoteContract& contract, const SystemRequest& request,
                              std::chrono::milliseconds timeout);

class RemoteSystem final : public SystemAdapter {
public:
    RemoteSystem(SystemDescriptor descriptor, RemoteContract contract,
                 std::chrono::milliseconds timeout = std::chrono::seconds(2), int max_in_flight = 8);

    const SystemDescriptor& descriptor() const override { return descriptor_; }
    SystemResponse respond(const SystemRequest& request) override;
    bool prepare() override;

private:
    SystemDescriptor descriptor_;
    RemoteContract contract_;
    std::chrono::milliseconds timeout_;
    std::counting_semaphore<1024> in_flight_;
};

/// Serves any adapter behind the participant HTTP contract. Used to host
/// stub and demo systems.
class ParticipantService {
public:
    explicit ParticipantService(SystemPtr system, RemoteContract paths = {});
    ~ParticipantService();

    ParticipantService(const ParticipantService&) = delete;
    ParticipantService& operator=(const ParticipantService&) = delete;

    /// Binds to host on an ephemeral port (or `port` when nonzero) and serves
    /// on a background thread. Returns the bound port.
    int start(const std::string& host = "127.0.0.1", int port = 0);
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

struct ProbeVerdict {
    std::string probe;
    bool passed = true;
    bool responded = false;
    std::string message;
};

struct SanityReport {
    std::vector<ProbeVerdict> probes;
    std::vector<std::string> warnings;
    bool passed = true;
};

/// Runs each probe through the adapter; fails on protocol errors, duplicate
/// ids or rank gaps.
SanityReport sanity_check(SystemAdapter& system, const std::vector<SystemRequest>& probes);

}  // namespace livinglab
