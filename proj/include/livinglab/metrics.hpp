#pragma once

// Round evaluation: Win/Loss/Tie and Outcome, CTR, weighted click reward,
// query statistics and click distributions over a feedback log snapshot.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "livinglab/codec.hpp"
#include "livinglab/model.hpp"
#include "livinglab/stats.hpp"
#include "livinglab/store.hpp"

namespace livinglab {

/// Weight per SERP element. Elements missing from the table fall back to
/// `default_weight`; clicks logged without an element count as
/// `default_element`.
struct RewardWeights {
    std::map<std::string, double> weights;
    std::string default_element = "Other";
    double default_weight = 1.0;

    static RewardWeights defaults();
    /// {"weights": {...}, "default_element": ..., "default_weight": ...} or a
    /// bare {"Title": 1, ...} object.
    static RewardWeights from_json(const Json& doc);
    static RewardWeights load(const std::filesystem::path& path);
    Json to_json() const;

    double weight_of(const std::string& element) const;
    /// Element name used for counting; empty names become default_element.
    std::string canonical(const std::string& element) const;
    void validate() const;
};

using ClickCounts = std::map<std::string, std::int64_t>;

std::optional<double> outcome(std::int64_t wins, std::int64_t losses);
double ctr(std::int64_t clicks, std::int64_t impressions);
double reward(const ClickCounts& counts, const RewardWeights& weights);
std::optional<double> nreward(double reward_exp, double reward_base);

struct SystemRoundStats {
    std::string system;
    bool is_baseline = false;
    Task task = Task::Ranking;
    std::int64_t sessions = 0;
    std::int64_t impressions = 0;
    std::int64_t clicks = 0;  // clicks on the system's own team
    double ctr = 0.0;
    std::int64_t wins = 0;
    std::int64_t losses = 0;
    std::int64_t ties = 0;
    std::optional<double> outcome;
};

/// Weighted clicks of one experimental system and its baseline over their
/// shared impressions. The aggregate row uses exp = kAllExperimental.
struct PairReward {
    Task task = Task::Ranking;
    std::string exp_system;
    std::string base_system;
    ClickCounts exp_clicks;
    ClickCounts base_clicks;
    double reward_exp = 0.0;
    double reward_base = 0.0;
    std::optional<double> nreward_exp;
    std::optional<double> nreward_base;
};

inline constexpr const char* kAllExperimental = "All experimental systems";

struct Significance {
    Task task = Task::Ranking;
    std::string system;
    std::optional<TestResult> test;
    std::string note;  // reason when no test could be run
};

struct RankCorrelation {
    Task task = Task::Ranking;
    std::optional<CorrelationResult> result;
    std::string note;
};

struct SiteSummary {
    Task task = Task::Ranking;
    std::int64_t sessions = 0;
    std::int64_t impressions = 0;
    std::int64_t clicks = 0;
    double ctr = 0.0;
};

struct RoundReport {
    std::vector<SystemRoundStats> systems;
    std::vector<PairReward> rewards;
    std::vector<Significance> significance;
    std::vector<RankCorrelation> correlations;
    std::vector<SiteSummary> sites;
};

/// Description of the significance pairing written into every report.
inline constexpr const char* kSignificancePairing =
    "Wilcoxon signed-rank over per-impression (experimental clicks, baseline clicks) on clicked interleaved "
    "impressions; two-sided";

/// Per-system statistics, per-pair rewards, significance and the
/// judgment-vs-rank correlation. Experimental rows count only their own
/// impressions; a baseline row aggregates against every experimental system
/// of its task. Systems are ordered by task, baseline first, then by name.
RoundReport aggregate_round(const StoreSnapshot& snapshot, const RewardWeights& weights);

struct QueryStats {
    std::int64_t unique_queries = 0;
    double avg_query_length = 0.0;
    double queries_per_session = 0.0;
    double clicks_per_query = 0.0;
};

/// Ranking-task statistics over every served page (interleaved or
/// baseline-only). Length is in whitespace-separated terms, averaged over
/// unique queries; the other averages divide by the sessions with ranking
/// activity and by query occurrences.
QueryStats query_stats(const StoreSnapshot& snapshot);

struct QueryCount {
    std::string query;
    std::int64_t count = 0;
};

struct RankCtr {
    int rank = 0;  // 1-based page position
    std::int64_t shown = 0;
    std::int64_t clicked = 0;
    double ctr = 0.0;
};

struct Distributions {
    std::vector<QueryCount> impressions_per_query;  // descending, ties by query
    std::vector<RankCtr> ctr_by_rank;
    std::vector<std::pair<std::string, std::int64_t>> clicks_by_element;  // descending
};

/// Optional task filter; pages of both kinds count toward impressions per
/// query, only interleaved pages toward CTR by rank.
Distributions distributions(const StoreSnapshot& snapshot, const RewardWeights& weights,
                            std::optional<Task> task = std::nullopt);

/// Slope of log(count) against log(position) for a descending frequency
/// table, using entries with count >= min_count.
double loglog_slope(const std::vector<QueryCount>& table, std::int64_t min_count = 1);

}  // namespace livinglab
