#pragma once

// Deterministic report files for one evaluation round.

#include <filesystem>
#include <string>
#include <vector>

#include "livinglab/metrics.hpp"

namespace livinglab {

struct EvaluationResult {
    RoundReport round;
    QueryStats queries;
    Distributions distributions;
    std::vector<std::filesystem::path> files;
};

/// Reads a feedback log and writes into `out_dir`:
///   round_report.json     everything below at full precision
///   round_report.csv      per-system Sessions..Outcome plus Wilcoxon p
///   reward_report.csv     per-element clicks, Total Clicks, Reward, nReward
///   query_stats.json
///   impressions_per_query.csv, ctr_by_rank.csv, clicks_by_element.csv
/// CSV values are rounded: Outcome to 2 decimals, CTR and nReward to 4.
/// Output depends only on the inputs, so reruns are byte-identical.
EvaluationResult evaluate_log(const std::filesystem::path& feedback_log, const RewardWeights& weights,
                              const std::filesystem::path& out_dir);

EvaluationResult evaluate_snapshot(const StoreSnapshot& snapshot, const RewardWeights& weights,
                                   const std::filesystem::path& out_dir);

/// Fixed-point text with `decimals` digits.
std::string fixed(double value, int decimals);

}  // namespace livinglab
