#pragma once

// Team-Draft interleaving, click attribution and per-impression judgment.

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "livinglab/model.hpp"

namespace livinglab {

enum class JudgeResult { Win, Loss, Tie, NoClick };

std::string_view to_string(JudgeResult result);

/// Stream of "who picks first" decisions for the draft rounds.
class CoinSource {
public:
    static CoinSource seeded(std::uint64_t seed);
    /// Replays a fixed sequence; throws std::out_of_range when exhausted.
    static CoinSource scripted(std::vector<Team> first_pickers);

    Team next();

private:
    CoinSource() = default;

    std::optional<std::mt19937_64> rng_;
    std::vector<Team> script_;
    std::size_t cursor_ = 0;
};

/// Drafts at most `length` documents. Each round one coin decides which team
/// picks first, then each team appends its highest-ranked document not yet
/// drafted. Drafting stops at `length` or when both lists are used up.
InterleavedList team_draft_interleave(std::span<const std::string> exp_list,
                                      std::span<const std::string> base_list,
                                      std::size_t length,
                                      CoinSource& coin);

struct TeamClicks {
    int exp = 0;
    int base = 0;

    bool operator==(const TeamClicks&) const = default;
};

/// Counts every click for the team of the clicked document. Throws
/// DomainError when a click targets a document not in the list.
TeamClicks attribute_clicks(const InterleavedList& interleaved, std::span<const ClickEvent> clicks);

JudgeResult judge(int clicks_exp, int clicks_base);
inline JudgeResult judge(TeamClicks c) { return judge(c.exp, c.base); }

/// 1-based position of the first EXP entry.
std::optional<int> highest_exp_rank(const InterleavedList& interleaved);

/// Maps a judgment onto the +1 / -1 / 0 scale used for rank correlation;
/// nullopt for NoClick.
std::optional<int> judgment_score(JudgeResult result);

}  // namespace livinglab
