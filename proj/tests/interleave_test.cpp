#include <gtest/gtest.h>

#include <random>
#include <set>

#include "livinglab/interleave.hpp"
#include "support/oracles.hpp"

using namespace livinglab;

namespace {

std::vector<std::string> docs(std::initializer_list<const char*> ids) { return {ids.begin(), ids.end()}; }

std::vector<Team> labels(const InterleavedList& l) {
    std::vector<Team> out;
    for (const auto& e : l.entries) out.push_back(e.team);
    return out;
}

std::vector<std::string> ids(const InterleavedList& l) {
    std::vector<std::string> out;
    for (const auto& e : l.entries) out.push_back(e.doc_id);
    return out;
}

constexpr Team E = Team::Exp;
constexpr Team B = Team::Base;

}  // namespace

TEST(TeamDraft, HandDerivedDisjointLists) {
    const auto a = docs({"a1", "a2", "a3"});
    const auto b = docs({"b1", "b2", "b3"});
    auto coin = CoinSource::scripted({E, B, E});
    const auto out = team_draft_interleave(a, b, 6, coin);
    EXPECT_EQ(ids(out), docs({"a1", "b1", "b2", "a2", "a3", "b3"}));
    EXPECT_EQ(labels(out), (std::vector<Team>{E, B, B, E, E, B}));
}

TEST(TeamDraft, HandDerivedOverlapSkipsDraftedDocuments) {
    // b's top document was already drafted by EXP, so BASE takes its next one.
    const auto a = docs({"x", "y"});
    const auto b = docs({"x", "z"});
    auto coin = CoinSource::scripted({E, E});
    const auto out = team_draft_interleave(a, b, 4, coin);
    EXPECT_EQ(ids(out), docs({"x", "z", "y"}));
    EXPECT_EQ(labels(out), (std::vector<Team>{E, B, E}));
}

TEST(TeamDraft, StopsAtRequestedLength) {
    auto coin = CoinSource::scripted({B});
    const auto out = team_draft_interleave(docs({"a", "b", "c"}), docs({"d", "e"}), 1, coin);
    EXPECT_EQ(ids(out), docs({"d"}));
    EXPECT_EQ(labels(out), (std::vector<Team>{B}));
}

TEST(TeamDraft, ExhaustedTeamIsPassedOver) {
    auto coin = CoinSource::scripted({B, E, E});
    const auto out = team_draft_interleave(docs({"a"}), docs({"b", "c", "d"}), 10, coin);
    EXPECT_EQ(ids(out), docs({"b", "a", "c", "d"}));
    EXPECT_EQ(labels(out), (std::vector<Team>{B, E, B, B}));
}

TEST(TeamDraft, EmptyInputsGiveEmptyList) {
    auto coin = CoinSource::scripted({});
    EXPECT_TRUE(team_draft_interleave({}, {}, 10, coin).entries.empty());
}

TEST(TeamDraft, NoCoinSpentWhenNothingIsLeft) {
    // Two full rounds use exactly two coins; a third would throw.
    auto coin = CoinSource::scripted({E, B});
    EXPECT_NO_THROW(team_draft_interleave(docs({"a", "b"}), docs({"c", "d"}), 10, coin));
}

TEST(TeamDraft, ScriptedSourceThrowsWhenExhausted) {
    auto coin = CoinSource::scripted({E});
    coin.next();
    EXPECT_THROW(coin.next(), std::out_of_range);
}

TEST(TeamDraft, MatchesPickByPickDistributionExhaustively) {
    const auto lists = oracle::all_lists(docs({"d1", "d2", "d3", "d4"}), 3);
    std::size_t checked = 0;
    for (const auto& a : lists) {
        for (const auto& b : lists) {
            for (std::size_t k = 1; k <= a.size() + b.size(); ++k) {
                std::map<oracle::Labelled, double> got;
                constexpr int kRounds = 6;
                for (unsigned mask = 0; mask < (1U << kRounds); ++mask) {
                    std::vector<Team> stream;
                    for (int i = 0; i < kRounds; ++i) stream.push_back(mask >> i & 1U ? E : B);
                    auto coin = CoinSource::scripted(stream);
                    const auto out = team_draft_interleave(a, b, k, coin);
                    oracle::Labelled l;
                    for (const auto& e : out.entries) l.emplace_back(e.doc_id, e.team);
                    got[l] += 1.0 / (1U << kRounds);
                }
                ASSERT_EQ(got, oracle::tdi_distribution(a, b, k)) << "k=" << k;
                ++checked;
            }
        }
    }
    EXPECT_GT(checked, 5000U);
}

TEST(TeamDraft, RandomisedProperties) {
    std::mt19937_64 rng(424242);
    std::vector<std::string> universe;
    for (int i = 0; i < 15; ++i) universe.push_back("d" + std::to_string(i));
    for (int trial = 0; trial < 2000; ++trial) {
        std::shuffle(universe.begin(), universe.end(), rng);
        const std::size_t na = rng() % 11, nb = rng() % 11;
        std::vector<std::string> a(universe.begin(), universe.begin() + static_cast<long>(na));
        std::shuffle(universe.begin(), universe.end(), rng);
        std::vector<std::string> b(universe.begin(), universe.begin() + static_cast<long>(nb));
        const std::size_t k = 1 + rng() % 12;
        const std::uint64_t seed = rng();
        auto c1 = CoinSource::seeded(seed);
        auto c2 = CoinSource::seeded(seed);
        const auto out = team_draft_interleave(a, b, k, c1);
        EXPECT_EQ(out.entries, team_draft_interleave(a, b, k, c2).entries);

        std::set<std::string> uni(a.begin(), a.end());
        uni.insert(b.begin(), b.end());
        EXPECT_EQ(out.entries.size(), std::min(k, uni.size()));
        std::set<std::string> seen;
        for (const auto& e : out.entries) {
            EXPECT_TRUE(seen.insert(e.doc_id).second);
            const auto& own = e.team == E ? a : b;
            EXPECT_NE(std::find(own.begin(), own.end(), e.doc_id), own.end());
        }
    }
}

TEST(TeamDraft, IdenticalInputsReproduceTheList) {
    const auto a = docs({"a", "b", "c", "d", "e"});
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        auto coin = CoinSource::seeded(seed);
        EXPECT_EQ(ids(team_draft_interleave(a, a, 5, coin)), a);
    }
}

TEST(TeamDraft, IdenticalInputsGiveEachTeamHalfTheTopSlots) {
    const auto a = docs({"a", "b", "c", "d"});
    int exp_first = 0;
    for (std::uint64_t seed = 0; seed < 4000; ++seed) {
        auto coin = CoinSource::seeded(seed);
        if (team_draft_interleave(a, a, 4, coin).entries[0].team == E) ++exp_first;
    }
    EXPECT_NEAR(exp_first / 4000.0, 0.5, 0.03);
}

TEST(Attribution, CountsEveryClickForItsTeam) {
    InterleavedList l;
    l.entries = {{"a", E}, {"b", B}, {"c", E}};
    const std::vector<ClickEvent> clicks{{"a", "Title", {}}, {"c", "Details", {}}, {"b", "Title", {}}, {"a", "Details", {}}};
    EXPECT_EQ(attribute_clicks(l, clicks), (TeamClicks{3, 1}));
    const std::vector<ClickEvent> stray{{"zzz", "Title", {}}};
    EXPECT_THROW(attribute_clicks(l, stray), DomainError);
}

TEST(Judge, ComparesTeamClicks) {
    EXPECT_EQ(judge(2, 1), JudgeResult::Win);
    EXPECT_EQ(judge(0, 1), JudgeResult::Loss);
    EXPECT_EQ(judge(2, 2), JudgeResult::Tie);
    EXPECT_EQ(judge(0, 0), JudgeResult::NoClick);
    EXPECT_EQ(judgment_score(JudgeResult::Win), 1);
    EXPECT_EQ(judgment_score(JudgeResult::Loss), -1);
    EXPECT_EQ(judgment_score(JudgeResult::Tie), 0);
    EXPECT_FALSE(judgment_score(JudgeResult::NoClick));
    EXPECT_EQ(to_string(JudgeResult::Win), "WIN");
}

TEST(Judge, HighestExperimentalRank) {
    InterleavedList l;
    l.entries = {{"a", B}, {"b", B}, {"c", E}};
    EXPECT_EQ(highest_exp_rank(l), 3);
    l.entries = {{"a", B}};
    EXPECT_FALSE(highest_exp_rank(l));
}
