#include "livinglab/interleave.hpp"

#include <stdexcept>
#include <unordered_set>

namespace livinglab {

std::string_view to_string(JudgeResult result) {
    switch (result) {
        case JudgeResult::Win: return "WIN";
        case JudgeResult::Loss: return "LOSS";
        case JudgeResult::Tie: return "TIE";
        case JudgeResult::NoClick: return "NO_CLICK";
    }
    return "UNKNOWN";
}

CoinSource CoinSource::seeded(std::uint64_t seed) {
    CoinSource coin;
    coin.rng_.emplace(seed);
    return coin;
}

CoinSource CoinSource::scripted(std::vector<Team> first_pickers) {
    CoinSource coin;
    coin.script_ = std::move(first_pickers);
    return coin;
}

Team CoinSource::next() {
    if (rng_) return ((*rng_)() >> 63) != 0 ? Team::Exp : Team::Base;
    if (cursor_ >= script_.size()) throw std::out_of_range("scripted coin stream exhausted");
    return script_[cursor_++];
}

namespace {

class Drafter {
public:
    Drafter(std::span<const std::string> list, Team team) : list_(list), team_(team) {}

    bool has_next(const std::unordered_set<std::string>& used) {
        while (cursor_ < list_.size() && used.count(list_[cursor_])) ++cursor_;
        return cursor_ < list_.size();
    }

    // Appends this team's best unused document, if any.
    void pick(InterleavedList& out, std::unordered_set<std::string>& used) {
        if (!has_next(used)) return;
        used.insert(list_[cursor_]);
        out.entries.push_back({list_[cursor_], team_});
        ++cursor_;
    }

private:
    std::span<const std::string> list_;
    Team team_;
    std::size_t cursor_ = 0;
};

}  // namespace

InterleavedList team_draft_interleave(std::span<const std::string> exp_list,
                                      std::span<const std::string> base_list,
                                      std::size_t length,
                                      CoinSource& coin) {
    InterleavedList out;
    std::unordered_set<std::string> used;
    Drafter exp(exp_list, Team::Exp);
    Drafter base(base_list, Team::Base);
    while (out.entries.size() < length && (exp.has_next(used) || base.has_next(used))) {
        const Team first = coin.next();
        Drafter& a = first == Team::Exp ? exp : base;
        Drafter& b = first == Team::Exp ? base : exp;
        a.pick(out, used);
        if (out.entries.size() < length) b.pick(out, used);
    }
    return out;
}

TeamClicks attribute_clicks(const InterleavedList& interleaved, std::span<const ClickEvent> clicks) {
    TeamClicks counts;
    for (const auto& click : clicks) {
        auto pos = interleaved.position_of(click.doc_id);
        if (!pos) throw DomainError("click on document '" + click.doc_id + "' which is not in the interleaved list");
        if (interleaved.entries[*pos].team == Team::Exp) {
            ++counts.exp;
        } else {
            ++counts.base;
        }
    }
    return counts;
}

JudgeResult judge(int clicks_exp, int clicks_base) {
    if (clicks_exp > clicks_base) return JudgeResult::Win;
    if (clicks_exp < clicks_base) return JudgeResult::Loss;
    return clicks_exp > 0 ? JudgeResult::Tie : JudgeResult::NoClick;
}

std::optional<int> highest_exp_rank(const InterleavedList& interleaved) {
    for (std::size_t i = 0; i < interleaved.entries.size(); ++i) {
        if (interleaved.entries[i].team == Team::Exp) return static_cast<int>(i) + 1;
    }
    return std::nullopt;
}

std::optional<int> judgment_score(JudgeResult result) {
    switch (result) {
        case JudgeResult::Win: return 1;
        case JudgeResult::Loss: return -1;
        case JudgeResult::Tie: return 0;
        case JudgeResult::NoClick: return std::nullopt;
    }
    return std::nullopt;
}

}  // namespace livinglab
