#include "livinglab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "livinglab/interleave.hpp"

namespace livinglab {

RewardWeights RewardWeights::defaults() {
    RewardWeights w;
    w.weights = {{"Bookmark", 10.0}, {"Order", 10.0}, {"Fulltext", 8.0}, {"In Stock", 8.0},
                 {"More Links", 2.0}, {"Title", 1.0},  {"Details", 1.0}};
    return w;
}

RewardWeights RewardWeights::from_json(const Json& doc) {
    if (!doc.is_object()) throw DomainError("weights must be a JSON object");
    RewardWeights w;
    const Json* table = &doc;
    if (auto it = doc.find("weights"); it != doc.end()) {
        table = &*it;
        if (auto d = doc.find("default_element"); d != doc.end()) {
            if (!d->is_string()) throw DomainError("'default_element' must be a string");
            w.default_element = d->get<std::string>();
        }
        if (auto d = doc.find("default_weight"); d != doc.end()) {
            if (!d->is_number()) throw DomainError("'default_weight' must be a number");
            w.default_weight = d->get<double>();
        }
    }
    if (!table->is_object()) throw DomainError("'weights' must be an object");
    for (const auto& [name, value] : table->items()) {
        if (!value.is_number()) throw DomainError("weight for '" + name + "' must be a number");
        w.weights[name] = value.get<double>();
    }
    w.validate();
    return w;
}

RewardWeights RewardWeights::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DomainError("cannot open weights file " + path.string());
    Json doc;
    try {
        doc = Json::parse(in);
    } catch (const Json::exception& e) {
        throw DomainError("weights file " + path.string() + ": " + e.what());
    }
    return from_json(doc);
}

Json RewardWeights::to_json() const {
    return {{"weights", weights}, {"default_element", default_element}, {"default_weight", default_weight}};
}

double RewardWeights::weight_of(const std::string& element) const {
    auto it = weights.find(canonical(element));
    return it == weights.end() ? default_weight : it->second;
}

std::string RewardWeights::canonical(const std::string& element) const {
    return element.empty() ? default_element : element;
}

void RewardWeights::validate() const {
    if (weights.empty()) throw DomainError("weight table is empty");
    auto check = [](const std::string& name, double v) {
        if (!std::isfinite(v) || v < 0.0) throw DomainError("weight for '" + name + "' must be finite and non-negative");
    };
    for (const auto& [name, v] : weights) check(name, v);
    check(default_element, default_weight);
}

std::optional<double> outcome(std::int64_t wins, std::int64_t losses) {
    if (wins < 0 || losses < 0) throw DomainError("negative win/loss count");
    if (wins + losses == 0) return std::nullopt;
    return static_cast<double>(wins) / static_cast<double>(wins + losses);
}

double ctr(std::int64_t clicks, std::int64_t impressions) {
    if (impressions < 0 || clicks < 0) throw DomainError("negative click/impression count");
    return impressions == 0 ? 0.0 : static_cast<double>(clicks) / static_cast<double>(impressions);
}

double reward(const ClickCounts& counts, const RewardWeights& weights) {
    double sum = 0.0;
    for (const auto& [element, n] : counts) {
        if (n < 0) throw DomainError("negative click count for '" + element + "'");
        sum += weights.weight_of(element) * static_cast<double>(n);
    }
    return sum;
}

std::optional<double> nreward(double reward_exp, double reward_base) {
    if (reward_exp < 0.0 || reward_base < 0.0) throw DomainError("negative reward");
    const double total = reward_exp + reward_base;
    if (total == 0.0) return std::nullopt;
    return reward_exp / total;
}

namespace {

struct SystemKey {
    Task task;
    std::string name;
    auto operator<=>(const SystemKey&) const = default;
};

struct Accum {
    std::set<std::string> sessions;
    std::int64_t impressions = 0;
    std::int64_t clicks = 0;
    std::int64_t wins = 0;
    std::int64_t losses = 0;
    std::int64_t ties = 0;
};

struct PairAccum {
    ClickCounts exp;
    ClickCounts base;
};

const std::vector<ClickEvent>& clicks_of(const std::unordered_map<std::string, std::vector<ClickEvent>>& by_imp,
                                         const std::string& id) {
    static const std::vector<ClickEvent> none;
    auto it = by_imp.find(id);
    return it == by_imp.end() ? none : it->second;
}

SystemRoundStats finish(const SystemKey& key, bool baseline, const Accum& a) {
    SystemRoundStats s;
    s.system = key.name;
    s.is_baseline = baseline;
    s.task = key.task;
    s.sessions = static_cast<std::int64_t>(a.sessions.size());
    s.impressions = a.impressions;
    s.clicks = a.clicks;
    s.ctr = ctr(a.clicks, a.impressions);
    s.wins = a.wins;
    s.losses = a.losses;
    s.ties = a.ties;
    s.outcome = outcome(a.wins, a.losses);
    return s;
}

PairReward make_pair(Task task, std::string exp, std::string base, const PairAccum& p, const RewardWeights& w) {
    PairReward r;
    r.task = task;
    r.exp_system = std::move(exp);
    r.base_system = std::move(base);
    r.exp_clicks = p.exp;
    r.base_clicks = p.base;
    r.reward_exp = reward(p.exp, w);
    r.reward_base = reward(p.base, w);
    r.nreward_exp = nreward(r.reward_exp, r.reward_base);
    r.nreward_base = nreward(r.reward_base, r.reward_exp);
    return r;
}

}  // namespace

RoundReport aggregate_round(const StoreSnapshot& snapshot, const RewardWeights& weights) {
    const auto by_imp = snapshot.clicks_by_impression();

    std::map<SystemKey, Accum> exp_acc;
    std::map<SystemKey, Accum> base_acc;
    std::map<std::pair<SystemKey, std::string>, PairAccum> pairs;  // (exp key, base name)
    std::map<std::pair<Task, std::string>, PairAccum> base_totals;
    std::map<SystemKey, std::vector<std::pair<double, double>>> click_pairs;
    std::map<Task, std::pair<std::vector<double>, std::vector<double>>> rank_bias;
    std::map<Task, Accum> site;

    for (const auto& imp : snapshot.impressions) {
        const auto& list = imp.interleaved;
        const SystemKey ek{imp.task, list.exp_system};
        const SystemKey bk{imp.task, list.base_system};
        const auto& clicks = clicks_of(by_imp, imp.impression_id);
        const TeamClicks tc = attribute_clicks(list, clicks);
        const JudgeResult verdict = judge(tc);

        Accum& e = exp_acc[ek];
        Accum& b = base_acc[bk];
        Accum& s = site[imp.task];
        for (Accum* a : {&e, &b, &s}) {
            a->sessions.insert(imp.session_id);
            ++a->impressions;
        }
        e.clicks += tc.exp;
        b.clicks += tc.base;
        s.clicks += tc.exp + tc.base;
        switch (verdict) {
            case JudgeResult::Win: ++e.wins; ++b.losses; break;
            case JudgeResult::Loss: ++e.losses; ++b.wins; break;
            case JudgeResult::Tie: ++e.ties; ++b.ties; break;
            case JudgeResult::NoClick: break;
        }

        PairAccum& pa = pairs[{ek, list.base_system}];
        PairAccum& total = base_totals[{imp.task, list.base_system}];
        for (const auto& c : clicks) {
            const auto pos = list.position_of(c.doc_id);
            const std::string element = weights.canonical(c.serp_element);
            if (list.entries[*pos].team == Team::Exp) {
                ++pa.exp[element];
                ++total.exp[element];
            } else {
                ++pa.base[element];
                ++total.base[element];
            }
        }

        if (verdict != JudgeResult::NoClick) {
            click_pairs[ek].emplace_back(tc.exp, tc.base);
            if (auto rank = highest_exp_rank(list)) {
                auto& rb = rank_bias[imp.task];
                rb.first.push_back(*judgment_score(verdict));
                rb.second.push_back(*rank);
            }
        } else {
            click_pairs[ek];
        }
    }

    RoundReport report;
    for (Task task : {Task::Ranking, Task::Recommendation}) {
        for (const auto& [key, acc] : base_acc) {
            if (key.task == task) report.systems.push_back(finish(key, true, acc));
        }
        for (const auto& [key, acc] : exp_acc) {
            if (key.task == task) report.systems.push_back(finish(key, false, acc));
        }
        for (const auto& [key, p] : pairs) {
            if (key.first.task == task) report.rewards.push_back(make_pair(task, key.first.name, key.second, p, weights));
        }
        for (const auto& [key, p] : base_totals) {
            if (key.first == task) report.rewards.push_back(make_pair(task, kAllExperimental, key.second, p, weights));
        }
        for (const auto& [key, samples] : click_pairs) {
            if (key.task != task) continue;
            Significance sig;
            sig.task = task;
            sig.system = key.name;
            if (samples.empty()) {
                sig.note = "no clicked impressions";
            } else {
                try {
                    sig.test = wilcoxon_signed_rank(samples);
                } catch (const DomainError& e) {
                    sig.note = e.what();
                }
            }
            report.significance.push_back(std::move(sig));
        }
        if (auto it = site.find(task); it != site.end()) {
            SiteSummary summary;
            summary.task = task;
            summary.sessions = static_cast<std::int64_t>(it->second.sessions.size());
            summary.impressions = it->second.impressions;
            summary.clicks = it->second.clicks;
            summary.ctr = ctr(summary.clicks, summary.impressions);
            report.sites.push_back(summary);

            RankCorrelation corr;
            corr.task = task;
            auto rb = rank_bias.find(task);
            if (rb == rank_bias.end()) {
                corr.note = "no clicked impressions";
            } else {
                try {
                    corr.result = spearman(rb->second.first, rb->second.second);
                } catch (const DomainError& e) {
                    corr.note = e.what();
                }
            }
            report.correlations.push_back(std::move(corr));
        }
    }
    return report;
}

namespace {

std::size_t term_count(const std::string& q) {
    std::istringstream in(q);
    std::size_t n = 0;
    for (std::string t; in >> t;) ++n;
    return n;
}

}  // namespace

QueryStats query_stats(const StoreSnapshot& snapshot) {
    const auto by_imp = snapshot.clicks_by_impression();
    std::set<std::string> unique;
    std::set<std::string> sessions;
    std::int64_t occurrences = 0;
    std::int64_t clicks = 0;
    for (const auto& imp : snapshot.impressions) {
        if (imp.task != Task::Ranking) continue;
        unique.insert(imp.query_or_item);
        sessions.insert(imp.session_id);
        ++occurrences;
        clicks += static_cast<std::int64_t>(clicks_of(by_imp, imp.impression_id).size());
    }
    for (const auto& t : snapshot.traffic) {
        if (t.task != Task::Ranking) continue;
        unique.insert(t.query_or_item);
        sessions.insert(t.session_id);
        ++occurrences;
    }
    QueryStats stats;
    stats.unique_queries = static_cast<std::int64_t>(unique.size());
    if (!unique.empty()) {
        std::size_t terms = 0;
        for (const auto& q : unique) terms += term_count(q);
        stats.avg_query_length = static_cast<double>(terms) / static_cast<double>(unique.size());
    }
    if (!sessions.empty()) {
        stats.queries_per_session = static_cast<double>(occurrences) / static_cast<double>(sessions.size());
    }
    if (occurrences > 0) stats.clicks_per_query = static_cast<double>(clicks) / static_cast<double>(occurrences);
    return stats;
}

Distributions distributions(const StoreSnapshot& snapshot, const RewardWeights& weights, std::optional<Task> task) {
    const auto by_imp = snapshot.clicks_by_impression();
    auto wanted = [&](Task t) { return !task || *task == t; };

    std::map<std::string, std::int64_t> per_query;
    std::map<int, RankCtr> per_rank;
    std::map<std::string, std::int64_t> per_element;

    for (const auto& imp : snapshot.impressions) {
        if (!wanted(imp.task)) continue;
        ++per_query[imp.query_or_item];
        const auto& list = imp.interleaved;
        std::vector<bool> hit(list.entries.size(), false);
        for (const auto& c : clicks_of(by_imp, imp.impression_id)) {
            if (auto pos = list.position_of(c.doc_id)) hit[*pos] = true;
            ++per_element[weights.canonical(c.serp_element)];
        }
        for (std::size_t i = 0; i < list.entries.size(); ++i) {
            RankCtr& r = per_rank[static_cast<int>(i) + 1];
            ++r.shown;
            if (hit[i]) ++r.clicked;
        }
    }
    for (const auto& t : snapshot.traffic) {
        if (wanted(t.task)) ++per_query[t.query_or_item];
    }

    Distributions d;
    for (const auto& [q, n] : per_query) d.impressions_per_query.push_back({q, n});
    std::stable_sort(d.impressions_per_query.begin(), d.impressions_per_query.end(),
                     [](const QueryCount& a, const QueryCount& b) { return a.count > b.count; });
    for (auto& [rank, r] : per_rank) {
        r.rank = rank;
        r.ctr = ctr(r.clicked, r.shown);
        d.ctr_by_rank.push_back(r);
    }
    d.clicks_by_element.assign(per_element.begin(), per_element.end());
    std::stable_sort(d.clicks_by_element.begin(), d.clicks_by_element.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    return d;
}

double loglog_slope(const std::vector<QueryCount>& table, std::int64_t min_count) {
    std::vector<double> x;
    std::vector<double> y;
    for (std::size_t i = 0; i < table.size(); ++i) {
        if (table[i].count < std::max<std::int64_t>(min_count, 1)) continue;
        x.push_back(std::log(static_cast<double>(i + 1)));
        y.push_back(std::log(static_cast<double>(table[i].count)));
    }
    return ols_slope(x, y);
}

}  // namespace livinglab
