// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Each check recomputes its evidence from scratch.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "livinglab/ingest.hpp"
#include "livinglab/interleave.hpp"
#include "livinglab/metrics.hpp"
#include "livinglab/report.hpp"
#include "livinglab/stats.hpp"
#include "support/oracles.hpp"
#include "support/round_tables.hpp"
#include "support/sim_harness.hpp"
#include "support/temp_dir.hpp"

using namespace livinglab;
using livinglab::testing::fixture;
using livinglab::testing::TempDir;

namespace {

struct Verdict {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok && pass) {
            pass = false;
            detail = what;
        }
    }
};

double round_to(double v, int decimals) {
    const double f = std::pow(10.0, decimals);
    return std::round(v * f) / f;
}

std::string num(double v, int decimals = 4) { return fixed(v, decimals); }

// --- 1 ---------------------------------------------------------------------

Verdict table_outcome_ctr() {
    Verdict v;
    int checked = 0;
    for (const auto* round : {&tables::kRound1, &tables::kRound2}) {
        for (const auto& row : *round) {
            const double o = round_to(*outcome(row.win, row.loss), 2);
            const double c = round_to(ctr(row.clicks, row.impressions), 4);
            v.require(o == row.printed_outcome, std::string(row.system) + " outcome " + num(o, 2));
            v.require(c == row.printed_ctr, std::string(row.system) + " ctr " + num(c));
            checked += 2;
        }
    }
    for (const auto& s : tables::kSites) {
        const double c = round_to(ctr(s.clicks, s.impressions), 4);
        v.require(c == s.printed_ctr, std::string(s.label) + " ctr " + num(c));
        ++checked;
    }
    if (v.pass) v.detail = std::to_string(checked) + " printed values reproduced";
    return v;
}

// --- 2 ---------------------------------------------------------------------

Verdict table_nreward() {
    Verdict v;
    const auto w = RewardWeights::defaults();
    double worst = 0;
    for (const auto& p : tables::kRewardPairs) {
        const double re = reward({p.exp.begin(), p.exp.end()}, w);
        const double rb = reward({p.base.begin(), p.base.end()}, w);
        const double ne = *nreward(re, rb), nb = *nreward(rb, re);
        worst = std::max({worst, std::abs(ne - p.printed_nreward_exp), std::abs(nb - p.printed_nreward_base)});
        v.require(std::abs(ne - p.printed_nreward_exp) <= 1e-4 && std::abs(nb - p.printed_nreward_base) <= 1e-4,
                  std::string(p.exp_system) + " nReward " + num(ne) + "/" + num(nb));
    }
    if (v.pass) v.detail = std::to_string(tables::kRewardPairs.size()) + " pairs, max deviation " + num(worst, 6);
    return v;
}

// --- 3 ---------------------------------------------------------------------

// Checks one interleaving against the structural properties. The balance
// rule: a team may fall two picks behind only when it had nothing left.
std::string tdi_violation(const std::vector<std::string>& a, const std::vector<std::string>& b, std::size_t k,
                          const InterleavedList& out) {
    std::set<std::string> uni(a.begin(), a.end());
    uni.insert(b.begin(), b.end());
    if (out.entries.size() != std::min(k, uni.size())) return "wrong length";
    std::set<std::string> drafted;
    int ne = 0, nb = 0;
    auto has_left = [&](const std::vector<std::string>& list) {
        return std::any_of(list.begin(), list.end(), [&](const auto& d) { return !drafted.count(d); });
    };
    for (const auto& e : out.entries) {
        const auto& own = e.team == Team::Exp ? a : b;
        if (std::find(own.begin(), own.end(), e.doc_id) == own.end()) return "document outside its team's list";
        const bool other_had = has_left(e.team == Team::Exp ? b : a);
        if (!drafted.insert(e.doc_id).second) return "duplicate document";
        (e.team == Team::Exp ? ne : nb) += 1;
        const int lead = e.team == Team::Exp ? ne - nb : nb - ne;
        if (lead > 1 && other_had) return "prefix imbalance";
    }
    return {};
}

Verdict tdi_suite() {
    Verdict v;
    std::mt19937_64 rng(20210301);
    std::vector<std::string> universe;
    for (int i = 0; i < 20; ++i) universe.push_back("d" + std::to_string(i));
    for (int trial = 0; trial < 10000 && v.pass; ++trial) {
        std::shuffle(universe.begin(), universe.end(), rng);
        const std::size_t na = rng() % 13, nb = rng() % 13;
        std::vector<std::string> a(universe.begin(), universe.begin() + static_cast<long>(na));
        std::shuffle(universe.begin(), universe.end(), rng);
        std::vector<std::string> b(universe.begin(), universe.begin() + static_cast<long>(nb));
        const std::size_t k = 1 + rng() % 15;
        const auto seed = rng();
        auto c1 = CoinSource::seeded(seed), c2 = CoinSource::seeded(seed), c3 = CoinSource::seeded(seed);
        const auto out = team_draft_interleave(a, b, k, c1);
        const auto why = tdi_violation(a, b, k, out);
        v.require(why.empty(), "instance " + std::to_string(trial) + ": " + why);
        v.require(out.entries == team_draft_interleave(a, b, k, c2).entries, "nondeterministic output");
        const auto same = team_draft_interleave(a, a, k, c3);
        for (std::size_t i = 0; i < same.entries.size(); ++i) {
            v.require(same.entries[i].doc_id == a[i], "identical inputs reordered");
        }
    }
    // Every list pair with |A|, |B| <= 3 over four documents, every coin
    // stream, against the pick-by-pick distribution.
    const auto lists = oracle::all_lists({"d1", "d2", "d3", "d4"}, 3);
    std::size_t cases = 0;
    for (const auto& a : lists) {
        for (const auto& b : lists) {
            for (std::size_t k = 1; k <= 6 && v.pass; ++k) {
                std::map<oracle::Labelled, double> got;
                for (unsigned mask = 0; mask < 64; ++mask) {
                    std::vector<Team> stream;
                    for (int i = 0; i < 6; ++i) stream.push_back(mask >> i & 1U ? Team::Exp : Team::Base);
                    auto coin = CoinSource::scripted(stream);
                    const auto out = team_draft_interleave(a, b, k, coin);
                    oracle::Labelled l;
                    for (const auto& e : out.entries) l.emplace_back(e.doc_id, e.team);
                    got[l] += 1.0 / 64;
                }
                v.require(got == oracle::tdi_distribution(a, b, k), "exhaustive mismatch");
                ++cases;
            }
        }
    }
    if (v.pass) v.detail = "10000 random instances, " + std::to_string(cases) + " exhaustive (A, B, k) cases";
    return v;
}

// --- 4 ---------------------------------------------------------------------

Verdict stats_oracles() {
    Verdict v;
    const std::vector<std::pair<double, double>> three{{1, 0}, {2, 0}, {3, 0}};
    v.require(wilcoxon_signed_rank(three).p_value == 0.25, "[1,2,3] p != 0.25");

    std::mt19937_64 rng(4);
    std::uniform_int_distribution<int> grid(-5, 5);
    std::size_t wilcoxon_cases = 0;
    double worst = 0;
    for (std::size_t n = 1; n <= 10; ++n) {
        for (int rep = 0; rep < 600; ++rep) {
            std::vector<double> d(n);
            for (auto& x : d) x = grid(rng) * 0.5;
            if (std::all_of(d.begin(), d.end(), [](double x) { return x == 0; })) continue;
            std::vector<std::pair<double, double>> pairs;
            for (double x : d) pairs.emplace_back(x, 0.0);
            const double got = wilcoxon_signed_rank(pairs, WilcoxonMethod::Exact).p_value;
            const double want = oracle::signed_rank_enumeration_p(d);
            worst = std::max(worst, std::abs(got - want));
            ++wilcoxon_cases;
        }
    }
    v.require(worst <= 1e-12, "wilcoxon deviation " + num(worst, 15));

    // Spearman is invariant under a joint permutation of (x, y), so sorted x
    // with every y covers every input pair up to reordering.
    std::size_t spearman_cases = 0;
    double sworst = 0;
    bool threw_on_constant = true;
    for (std::size_t n = 3; n <= 8; ++n) {
        std::vector<double> x(n), y(n);
        std::function<void(std::size_t, int)> xs = [&](std::size_t i, int lo) {
            if (i < n) {
                for (int val = lo; val <= 3; ++val) {
                    x[i] = val;
                    xs(i + 1, val);
                }
                return;
            }
            const bool x_const = x.front() == x.back();
            std::vector<int> idx(n, 1);
            while (true) {
                for (std::size_t j = 0; j < n; ++j) y[j] = idx[j];
                const bool y_const = std::all_of(y.begin(), y.end(), [&](double e) { return e == y[0]; });
                if (x_const || y_const) {
                    try {
                        spearman(x, y);
                        threw_on_constant = false;
                    } catch (const DomainError&) {
                    }
                } else {
                    sworst = std::max(sworst, std::abs(spearman(x, y).rho - oracle::spearman_rho(x, y)));
                    ++spearman_cases;
                }
                std::size_t j = 0;
                while (j < n && idx[j] == 3) idx[j++] = 1;
                if (j == n) break;
                ++idx[j];
            }
        };
        xs(0, 1);
    }
    v.require(sworst <= 1e-12, "spearman deviation " + num(sworst, 15));
    v.require(threw_on_constant, "constant input accepted");
    if (v.pass) {
        v.detail = std::to_string(wilcoxon_cases) + " signed-rank vectors, " + std::to_string(spearman_cases) +
                   " rank pairs";
    }
    return v;
}

// --- 5 ---------------------------------------------------------------------

Verdict fairness() {
    Verdict v;
    testing::SimSetup same;
    same.traffic.sessions = 10000;
    same.traffic.seed = 505;
    const auto even = testing::run_synthetic(same);
    v.require(!even.summary.aborted, "simulation aborted: " + even.summary.error);
    const auto o_even = even.stats("exp").outcome.value_or(-1);
    v.require(o_even >= 0.45 && o_even <= 0.55, "identical systems outcome " + num(o_even));

    testing::SimSetup skew = same;
    skew.traffic.seed = 506;
    skew.model.attractiveness = {{"exp", 0.8}, {"base", 0.2}};
    const auto better = testing::run_synthetic(skew);
    const auto o_better = better.stats("exp").outcome.value_or(-1);
    double p = 1;
    for (const auto& s : better.report.significance) {
        if (s.system == "exp" && s.test) p = s.test->p_value;
    }
    v.require(o_better > 0.55, "attractive system outcome " + num(o_better));
    v.require(p < 0.01, "wilcoxon p " + std::to_string(p));
    if (v.pass) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "identical %.4f over %zu sessions; 0.8 vs 0.2 outcome %.4f, p=%.3g",
                      o_even, even.summary.sessions, o_better, p);
        v.detail = buf;
    }
    return v;
}

// --- 6 ---------------------------------------------------------------------

Verdict distributional() {
    Verdict v;
    testing::SimSetup s;
    s.queries = 100;
    s.traffic.sessions = 10000;
    s.traffic.zipf_exponent = 1.0;
    s.traffic.seed = 606;
    const auto run = testing::run_synthetic(s);
    const auto d = distributions(run.snapshot, RewardWeights::defaults(), Task::Ranking);
    const double slope = loglog_slope(d.impressions_per_query);
    v.require(std::abs(slope + 1.0) <= 0.15, "log-log slope " + num(slope));
    for (std::size_t i = 1; i < d.ctr_by_rank.size(); ++i) {
        v.require(d.ctr_by_rank[i].ctr <= d.ctr_by_rank[i - 1].ctr,
                  "ctr rises at rank " + std::to_string(d.ctr_by_rank[i].rank));
    }
    if (v.pass && !d.ctr_by_rank.empty()) {
        v.detail = "slope " + num(slope) + " over " + std::to_string(d.impressions_per_query.size()) +
                   " queries; ctr rank1 " + num(d.ctr_by_rank.front().ctr) + " -> rank" +
                   std::to_string(d.ctr_by_rank.back().rank) + " " + num(d.ctr_by_rank.back().ctr);
    }
    return v;
}

// --- 7 ---------------------------------------------------------------------

Verdict conservation() {
    Verdict v;
    TempDir dir;
    const auto log = dir / "feedback.jsonl";
    testing::SimSetup s;
    s.variant = testing::Variant::Reversed;
    s.traffic.sessions = 1000;
    s.traffic.seed = 707;
    s.store = FeedbackStore::open(log);
    const auto run = testing::run_synthetic(s);

    const auto snap = load_snapshot(log);
    v.require(snap.impressions.size() == run.summary.impressions, "stored impressions differ from responses");
    v.require(snap.traffic.size() == run.summary.baseline_only, "baseline-only pages differ");
    std::map<std::string, const Impression*> by_id;
    for (const auto& imp : snap.impressions) by_id[imp.impression_id] = &imp;
    std::size_t clicks = 0;
    for (const auto& fb : snap.feedback) {
        auto it = by_id.find(fb.impression_id);
        v.require(it != by_id.end(), "feedback for unknown impression " + fb.impression_id);
        if (it == by_id.end()) continue;
        for (const auto& c : fb.clicks) {
            v.require(it->second->interleaved.position_of(c.doc_id).has_value(), "click outside impression");
            ++clicks;
        }
    }
    v.require(clicks == run.summary.clicks, "click totals differ");

    const auto by_imp = snap.clicks_by_impression();
    std::int64_t clicked = 0;
    for (const auto& imp : snap.impressions) {
        if (by_imp.count(imp.impression_id) && !by_imp.at(imp.impression_id).empty()) ++clicked;
    }
    const auto report = aggregate_round(snap, RewardWeights::defaults());
    std::int64_t wlt = 0;
    for (const auto& sys : report.systems) {
        if (!sys.is_baseline) wlt += sys.wins + sys.losses + sys.ties;
    }
    v.require(wlt == clicked, "W+L+T " + std::to_string(wlt) + " vs clicked " + std::to_string(clicked));

    const auto w = RewardWeights::defaults();
    const auto first = evaluate_log(log, w, dir / "eval1");
    evaluate_log(log, w, dir / "eval2");
    for (const auto& f : first.files) {
        const auto a = testing::read_file(f);
        const auto b = testing::read_file(dir / "eval2" / f.filename());
        v.require(!a.empty() && a == b, "rerun differs in " + f.filename().string());
    }
    if (v.pass) {
        v.detail = std::to_string(snap.impressions.size()) + " impressions, " + std::to_string(clicked) +
                   " clicked = W+L+T, " + std::to_string(first.files.size()) + " report files identical";
    }
    return v;
}

// --- 8 ---------------------------------------------------------------------

Verdict format_fidelity() {
    Verdict v;
    TempDir dir;
    const auto run = parse_run_file(fixture("runs/valid.txt"));
    std::ostringstream out;
    write_run_file(out, run);
    const auto again = parse_run_file(dir.write("run.txt", out.str()));
    v.require(again == run, "run file round trip");
    std::ostringstream out2;
    write_run_file(out2, again);
    v.require(out2.str() == out.str(), "run file serialization unstable");

    for (Task task : {Task::Ranking, Task::Recommendation}) {
        const auto name = task == Task::Ranking ? "candidates/ranking.jsonl" : "candidates/recommendation.jsonl";
        const auto lists = parse_candidates(fixture(name), task);
        std::ostringstream o1, o2;
        write_candidates(o1, lists, task);
        const auto back = parse_candidates(dir.write("c.jsonl", o1.str()), task);
        write_candidates(o2, back, task);
        v.require(o1.str() == o2.str() && back.size() == lists.size(), std::string(name) + " round trip");
        for (const auto& [key, l] : lists) {
            const auto& b = back.at(key).candidates;
            v.require(b.size() == l.candidates.size(), std::string(name) + " size");
            for (std::size_t i = 0; i < b.size() && i < l.candidates.size(); ++i) {
                v.require(b[i].doc_id == l.candidates[i].doc_id && b[i].score == l.candidates[i].score,
                          std::string(name) + " entry");
            }
        }
    }

    std::ifstream manifest(fixture("runs/manifest.tsv"));
    int rejected = 0, total = 0;
    for (std::string row; std::getline(manifest, row);) {
        if (row.empty() || row[0] == '#') continue;
        std::string name;
        std::size_t line = 0;
        std::istringstream(row) >> name >> line;
        ++total;
        const auto report = validate_run_file(fixture("runs/" + name), std::nullopt);
        const bool ok = !report.ok && !report.line_errors.empty() && report.line_errors.front().line == line;
        v.require(ok, name + " not rejected at line " + std::to_string(line));
        rejected += ok;
    }
    v.require(total == 12, "expected 12 malformed fixtures, found " + std::to_string(total));
    if (v.pass) v.detail = "run + 2 candidate formats round-trip; " + std::to_string(rejected) + "/12 fixtures rejected";
    return v;
}

// --- 9 ---------------------------------------------------------------------

Verdict rank_bias() {
    Verdict v;
    testing::SimSetup s;
    s.traffic.sessions = 5000;
    s.traffic.seed = 909;
    const auto run = testing::run_synthetic(s);
    const RankCorrelation* corr = nullptr;
    for (const auto& c : run.report.correlations) {
        if (c.task == Task::Ranking) corr = &c;
    }
    v.require(corr && corr->result, "no correlation computed");
    if (!v.pass) return v;
    const auto& r = *corr->result;
    v.require(r.rho < 0, "rho " + num(r.rho));
    v.require(r.p_value < 0.01, "p " + std::to_string(r.p_value));
    char buf[120];
    std::snprintf(buf, sizeof buf, "rho=%.4f p=%.3g n=%zu", r.rho, r.p_value, r.n);
    if (v.pass) v.detail = buf;
    return v;
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        Verdict (*run)();
    };
    const Criterion criteria[] = {
        {1, "table oracle: outcome and ctr", table_outcome_ctr},
        {2, "table oracle: nreward", table_nreward},
        {3, "team-draft property suite", tdi_suite},
        {4, "statistical oracles", stats_oracles},
        {5, "fairness end-to-end", fairness},
        {6, "distributional shape", distributional},
        {7, "conservation end-to-end", conservation},
        {8, "format fidelity", format_fidelity},
        {9, "rank-bias correlation", rank_bias},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = c.run();
        } catch (const std::exception& e) {
            v.pass = false;
            v.detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("%s criterion %d (%s): %s [%.2fs]\n", v.pass ? "PASS" : "FAIL", c.id, c.name, v.detail.c_str(),
                    secs);
        std::fflush(stdout);
        failures += !v.pass;
    }
    std::printf("%d/9 criteria passed\n", 9 - failures);
    return failures == 0 ? 0 : 1;
}
