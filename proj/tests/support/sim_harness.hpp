#pragma once

// Synthetic site + BM25 baseline + gateway, driven by the simulator.

#include <functional>
#include <memory>

#include "livinglab/baseline.hpp"
#include "livinglab/gateway.hpp"
#include "livinglab/metrics.hpp"
#include "livinglab/simulator.hpp"

namespace livinglab::testing {

enum class Variant { Identical, Reversed };

struct SimRun {
    std::shared_ptr<FeedbackStore> store;
    SimulationSummary summary;
    StoreSnapshot snapshot;
    RoundReport report;
    std::vector<std::string> vocabulary;

    const SystemRoundStats& stats(const std::string& name) const {
        for (const auto& s : report.systems) {
            if (s.system == name) return s;
        }
        throw std::out_of_range("no row for " + name);
    }
};

struct SimSetup {
    std::size_t documents = 400;
    std::size_t queries = 200;
    std::uint64_t site_seed = 11;
    Variant variant = Variant::Identical;
    TrafficConfig traffic;
    ClickModel model = ClickModel::defaults();
    std::shared_ptr<FeedbackStore> store;  // in-memory when null
};

inline SimRun run_synthetic(const SimSetup& setup) {
    const auto site = make_synthetic_site(setup.documents, setup.queries, setup.site_seed);
    auto index = std::make_shared<const InvertedIndex>(build_index(site.documents, {"TITLE", "ABSTRACT"}));
    SystemPtr base = std::make_shared<BaselineRankingSystem>(
        SystemDescriptor{"base", SystemKind::BuiltinBaseline, Task::Ranking, true, "bm25"}, index);
    const SystemDescriptor exp_desc{"exp", SystemKind::BuiltinBaseline, Task::Ranking, false, "bm25"};
    SystemPtr exp = setup.variant == Variant::Identical
                        ? SystemPtr(std::make_shared<AliasSystem>(exp_desc, base))
                        : SystemPtr(std::make_shared<ReversedSystem>(exp_desc, base, 10));

    SimRun run;
    run.store = setup.store ? setup.store : FeedbackStore::in_memory("sim");
    GatewayOptions options;
    options.rotation_seed = setup.traffic.seed;
    Gateway gateway(options, {base, exp}, run.store);
    gateway.prepare();
    InProcessClient client(gateway);
    run.vocabulary = site.queries;
    const auto oracle = oracle_from_system(base, Task::Ranking, setup.traffic.relevant_per_query);
    run.summary = run_simulation(client, setup.traffic, setup.model, site.queries, oracle);
    run.snapshot = run.store->snapshot();
    run.report = aggregate_round(run.snapshot, RewardWeights::defaults());
    return run;
}

}  // namespace livinglab::testing
