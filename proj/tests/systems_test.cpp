#include <gtest/gtest.h>

#include <httplib.h>

#include <sstream>

#include "livinglab/systems.hpp"
#include "support/stub_systems.hpp"

using namespace livinglab;
using namespace livinglab::testing;

namespace {

RunFile sample_run() {
    std::istringstream in(
        "1000 Q0 d1 1 3.0 t\n1000 Q0 d2 2 2.0 t\n1000 Q0 d3 3 1.0 t\n"
        "1001 Q0 d9 1 1.0 t\n");
    return parse_run(in);
}

/// Serves a fixed body for the ranking path.
class RawServer {
public:
    explicit RawServer(std::string body, int status = 200) {
        server_.Get("/ranking", [body, status](const httplib::Request&, httplib::Response& res) {
            res.status = status;
            res.set_content(body, "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~RawServer() {
        server_.stop();
        thread_.join();
    }
    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
};

}  // namespace

TEST(Precomputed, RankingMatchesHeadQueriesCaseInsensitively) {
    const std::vector<HeadQuery> head{{1000, "Covid Vaccine", 5}, {1001, "flu", 3}};
    auto sys = PrecomputedSystem::for_ranking(describe("p", Task::Ranking, false, SystemKind::Precomputed),
                                              sample_run(), head);
    auto r = sys->respond({Task::Ranking, "  covid VACCINE ", 0, 2});
    ASSERT_TRUE(r.responded);
    EXPECT_EQ(r.num_found, 3);
    ASSERT_EQ(r.results.size(), 2U);
    EXPECT_EQ(r.results[1].doc_id, "d2");
    r = sys->respond({Task::Ranking, "covid vaccine", 1, 2});
    ASSERT_EQ(r.results.size(), 1U);
    EXPECT_EQ(r.results[0].rank, 3);
    EXPECT_FALSE(sys->respond({Task::Ranking, "unknown", 0, 10}).responded);
}

TEST(Precomputed, RecommendationKeysAreRunQids) {
    auto sys = PrecomputedSystem::for_recommendation(
        describe("r", Task::Recommendation, false, SystemKind::Precomputed), sample_run());
    EXPECT_TRUE(sys->respond({Task::Recommendation, "1001", 0, 6}).responded);
    EXPECT_FALSE(sys->respond({Task::Recommendation, "1002", 0, 6}).responded);
}

TEST(PageSlice, Bounds) {
    std::vector<RankedResult> all{{"a", 1, 0}, {"b", 2, 0}, {"c", 3, 0}};
    EXPECT_EQ(page_slice(all, 0, 2).size(), 2U);
    EXPECT_EQ(page_slice(all, 1, 2).size(), 1U);
    EXPECT_TRUE(page_slice(all, 5, 2).empty());
    EXPECT_THROW(page_slice(all, -1, 2), DomainError);
    EXPECT_THROW(page_slice(all, 0, 0), DomainError);
}

TEST(Remote, RoundTripThroughParticipantService) {
    auto stub = std::make_shared<StubSystem>(describe("inner", Task::Ranking, false), numbered("d", 15));
    ParticipantService service(stub);
    const int port = service.start();
    RemoteSystem remote(describe("remote", Task::Ranking, false, SystemKind::LiveRemote),
                        {"http://127.0.0.1:" + std::to_string(port)}, std::chrono::milliseconds(2000));
    EXPECT_TRUE(remote.prepare());
    const auto r = remote.respond({Task::Ranking, "anything goes", 1, 10});
    ASSERT_TRUE(r.responded);
    EXPECT_EQ(r.num_found, 15);
    ASSERT_EQ(r.results.size(), 5U);
    EXPECT_EQ(r.results[0].doc_id, "d11");
    EXPECT_EQ(r.results[0].rank, 11);

    stub->silent = true;
    EXPECT_FALSE(remote.respond({Task::Ranking, "q", 0, 10}).responded);
}

TEST(Remote, TimeoutYieldsNoResponse) {
    auto stub = std::make_shared<StubSystem>(describe("slow", Task::Ranking, false), numbered("d", 3));
    stub->delay = std::chrono::milliseconds(600);
    ParticipantService service(stub);
    const int port = service.start();
    const RemoteContract contract{"http://127.0.0.1:" + std::to_string(port)};
    const auto start = std::chrono::steady_clock::now();
    const auto r = remote_respond(contract, {Task::Ranking, "q", 0, 10}, std::chrono::milliseconds(100));
    EXPECT_FALSE(r.responded);
    EXPECT_TRUE(r.protocol_error.empty());
    EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::milliseconds(550));
}

TEST(Remote, UnreachableHostYieldsNoResponse) {
    const RemoteContract contract{"http://127.0.0.1:1"};
    EXPECT_FALSE(remote_respond(contract, {Task::Ranking, "q", 0, 10}, std::chrono::milliseconds(300)).responded);
}

TEST(Remote, MalformedBodiesAreProtocolErrors) {
    for (const char* body : {"[]", "{\"itemlist\": [1, 2]}", "{\"itemlist\": [\"a\", \"a\"]}", "not json",
                             "{\"header\": {}}"}) {
        RawServer server(body);
        const auto r = remote_respond({server.url()}, {Task::Ranking, "q", 0, 10}, std::chrono::milliseconds(1000));
        EXPECT_FALSE(r.responded) << body;
        EXPECT_FALSE(r.protocol_error.empty()) << body;
    }
    RawServer too_long("{\"itemlist\": [\"a\", \"b\", \"c\"]}");
    EXPECT_FALSE(remote_respond({too_long.url()}, {Task::Ranking, "q", 0, 2}, std::chrono::milliseconds(1000))
                     .protocol_error.empty());
    RawServer missing("{}", 404);
    const auto r = remote_respond({missing.url()}, {Task::Ranking, "q", 0, 10}, std::chrono::milliseconds(1000));
    EXPECT_FALSE(r.responded);
    EXPECT_TRUE(r.protocol_error.empty());
}

TEST(Remote, ContractValidation) {
    EXPECT_THROW(RemoteContract{}.validate(), DomainError);
    RemoteContract c{"http://x"};
    c.ranking_path = "ranking";
    EXPECT_THROW(c.validate(), DomainError);
}

TEST(Sanity, FlagsBrokenSystems) {
    class Broken final : public SystemAdapter {
    public:
        const SystemDescriptor& descriptor() const override { return d_; }
        SystemResponse respond(const SystemRequest& r) override {
            SystemResponse out;
            out.responded = true;
            if (r.query_or_item == "dup") out.results = {{"a", 1, 0}, {"a", 2, 0}};
            if (r.query_or_item == "gap") out.results = {{"a", 1, 0}, {"b", 3, 0}};
            if (r.query_or_item == "ok") out.results = {{"a", 1, 0}};
            return out;
        }

    private:
        SystemDescriptor d_ = describe("broken", Task::Ranking, false);
    } broken;
    const auto report = sanity_check(broken, {{Task::Ranking, "ok", 0, 10}, {Task::Ranking, "dup", 0, 10},
                                              {Task::Ranking, "gap", 0, 10}});
    EXPECT_FALSE(report.passed);
    ASSERT_EQ(report.probes.size(), 3U);
    EXPECT_TRUE(report.probes[0].passed);
    EXPECT_FALSE(report.probes[1].passed);
    EXPECT_FALSE(report.probes[2].passed);

    StubSystem good(describe("good", Task::Ranking, false), numbered("d", 4));
    EXPECT_TRUE(sanity_check(good, {{Task::Ranking, "x", 0, 10}}).passed);
    good.silent = true;
    const auto quiet = sanity_check(good, {{Task::Ranking, "x", 0, 10}});
    EXPECT_TRUE(quiet.passed);
    EXPECT_FALSE(quiet.warnings.empty());
    EXPECT_THROW(sanity_check(good, {}), DomainError);
}
