#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "livinglab/ingest.hpp"
#include "support/temp_dir.hpp"

using namespace livinglab;
using livinglab::testing::fixture;
using livinglab::testing::TempDir;

namespace {

struct FixtureCase {
    std::string name;
    std::size_t line;
};

std::vector<FixtureCase> malformed_fixtures() {
    std::ifstream in(fixture("runs/manifest.tsv"));
    std::vector<FixtureCase> out;
    std::string name;
    std::size_t line = 0;
    for (std::string row; std::getline(in, row);) {
        if (row.empty() || row[0] == '#') continue;
        std::istringstream(row) >> name >> line;
        out.push_back({name, line});
    }
    return out;
}

}  // namespace

TEST(Documents, LiteratureSchemaJoinsListFields) {
    TempDir dir;
    const auto p = dir.write("docs.jsonl",
                             "{\"DBRECORDID\": \"M1\", \"TITLE\": [\"Heart\", \"disease\"], \"YEAR\": 2020}\n"
                             "{\"DBRECORDID\": \"M2\", \"TITLE\": \"Lung\", \"ABSTRACT\": null}\n");
    const auto docs = parse_documents(p, Schema::Literature);
    ASSERT_EQ(docs.size(), 2U);
    EXPECT_EQ(docs[0].doc_id, "M1");
    EXPECT_EQ(docs[0].field_text("TITLE"), "Heart disease");
    EXPECT_EQ(docs[0].field_text("YEAR"), "2020");
    EXPECT_EQ(docs[1].field_text("ABSTRACT"), "");
}

TEST(Documents, ErrorsArePositioned) {
    TempDir dir;
    const auto p = dir.write("docs.jsonl",
                             "{\"id\": \"a\"}\n"
                             "{\"title\": \"no id\"}\n"
                             "\n"
                             "{\"id\": \"a\"}\n"
                             "not json\n");
    const auto out = read_documents(p, Schema::SocialScience);
    EXPECT_EQ(out.records.size(), 1U);
    ASSERT_EQ(out.errors.size(), 4U);
    EXPECT_EQ(out.errors[0].line, 2U);
    EXPECT_EQ(out.errors[1].line, 3U);
    EXPECT_EQ(out.errors[2].line, 4U);
    EXPECT_NE(out.errors[2].message.find("duplicate"), std::string::npos);
    EXPECT_EQ(out.errors[3].line, 5U);
    try {
        parse_documents(p, Schema::SocialScience);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2U);
        EXPECT_EQ(e.path(), p);
    }
}

TEST(Documents, MissingFileThrows) {
    EXPECT_THROW(parse_documents("/nonexistent/docs.jsonl", Schema::Literature), std::exception);
    EXPECT_THROW(parse_schema("nope"), DomainError);
    EXPECT_EQ(id_field(Schema::Literature), "DBRECORDID");
    EXPECT_EQ(id_field(Schema::SocialScience), "id");
}

TEST(HeadQueries, ParseAndReject) {
    TempDir dir;
    const auto ok = dir.write("q.jsonl", "{\"qid\": 1, \"qstr\": \"covid\", \"freq\": 10}\n{\"qid\": 2, \"qstr\": \"flu\", \"freq\": 3}\n");
    const auto qs = parse_head_queries(ok);
    ASSERT_EQ(qs.size(), 2U);
    EXPECT_EQ(qs[1].qstr, "flu");
    EXPECT_EQ(qs[0].freq, 10);

    const auto bad = dir.write("bad.jsonl", "{\"qid\": 1, \"qstr\": \"a\", \"freq\": 1}\n{\"qid\": 1, \"qstr\": \"b\", \"freq\": 1}\n"
                                            "{\"qid\": 3, \"qstr\": \"\", \"freq\": 1}\n{\"qid\": 4, \"qstr\": \"c\", \"freq\": -2}\n");
    const auto out = read_head_queries(bad);
    ASSERT_EQ(out.errors.size(), 3U);
    EXPECT_EQ(out.errors[0].line, 2U);
    EXPECT_EQ(out.errors[1].line, 3U);
    EXPECT_EQ(out.errors[2].line, 4U);
}

TEST(Candidates, RankingRoundTrip) {
    const auto lists = parse_candidates(fixture("candidates/ranking.jsonl"), Task::Ranking);
    ASSERT_EQ(lists.size(), 2U);
    EXPECT_EQ(lists.at("1000").candidates.size(), 3U);
    EXPECT_EQ(lists.at("1000").candidates[1].doc_id, "M27000025");

    TempDir dir;
    std::ostringstream out;
    write_candidates(out, lists, Task::Ranking);
    const auto again = parse_candidates(dir.write("r.jsonl", out.str()), Task::Ranking);
    ASSERT_EQ(again.size(), lists.size());
    for (const auto& [k, l] : lists) {
        ASSERT_EQ(again.at(k).candidates.size(), l.candidates.size());
        for (std::size_t i = 0; i < l.candidates.size(); ++i) {
            EXPECT_EQ(again.at(k).candidates[i].doc_id, l.candidates[i].doc_id);
        }
    }
}

TEST(Candidates, RecommendationOrdersByScoreThenId) {
    const auto lists = parse_candidates(fixture("candidates/recommendation.jsonl"), Task::Recommendation);
    const auto& l = lists.at("gesis-ssoar-62031").candidates;
    ASSERT_EQ(l.size(), 3U);
    EXPECT_EQ(l[0].doc_id, "ZA5002");
    EXPECT_EQ(l[1].doc_id, "ZA5001");
    EXPECT_EQ(l[2].doc_id, "ZA5003");
    EXPECT_DOUBLE_EQ(*l[1].score, 0.42);

    TempDir dir;
    std::ostringstream out;
    write_candidates(out, lists, Task::Recommendation);
    const auto again = parse_candidates(dir.write("r.jsonl", out.str()), Task::Recommendation);
    for (const auto& [k, list] : lists) {
        ASSERT_EQ(again.at(k).candidates.size(), list.candidates.size());
        for (std::size_t i = 0; i < list.candidates.size(); ++i) {
            EXPECT_EQ(again.at(k).candidates[i].doc_id, list.candidates[i].doc_id);
            EXPECT_EQ(again.at(k).candidates[i].score, list.candidates[i].score);
        }
    }
}

TEST(Candidates, MalformedListsThrow) {
    TempDir dir;
    EXPECT_THROW(parse_candidates(dir.write("a.jsonl", "{\"qid\": \"1\", \"candidates\": []}\n"), Task::Ranking), ParseError);
    EXPECT_THROW(parse_candidates(dir.write("b.jsonl", "{\"qid\": \"1\", \"candidates\": [\"x\", \"x\"]}\n"), Task::Ranking),
                 ParseError);
    EXPECT_THROW(parse_candidates(dir.write("c.jsonl", "{\"s_id\": \"s\", \"candidate_docs\": {\"d\": \"high\"}}\n"),
                                  Task::Recommendation),
                 ParseError);
}

TEST(RunFiles, ValidFixtureRoundTrips) {
    const auto run = parse_run_file(fixture("runs/valid.txt"));
    EXPECT_EQ(run.tag, "demo");
    std::ostringstream out;
    write_run_file(out, run);
    std::istringstream in(out.str());
    EXPECT_EQ(parse_run(in), run);
}

TEST(RunFiles, RandomRunsRoundTripExactly) {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> score(-1e6, 1e6);
    for (int t = 0; t < 200; ++t) {
        RunFile run;
        run.tag = "tag" + std::to_string(t);
        const int queries = 1 + static_cast<int>(rng() % 5);
        for (int q = 0; q < queries; ++q) {
            auto& list = run.entries[std::to_string(100 + q)];
            const int n = 1 + static_cast<int>(rng() % 12);
            for (int r = 1; r <= n; ++r) list.push_back({"d" + std::to_string(q) + "_" + std::to_string(r), r, score(rng)});
        }
        std::ostringstream out;
        write_run_file(out, run);
        std::istringstream in(out.str());
        ASSERT_EQ(parse_run(in), run);
    }
}

TEST(RunFiles, EveryMalformedFixtureIsRejectedWithItsLine) {
    const auto cases = malformed_fixtures();
    ASSERT_EQ(cases.size(), 12U);
    for (const auto& c : cases) {
        const auto report = validate_run_file(fixture("runs/" + c.name), std::nullopt);
        EXPECT_FALSE(report.ok) << c.name;
        ASSERT_FALSE(report.line_errors.empty()) << c.name;
        EXPECT_EQ(report.line_errors.front().line, c.line) << c.name << ": " << report.line_errors.front().message;
        try {
            parse_run_file(fixture("runs/" + c.name));
            ADD_FAILURE() << c.name << " parsed";
        } catch (const ParseError& e) {
            EXPECT_EQ(e.line(), c.line) << c.name;
        }
    }
}

TEST(RunFiles, BlankLineIsRejected) {
    std::istringstream in("101 Q0 a 1 2.0 t\n\n101 Q0 b 2 1.0 t\n");
    const auto report = validate_run(in, std::nullopt);
    EXPECT_FALSE(report.ok);
    ASSERT_FALSE(report.line_errors.empty());
    EXPECT_EQ(report.line_errors.front().line, 2U);
}

TEST(RunFiles, ValidatorWarnsOnUnknownIds) {
    std::istringstream in("101 Q0 a 1 2.0 t\n999 Q0 b 1 1.0 t\n");
    const auto report = validate_run(in, std::set<std::string>{"101"}, std::set<std::string>{"a"});
    EXPECT_TRUE(report.ok);
    EXPECT_EQ(report.warnings.size(), 2U);
}

TEST(RunFiles, FormatDoubleIsShortestRoundTrip) {
    for (double v : {0.1, 8.25, -3.0, 1e-300, 123456.789}) {
        EXPECT_EQ(std::stod(format_double(v)), v);
    }
    EXPECT_EQ(format_double(8.25), "8.25");
}
