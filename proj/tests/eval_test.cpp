// Copyright 2026 the afr authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "afr/eval.hpp"

#include "support/metrics_cases.hpp"
#include "support/test_support.hpp"

#include <gtest/gtest.h>

#include <set>

namespace afr {
namespace {

using testing_support::FixtureRun;
using testing_support::read_file;
using testing_support::TempDir;
using testing_support::write_file;

std::vector<NodeId> ids(std::initializer_list<std::uint64_t> v) {
    std::vector<NodeId> out;
    for (auto x : v) out.push_back(NodeId{x});
    return out;
}

NodeSet gold(std::initializer_list<std::uint64_t> v) {
    auto s = ids(v);
    sort_unique(s);
    return s;
}

TEST(QueryMetrics, RankTwoExample) {
    const auto m = query_metrics(ids({2, 1, 3}), gold({1}), {1, 5, 20});
    EXPECT_EQ(m.hit.at(1), 0.0);
    EXPECT_EQ(m.hit.at(5), 1.0);
    EXPECT_EQ(m.rr, 0.5);
}

TEST(QueryMetrics, RecallCountsMissingGold) {
    std::vector<NodeId> answers{NodeId{1}};
    for (std::uint64_t i = 100; i < 119; ++i) answers.push_back(NodeId{i});
    const auto m = query_metrics(answers, gold({1, 2}), {20});
    EXPECT_EQ(m.recall.at(20), 0.5);
}

TEST(QueryMetrics, ReciprocalRankHasNoCutoff) {
    std::vector<NodeId> answers;
    for (std::uint64_t i = 1; i <= 25; ++i) answers.push_back(NodeId{i});
    const auto m = query_metrics(answers, gold({25}), {20});
    EXPECT_EQ(m.hit.at(20), 0.0);
    EXPECT_DOUBLE_EQ(m.rr, 1.0 / 25.0);
}

TEST(QueryMetrics, DuplicateAnswersCountOnce) {
    const auto m = query_metrics(ids({1, 1, 1}), gold({1, 2}), {5});
    EXPECT_EQ(m.recall.at(5), 0.5);
}

TEST(QueryMetrics, MonotoneInCutoff) {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<std::uint64_t> node(1, 30);
    for (int t = 0; t < 500; ++t) {
        std::vector<NodeId> answers;
        for (int i = 0; i < 20; ++i) answers.push_back(NodeId{node(rng)});
        NodeSet g;
        for (int i = 0; i < 3; ++i) g.push_back(NodeId{node(rng)});
        sort_unique(g);
        const auto m = query_metrics(answers, g, {1, 5, 20});
        EXPECT_LE(m.hit.at(1), m.hit.at(5));
        EXPECT_LE(m.hit.at(5), m.hit.at(20));
        EXPECT_LE(m.recall.at(1), m.recall.at(5));
        EXPECT_LE(m.recall.at(5), m.recall.at(20));
        EXPECT_LE(m.recall.at(20), 1.0);
        EXPECT_EQ(m.hit.at(1), m.rr == 1.0 ? 1.0 : 0.0);
    }
}

TEST(ComputeMetrics, TwelveQueryFixture) {
    std::vector<RankedAnswers> results;
    std::vector<QueryRecord> queries;
    testing_support::build_metrics_inputs(results, queries);
    const auto rep = compute_metrics(results, queries);
    const testing_support::MetricsExpectation want;
    EXPECT_NEAR(rep.hit.at(1), want.hit1, 1e-12);
    EXPECT_NEAR(rep.hit.at(5), want.hit5, 1e-12);
    EXPECT_NEAR(rep.hit.at(20), want.hit20, 1e-12);
    EXPECT_NEAR(rep.recall.at(20), want.recall20, 1e-12);
    EXPECT_NEAR(rep.mrr, want.mrr, 1e-12);
    EXPECT_EQ(rep.processed, want.processed);
    EXPECT_EQ(rep.evaluated, want.evaluated);
    EXPECT_EQ(rep.excluded, want.excluded);
    EXPECT_EQ(rep.errors, want.errors);
    EXPECT_TRUE(rep.per_query.at("h").errored);
    EXPECT_EQ(rep.per_query.count("i"), 0u);
}

TEST(ComputeMetrics, EmptyInput) {
    const auto rep = compute_metrics({}, {});
    EXPECT_EQ(rep.evaluated, 0u);
    EXPECT_EQ(rep.mrr, 0.0);
}

TEST(LoadQueries, ReadsGoldAndRejectsEmptyLists) {
    TempDir dir;
    write_file(dir / "q.jsonl",
               "{\"id\": \"a\", \"query\": \"x\", \"answer_ids\": [3, 1]}\n"
               "\n"
               "{\"id\": \"b\", \"query\": \"y\"}\n");
    const auto qs = load_queries(dir / "q.jsonl");
    ASSERT_EQ(qs.size(), 2u);
    EXPECT_EQ(*qs[0].gold, gold({1, 3}));
    EXPECT_FALSE(qs[1].gold.has_value());

    write_file(dir / "bad.jsonl", "{\"id\": \"a\", \"query\": \"x\", \"answer_ids\": []}\n");
    EXPECT_THROW(load_queries(dir / "bad.jsonl"), DataError);
    write_file(dir / "neg.jsonl", "{\"id\": \"a\", \"query\": \"x\", \"answer_ids\": [-1]}\n");
    EXPECT_THROW(load_queries(dir / "neg.jsonl"), DataError);
    write_file(dir / "junk.jsonl", "not json\n");
    EXPECT_THROW(load_queries(dir / "junk.jsonl"), DataError);
    EXPECT_THROW(load_queries(dir / "missing.jsonl"), DataError);
}

TEST(AblationGrid, AlphaAxisHasFourCells) {
    AblationGrid g;
    g.add_axis("alpha=0,0.3333,0.6667,1");
    const auto cells = g.expand(PipelineConfig{});
    ASSERT_EQ(cells.size(), 4u);
    EXPECT_EQ(cells[0].alpha, 0.0);
    EXPECT_EQ(cells[3].alpha, 1.0);
}

TEST(AblationGrid, CartesianProduct) {
    AblationGrid g;
    g.add_axis("l_max=1,2,3,10,33,100");
    g.add_axis("steps=1+7,1-8");
    g.add_axis("reranker=none,pairwise");
    g.add_axis("spaces=text_only/text_only/text_plus_relations,text_plus_relations/text_only/text_only");
    const auto cells = g.expand(PipelineConfig{});
    EXPECT_EQ(cells.size(), 6u * 2u * 2u * 2u);
    std::set<std::tuple<long long, StepSubset, RerankerKind, SpaceVariant>> distinct;
    for (const auto& c : cells) distinct.emplace(c.l_max, c.steps, c.reranker, c.space_step4);
    EXPECT_EQ(distinct.size(), cells.size());
}

TEST(AblationGrid, EmptyGridIsBase) {
    PipelineConfig base;
    base.k = 7;
    const auto cells = AblationGrid{}.expand(base);
    ASSERT_EQ(cells.size(), 1u);
    EXPECT_EQ(cells[0].k, 7);
}

TEST(AblationGrid, RejectsBadAxes) {
    AblationGrid g;
    EXPECT_THROW(g.add_axis("alpha"), UsageError);
    EXPECT_THROW(g.add_axis("beta=1"), UsageError);
    EXPECT_THROW(g.add_axis("l_max=0"), UsageError);
    EXPECT_THROW(g.add_axis("spaces=text_only"), UsageError);
    EXPECT_THROW(g.add_axis("steps=1-9"), UsageError);
}

TEST(AblationGrid, ConcealedSets) {
    AblationGrid g;
    g.add_axis("concealed=,institution|author");
    const auto cells = g.expand(PipelineConfig{});
    ASSERT_EQ(cells.size(), 2u);
    EXPECT_TRUE(cells[0].concealed_node_types.empty());
    EXPECT_EQ(cells[1].concealed_node_types, (std::vector<std::string>{"institution", "author"}));
}

TEST(MetricsCsv, OneRowPerCellWithOneDecimal) {
    std::vector<RankedAnswers> results;
    std::vector<QueryRecord> queries;
    testing_support::build_metrics_inputs(results, queries);
    AblationRow row{PipelineConfig{}, compute_metrics(results, queries)};
    TempDir dir;
    write_metrics_csv(dir / "metrics.csv", {row, row});
    const std::string text = read_file(dir / "metrics.csv");
    std::vector<std::string> lines;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) lines.push_back(l);
    ASSERT_EQ(lines.size(), 3u);
    EXPECT_EQ(lines[0].rfind("steps,alpha,l_max,", 0), 0u);
    EXPECT_NE(lines[0].find("hit@1,hit@5,hit@20,recall@20,mrr"), std::string::npos);
    // 300/11 = 27.27..., 500/11 = 45.45..., 700/11 = 63.63..., 2000/33 = 60.60..., mrr 39.42...
    EXPECT_NE(lines[1].find(",27.3,45.5,63.6,60.6,39.4,"), std::string::npos) << lines[1];
}

TEST(RunBatch, DeterministicAcrossParallelism) {
    FixtureRun run;
    auto ctx = run.context();
    const auto queries = load_queries(run.cfg.queries);
    const auto serial = run_batch(queries, run.cfg.pipeline, ctx, 1);
    const auto parallel = run_batch(queries, run.cfg.pipeline, ctx, 4);
    ASSERT_EQ(serial.size(), queries.size());
    ASSERT_EQ(parallel.size(), queries.size());
    for (std::size_t i = 0; i < serial.size(); ++i) {
        EXPECT_EQ(serial[i].query_id, queries[i].id);
        EXPECT_EQ(to_json(serial[i]).dump(), to_json(parallel[i]).dump());
    }
}

TEST(RunBatch, FixtureReachesFullHitAtOne) {
    FixtureRun run;
    auto ctx = run.context();
    const auto queries = load_queries(run.cfg.queries);
    const auto rep = compute_metrics(run_batch(queries, run.cfg.pipeline, ctx, 2), queries);
    EXPECT_EQ(rep.errors, 0u);
    EXPECT_EQ(rep.hit.at(1), 100.0);
}

TEST(RunAblation, StepsSubsetsOnFixture) {
    FixtureRun run;
    auto ctx = run.context();
    const auto queries = load_queries(run.cfg.queries);
    AblationGrid g;
    g.add_axis("steps=1+7,1-8");
    const auto rows = run_ablation(g, run.cfg.pipeline, queries, ctx, 2);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_LT(rows[0].report.hit.at(1), rows[1].report.hit.at(1));
    // Set metrics do not depend on the reranker.
    AblationGrid r;
    r.add_axis("reranker=none,pairwise");
    const auto rr = run_ablation(r, run.cfg.pipeline, queries, ctx, 2);
    EXPECT_EQ(rr[0].report.hit.at(20), rr[1].report.hit.at(20));
    EXPECT_EQ(rr[0].report.recall.at(20), rr[1].report.recall.at(20));
}

TEST(ResultsJsonl, OneLinePerQuery) {
    std::vector<RankedAnswers> results;
    std::vector<QueryRecord> queries;
    testing_support::build_metrics_inputs(results, queries);
    TempDir dir;
    write_results_jsonl(dir / "r.jsonl", results);
    const auto text = read_file(dir / "r.jsonl");
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), static_cast<long>(results.size()));
    std::istringstream in(text);
    std::string first;
    std::getline(in, first);
    const auto j = nlohmann::json::parse(first);
    EXPECT_EQ(j.at("id"), "a");
}

}  // namespace
}  // namespace afr
