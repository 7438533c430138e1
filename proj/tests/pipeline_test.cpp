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

#include "afr/pipeline.hpp"

#include "support/test_support.hpp"

#include <gtest/gtest.h>

#include <mutex>
#include <set>

namespace afr {
namespace {

using testing_support::FixtureRun;
using testing_support::node_named;

/// Forwards to another provider and keeps every prompt.
class RecordingProvider final : public ChatProvider {
public:
    explicit RecordingProvider(ChatProvider& inner) : inner_(inner) {}

    std::string complete(const std::string& prompt) override {
        {
            std::lock_guard lock(mu_);
            prompts_.push_back(prompt);
        }
        return inner_.complete(prompt);
    }
    std::string id() const override { return inner_.id(); }

    std::vector<std::string> prompts() const {
        std::lock_guard lock(mu_);
        return prompts_;
    }

private:
    ChatProvider& inner_;
    mutable std::mutex mu_;
    std::vector<std::string> prompts_;
};

const QueryRecord kRunningExample{
    "q0", "Did any University from Miami produce research in 2015 in molecular biology?", {}};

class FixturePipeline : public ::testing::Test {
protected:
    RankedAnswers answer(const QueryRecord& q, const PipelineConfig& cfg) {
        auto ctx = run.context();
        return answer_query(q, cfg, ctx);
    }

    std::vector<QueryRecord> queries() const {
        std::vector<QueryRecord> out;
        std::ifstream in(run.cfg.queries);
        for (std::string line; std::getline(in, line);) {
            if (line.empty()) continue;
            const auto j = nlohmann::json::parse(line);
            out.push_back({j.at("id"), j.at("query"), {}});
        }
        return out;
    }

    FixtureRun run;
};

TEST_F(FixturePipeline, RunningExampleEndToEnd) {
    const auto r = answer(kRunningExample, run.cfg.pipeline);
    ASSERT_FALSE(r.error) << *r.error;
    ASSERT_FALSE(r.items.empty());
    EXPECT_EQ(r.items[0].node, node_named(run.skb, "RNA Transcription"));
    EXPECT_EQ(r.items[0].provenance, Provenance::graph);
    EXPECT_EQ(r.trace.target_type, "paper");
    EXPECT_FALSE(r.trace.skipped_graph);
    EXPECT_EQ(r.trace.extraction.target_symbol, "p");
    EXPECT_EQ(r.trace.extraction.triplets.size(), 3u);
    EXPECT_GE(r.trace.c_cypher_size, 1u);
    EXPECT_EQ(static_cast<long long>(r.items.size()), run.cfg.pipeline.k);
    EXPECT_EQ(r.trace.llm.prompts, 2u + r.trace.rerank_prompts);
    EXPECT_LE(r.trace.rerank_prompts, 62u);
    for (std::size_t i = 0; i < r.items.size(); ++i) {
        EXPECT_EQ(r.items[i].rerank_position, static_cast<int>(i) + 1);
    }
}

TEST_F(FixturePipeline, AlphaZeroLeavesGraphStrandEmpty) {
    auto cfg = run.cfg.pipeline;
    cfg.alpha = 0.0;
    cfg.reranker = RerankerKind::none;
    for (const auto& q : queries()) {
        const auto r = answer(q, cfg);
        ASSERT_FALSE(r.error);
        for (const auto& it : r.items) EXPECT_EQ(it.provenance, Provenance::vector);
    }
}

TEST_F(FixturePipeline, StrandsAreDisjointAndBounded) {
    for (double alpha : {0.0, 0.3333, 0.6667, 1.0}) {
        auto cfg = run.cfg.pipeline;
        cfg.alpha = alpha;
        cfg.steps = StepSubset::hybrid;
        for (const auto& q : queries()) {
            const auto r = answer(q, cfg);
            ASSERT_FALSE(r.error);
            std::set<NodeId> seen;
            std::size_t graph = 0;
            for (const auto& it : r.items) {
                EXPECT_TRUE(seen.insert(it.node).second) << "duplicate in " << q.id;
                if (it.provenance == Provenance::graph) ++graph;
            }
            EXPECT_LE(static_cast<long long>(r.items.size()), cfg.k);
            const auto want_graph = std::min<long long>(
                round_half_up(alpha * static_cast<double>(cfg.k)),
                static_cast<long long>(r.trace.c_cypher_size));
            EXPECT_EQ(static_cast<long long>(graph), want_graph) << q.id << " alpha " << alpha;
            // Graph items come first.
            for (std::size_t i = 0; i < graph; ++i) EXPECT_EQ(r.items[i].provenance, Provenance::graph);
        }
    }
}

TEST_F(FixturePipeline, RerankPreservesTheAnswerSet) {
    auto none = run.cfg.pipeline;
    none.reranker = RerankerKind::none;
    for (const auto& q : queries()) {
        auto a = answer(q, none).nodes();
        auto b = answer(q, run.cfg.pipeline).nodes();
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        EXPECT_EQ(a, b) << q.id;
    }
}

TEST_F(FixturePipeline, AlphaOneHybridExtendsGraphVss) {
    auto hybrid = run.cfg.pipeline;
    hybrid.steps = StepSubset::hybrid;
    hybrid.alpha = 1.0;
    auto graph_vss = run.cfg.pipeline;
    graph_vss.steps = StepSubset::graph_vss;
    for (const auto& q : queries()) {
        const auto h = answer(q, hybrid);
        const auto g = answer(q, graph_vss);
        ASSERT_LE(g.items.size(), h.items.size());
        for (std::size_t i = 0; i < g.items.size(); ++i) EXPECT_EQ(g.items[i].node, h.items[i].node);
    }
}

TEST_F(FixturePipeline, GroundingSubsetIsAscending) {
    auto cfg = run.cfg.pipeline;
    cfg.steps = StepSubset::grounding;
    const auto r = answer(kRunningExample, cfg);
    ASSERT_FALSE(r.items.empty());
    EXPECT_TRUE(std::is_sorted(r.items.begin(), r.items.end(),
                               [](const auto& a, const auto& b) { return a.node < b.node; }));
    EXPECT_EQ(r.trace.llm.prompts, 2u);
}

TEST_F(FixturePipeline, VssOnlySkipsCypher) {
    auto cfg = run.cfg.pipeline;
    cfg.steps = StepSubset::vss_only;
    const auto r = answer(kRunningExample, cfg);
    EXPECT_TRUE(r.trace.skipped_graph);
    EXPECT_TRUE(r.trace.cypher_text.empty());
    EXPECT_EQ(r.trace.llm.prompts, 1u);
    EXPECT_EQ(static_cast<long long>(r.items.size()), cfg.k);
    for (const auto& it : r.items) EXPECT_EQ(run.skb.node(it.node).type, "paper");
}

TEST_F(FixturePipeline, DeterministicJson) {
    const auto a = to_json(answer(kRunningExample, run.cfg.pipeline), true).dump();
    const auto b = to_json(answer(kRunningExample, run.cfg.pipeline), true).dump();
    EXPECT_EQ(a, b);
}

TEST_F(FixturePipeline, InvalidConfigIsUsageError) {
    auto cfg = run.cfg.pipeline;
    cfg.alpha = 1.5;
    EXPECT_THROW(answer(kRunningExample, cfg), UsageError);
    cfg = run.cfg.pipeline;
    cfg.k = 0;
    EXPECT_THROW(answer(kRunningExample, cfg), UsageError);
}

TEST_F(FixturePipeline, UnscriptedQuestionBecomesQueryError) {
    const auto r = answer({"x", "A question the transcript does not know", {}}, run.cfg.pipeline);
    ASSERT_TRUE(r.error.has_value());
    EXPECT_TRUE(r.items.empty());
}

class ScriptedPipeline : public ::testing::Test {
protected:
    RankedAnswers answer(ScriptedProvider& chat, const PipelineConfig& cfg,
                         RecordingProvider** recorder_out = nullptr) {
        recorder = std::make_unique<RecordingProvider>(chat);
        PipelineContext ctx{run.skb, *run.spaces, *run.rt.embedder, *recorder, run.rt.prompts};
        if (recorder_out) *recorder_out = recorder.get();
        return answer_query({"s", "Which paper did Alice Chen write about attention?", {}}, cfg, ctx);
    }

    FixtureRun run;
    std::unique_ptr<RecordingProvider> recorder;
};

TEST_F(ScriptedPipeline, EmptyExtractionFallsBackToVss) {
    ScriptedProvider chat;
    chat.add_contains({"could correctly answer"}, "paper");
    chat.add_contains({"Query Q:"}, "I cannot write Cypher for this.");
    auto cfg = run.cfg.pipeline;
    cfg.reranker = RerankerKind::none;
    const auto r = answer(chat, cfg);
    ASSERT_FALSE(r.error);
    EXPECT_TRUE(r.trace.skipped_graph);
    EXPECT_EQ(r.trace.c_cypher_size, 0u);

    auto vss_cfg = cfg;
    vss_cfg.steps = StepSubset::vss_only;
    const auto v = answer(chat, vss_cfg);
    EXPECT_EQ(r.nodes(), v.nodes());
}

TEST_F(ScriptedPipeline, ConcealedTypesStayOutOfTheCypherPrompt) {
    ScriptedProvider chat;
    chat.add_contains({"could correctly answer"}, "paper");
    chat.add_contains({"Query Q:"}, "MATCH (a:author {name: 'Alice Chen'})-[:wrote]->(p:paper) RETURN p");
    auto cfg = run.cfg.pipeline;
    cfg.reranker = RerankerKind::none;
    cfg.concealed_node_types = {"institution", "Field of Study"};
    RecordingProvider* rec = nullptr;
    const auto r = answer(chat, cfg, &rec);
    ASSERT_FALSE(r.error);
    const auto prompts = rec->prompts();
    ASSERT_EQ(prompts.size(), 2u);
    EXPECT_NE(prompts[1].find("Query Q:"), std::string::npos);
    const auto start = prompts[1].find("- Available Node Labels: ");
    ASSERT_NE(start, std::string::npos);
    const auto labels = prompts[1].substr(start, prompts[1].find('\n', start) - start);
    EXPECT_EQ(labels, "- Available Node Labels: author, paper");
    EXPECT_EQ(prompts[1].find("institution"), std::string::npos);
    EXPECT_FALSE(r.trace.skipped_graph);
}

TEST_F(ScriptedPipeline, UntypedTargetTakesStepOneType) {
    ScriptedProvider chat;
    chat.add_contains({"could correctly answer"}, "paper");
    chat.add_contains({"Query Q:"}, "MATCH (a:author {name: 'Alice Chen'})-[:wrote]->(p) RETURN p");
    auto cfg = run.cfg.pipeline;
    cfg.reranker = RerankerKind::none;
    const auto r = answer(chat, cfg);
    ASSERT_FALSE(r.error);
    EXPECT_EQ(r.trace.extraction.target_type, "paper");
    for (const auto& it : r.items) EXPECT_EQ(run.skb.node(it.node).type, "paper");
}

TEST_F(ScriptedPipeline, InvalidTargetTypeSearchesAllNodes) {
    ScriptedProvider chat;
    chat.add_contains({"could correctly answer"}, "spaceship");
    chat.add_contains({"Query Q:"}, "nothing");
    auto cfg = run.cfg.pipeline;
    cfg.reranker = RerankerKind::none;
    const auto r = answer(chat, cfg);
    ASSERT_FALSE(r.error);
    EXPECT_FALSE(r.trace.target_type.has_value());
    std::set<std::string> types;
    for (const auto& it : r.items) types.insert(run.skb.node(it.node).type);
    EXPECT_GT(types.size(), 1u);
}

TEST(StepSubset, ParseAndPrint) {
    for (auto s : {StepSubset::vss_only, StepSubset::grounding, StepSubset::graph_vss,
                   StepSubset::hybrid, StepSubset::full}) {
        EXPECT_EQ(parse_step_subset(to_string(s)), s);
    }
    EXPECT_EQ(parse_step_subset("1–8"), StepSubset::full);
    EXPECT_THROW(parse_step_subset("2-8"), UsageError);
}

}  // namespace
}  // namespace afr
