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


#include "afr/grounding.hpp"
#include "oracles/join_oracle.hpp"
#include "oracles/random_graph.hpp"
#include "oracles/topn_oracle.hpp"
#include "support/cypher_cases.hpp"
#include "support/test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

namespace afr {
namespace {

using testing_support::fixture_dir;
using testing_support::node_named;

Node node_with(std::uint64_t id, std::string type, std::map<std::string, AttrValue> attrs) {
    Node n;
    n.id = NodeId{id};
    n.type = std::move(type);
    n.attributes = std::move(attrs);
    return n;
}

TEST(FilterMatches, NumericStringDateSemantics) {
    const Node p = node_with(1, "paper",
                             {{"year", AttrValue::from_number(2013, "2013")},
                              {"title", AttrValue::from_string("Deep Coral Reefs")},
                              {"date", AttrValue::from_string("2015-03-01")}});
    auto num = [](std::string attr, FilterOp op, double v) {
        AttributeFilter f;
        f.attr = std::move(attr);
        f.op = op;
        f.value.kind = Literal::Kind::number;
        f.value.number = v;
        f.value.text = std::to_string(static_cast<long long>(v));
        return f;
    };
    auto str = [](std::string attr, FilterOp op, std::string v) {
        AttributeFilter f;
        f.attr = std::move(attr);
        f.op = op;
        f.value.text = std::move(v);
        return f;
    };
    EXPECT_TRUE(filter_matches(p, num("year", FilterOp::ge, 2012)));
    EXPECT_TRUE(filter_matches(p, num("year", FilterOp::eq, 2013)));
    EXPECT_FALSE(filter_matches(p, num("year", FilterOp::gt, 2013)));
    EXPECT_TRUE(filter_matches(p, num("year", FilterOp::le, 2013)));
    EXPECT_FALSE(filter_matches(p, num("year", FilterOp::lt, 2013)));
    EXPECT_TRUE(filter_matches(p, str("title", FilterOp::eq, "deep coral REEFS")));
    EXPECT_TRUE(filter_matches(p, str("title", FilterOp::contains, "CORAL")));
    EXPECT_FALSE(filter_matches(p, str("title", FilterOp::contains, "kelp")));
    EXPECT_TRUE(filter_matches(p, str("date", FilterOp::gt, "2015-02-28")));
    EXPECT_FALSE(filter_matches(p, str("date", FilterOp::lt, "2015-03-01")));
    EXPECT_FALSE(filter_matches(p, num("missing", FilterOp::eq, 1)));
}

TEST(FilterMatches, YearBoundary) {
    const Skb skb = Skb::build({node_with(1, "paper", {{"year", AttrValue::from_number(2010, "2010")}}),
                                node_with(2, "paper", {{"year", AttrValue::from_number(2013, "2013")}})},
                               {});
    AttributeFilter f;
    f.attr = "year";
    f.op = FilterOp::ge;
    f.value.kind = Literal::Kind::number;
    f.value.number = 2012;
    f.value.text = "2012";
    NodeSet kept;
    for (const auto& n : skb.nodes()) {
        if (filter_matches(n, f)) kept.push_back(n.id);
    }
    EXPECT_EQ(kept, (NodeSet{NodeId{2}}));
}

class FixtureGrounding : public ::testing::Test {
protected:
    void SetUp() override {
        skb = Skb::load_dir(fixture_dir());
        extraction = parse_cypher(testing_support::kRunningExampleCypher, skb.node_types(),
                                  skb.edge_types(), ParseMode::strict_nodes);
    }

    CandidateTable table(long long l_max) {
        HashEmbeddingProvider provider(256);
        Embedder embedder(provider);
        EmbeddingSpace space(SpaceVariant::text_only, provider.id());
        return retrieve_symbol_candidates(extraction, skb, space, embedder, l_max,
                                          ParseMode::strict_nodes);
    }

    Skb skb;
    CypherExtraction extraction;
};

TEST_F(FixtureGrounding, MiamiConstantRanking) {
    const auto t = table(3);
    const auto& i = t.at("i");
    ASSERT_EQ(i.kind, CandidateSet::Kind::ranked);
    ASSERT_EQ(i.ranked.size(), 3u);
    EXPECT_EQ(i.ranked[0], node_named(skb, "University of Miami"));
    EXPECT_EQ(i.ranked[1], node_named(skb, "Miami University"));

    HashEmbeddingProvider provider(256);
    const std::vector<std::string> query{"Miami uni"};
    const auto q = provider.embed(query)[0];
    std::map<NodeId, std::vector<float>> vecs;
    for (NodeId v : skb.nodes_of_type("institution")) {
        const std::vector<std::string> text{
            render_node_text(skb, v, SpaceVariant::text_only, DetailLevel::full)};
        vecs[v] = provider.embed(text)[0];
    }
    EXPECT_EQ(i.ranked, oracle::full_sort_top_n(q, vecs, 3));
}

TEST_F(FixtureGrounding, YearFilterIsLinearScan) {
    const auto t = table(100);
    const auto& p = t.at("p");
    ASSERT_EQ(p.kind, CandidateSet::Kind::materialized);
    NodeSet oracle;
    for (const auto& n : skb.nodes()) {
        auto it = n.attributes.find("publication_year");
        if (n.type == "paper" && it != n.attributes.end() && it->second.number == 2015) {
            oracle.push_back(n.id);
        }
    }
    EXPECT_EQ(p.members, oracle);
    EXPECT_GE(oracle.size(), 3u);
    // Unconstrained variables stay lazy.
    EXPECT_EQ(t.at("a").kind, CandidateSet::Kind::universe);
    EXPECT_EQ(t.at("a").universe_type, std::optional<std::string>("author"));
}

TEST_F(FixtureGrounding, RunningExampleScope) {
    const auto t = table(100);
    EXPECT_TRUE(ground_triplets(extraction.triplets, t, 1, "p", skb).empty());
    const NodeSet l2 = ground_triplets(extraction.triplets, t, 2, "p", skb);
    EXPECT_EQ(l2, (NodeSet{node_named(skb, "RNA Transcription"), node_named(skb, "Review on Ribosomes")}));
    for (NodeId v : l2) {
        EXPECT_EQ(skb.node(v).type, "paper");
        EXPECT_EQ(skb.node(v).attributes.at("publication_year").number, 2015);
    }
}

TEST_F(FixtureGrounding, HardFiltersAreExact) {
    const auto t = table(100);
    for (const auto& [sym, spec] : extraction.symbols) {
        const NodeSet members = t.at(sym).materialize(skb, 100);
        for (NodeId v : members) {
            for (const auto& f : spec.filters) EXPECT_TRUE(filter_matches(skb.node(v), f)) << sym;
        }
    }
}

TEST(RetrieveCandidates, UnknownAttributeFallsBackToSearchString) {
    const Skb skb = Skb::build(
        {node_with(1, "paper", {{"title", AttrValue::from_string("Coral Reefs")}}),
         node_with(2, "paper", {{"title", AttrValue::from_string("Kelp Forests")}})},
        {});
    const auto ex = parse_cypher("MATCH (p:paper {title: 'reefs'}) WHERE p.venue = 'Nature' RETURN p",
                                 skb.node_types(), skb.edge_types(), ParseMode::strict_nodes);
    HashEmbeddingProvider provider(64);
    Embedder embedder(provider);
    EmbeddingSpace space(SpaceVariant::text_only, provider.id());
    const auto t = retrieve_symbol_candidates(ex, skb, space, embedder, 10, ParseMode::strict_nodes);
    const auto& p = t.at("p");
    // The filter would have removed both papers; as a search-string suffix it does not.
    ASSERT_EQ(p.kind, CandidateSet::Kind::ranked);
    EXPECT_EQ(p.ranked.size(), 2u);
    EXPECT_EQ(p.ranked.front(), NodeId{1});
    EXPECT_FALSE(t.notes.empty());
}

TEST(RetrieveCandidates, LenientUsesAllNodes) {
    const Skb skb = Skb::build({node_with(1, "paper", {}), node_with(2, "author", {})}, {});
    const auto ex = parse_cypher("MATCH (a:author)-[:wrote]->(p:paper) RETURN p", skb.node_types(),
                                 {"wrote"}, ParseMode::lenient);
    HashEmbeddingProvider provider(64);
    Embedder embedder(provider);
    EmbeddingSpace space(SpaceVariant::text_only, provider.id());
    const auto t = retrieve_symbol_candidates(ex, skb, space, embedder, 10, ParseMode::lenient);
    EXPECT_EQ(t.at("p").materialize(skb, 10), skb.all_nodes());
}

TEST(GroundTriplets, EmptyTripletsKeepTarget) {
    const Skb skb = Skb::build({node_with(1, "paper", {}), node_with(2, "author", {})}, {});
    CandidateTable t;
    t.entries["p"] = CandidateSet::make_universe(std::string("paper"));
    EXPECT_EQ(ground_triplets({}, t, 1, "p", skb), (NodeSet{NodeId{1}}));
    t.entries["p"] = CandidateSet::make_materialized({NodeId{1}, NodeId{2}});
    EXPECT_EQ(ground_triplets({}, t, 1, "p", skb), (NodeSet{NodeId{1}, NodeId{2}}));
    EXPECT_THROW(ground_triplets({}, t, 1, "missing", skb), Error);
}

TEST(GroundTriplets, MatchesJoinOracleOnRandomInstances) {
    std::mt19937_64 rng(99);
    int acyclic = 0, cyclic = 0;
    for (int round = 0; round < 200; ++round) {
        const Skb skb = oracle::random_skb(rng, 30, 4);
        const bool want_cycle = round % 3 == 0;
        const auto pattern = oracle::random_pattern(rng, skb, 3, want_cycle);
        auto symbols = pattern.symbols;
        symbols.push_back("free");
        const auto table = oracle::random_table(rng, skb, symbols);
        std::uniform_int_distribution<std::size_t> pick(0, symbols.size() - 1);
        const std::string target = symbols[pick(rng)];
        std::uniform_int_distribution<std::size_t> l_dist(1, 20);
        const std::size_t l = l_dist(rng);
        const NodeSet got = ground_triplets(pattern.triplets, table, l, target, skb);
        const NodeSet want = oracle::join_projection(skb, pattern.triplets,
                                                     oracle::sliced_sets(table, skb, l), target);
        if (oracle::has_cycle(pattern.triplets)) {
            ++cyclic;
            EXPECT_TRUE(std::includes(got.begin(), got.end(), want.begin(), want.end())) << round;
        } else {
            ++acyclic;
            EXPECT_EQ(got, want) << round;
        }
    }
    EXPECT_GT(acyclic, 50);
    EXPECT_GT(cyclic, 20);
}

TEST(GroundTriplets, MonotoneInScopeAndSound) {
    std::mt19937_64 rng(4242);
    for (int round = 0; round < 100; ++round) {
        const Skb skb = oracle::random_skb(rng, 30, 3);
        const auto pattern = oracle::random_pattern(rng, skb, 4, round % 2 == 0);
        const auto table = oracle::random_table(rng, skb, pattern.symbols);
        const std::string target = pattern.triplets.front().tail;
        NodeSet previous;
        for (std::size_t l = 1; l <= 10; ++l) {
            GroundingStats stats;
            const NodeSet cur = ground_triplets(pattern.triplets, table, l, target, skb, &stats);
            EXPECT_TRUE(std::includes(cur.begin(), cur.end(), previous.begin(), previous.end()))
                << round << " l=" << l;
            previous = cur;
            // Fixpoint termination bound.
            std::size_t initial = 0;
            for (const auto& [s, set] : oracle::sliced_sets(table, skb, l)) initial += set.size();
            EXPECT_LE(stats.passes, initial + 1);
        }
        // Soundness at l=10: each surviving target value has a partner in the
        // surviving neighbor set for every triplet touching the target.
        const NodeSet result = ground_triplets(pattern.triplets, table, 10, target, skb);
        const auto sets = oracle::sliced_sets(table, skb, 10);
        for (NodeId v : result) {
            for (const auto& t : pattern.triplets) {
                if (t.tail != target || t.head == target) continue;
                bool ok = false;
                for (NodeId h : sets.at(t.head)) {
                    ok = ok || oracle::has_edge(skb, h, t, v);
                }
                EXPECT_TRUE(ok) << round;
            }
        }
    }
}

TEST(ScopeSchedule, EffectiveCounts) {
    EXPECT_EQ(scope_schedule(100), (std::vector<long long>{1, 2, 4, 9, 26, 100}));
    // Independent recurrence in double precision.
    std::vector<double> ls{1.0};
    while (ls.back() < 100) ls.push_back(std::pow(ls.back(), 1.5) + 0.5);
    ASSERT_EQ(ls.size(), 7u);
    EXPECT_NEAR(ls[2], 2.3371, 1e-4);
    EXPECT_NEAR(ls[3], 4.0729, 1e-4);
    EXPECT_NEAR(ls[6], 134.98, 1e-2);
    EXPECT_DOUBLE_EQ(next_scope(1.0), 1.5);
    EXPECT_EQ(scope_schedule(1), (std::vector<long long>{1}));
    EXPECT_EQ(scope_schedule(3), (std::vector<long long>{1, 2, 3}));
}

/// Constant c ranked over `n` nodes of type "x"; each links to a target of
/// type "y" so every extra constant candidate adds one target candidate.
struct StarInstance {
    Skb skb;
    CypherExtraction extraction;
    CandidateTable table;

    explicit StarInstance(std::size_t n) {
        std::vector<Node> nodes;
        std::vector<Edge> edges;
        std::vector<NodeId> order;
        for (std::size_t i = 0; i < n; ++i) {
            nodes.push_back(node_with(i + 1, "x", {}));
            nodes.push_back(node_with(1000 + i, "y", {}));
            edges.push_back({NodeId{i + 1}, "e", NodeId{1000 + i}});
            order.push_back(NodeId{i + 1});
        }
        skb = Skb::build(nodes, edges);
        extraction = parse_cypher("MATCH (c:x {name: 'q'})-[:e]->(t:y) RETURN t", skb.node_types(),
                                  skb.edge_types(), ParseMode::strict_nodes);
        table.entries["c"] = CandidateSet::make_ranked(order);
        table.entries["t"] = CandidateSet::make_universe(std::string("y"));
    }
};

TEST(ExpandScope, TrajectoryWhenNeverSatisfied) {
    StarInstance inst(150);
    const auto out = expand_scope(inst.extraction, inst.table, "t", inst.skb, 1000, 100);
    std::vector<long long> counts;
    for (const auto& it : out.trace) {
        if (it.grounded) counts.push_back(it.effective_count);
    }
    EXPECT_EQ(counts, (std::vector<long long>{1, 2, 4, 9, 26, 100}));
    EXPECT_EQ(out.iterations, 6);
    EXPECT_EQ(out.final_count, 100);
    EXPECT_EQ(out.target_candidates.size(), 100u);
}

TEST(ExpandScope, EarlyExit) {
    StarInstance inst(10);
    const auto out = expand_scope(inst.extraction, inst.table, "t", inst.skb, 1, 100);
    EXPECT_EQ(out.iterations, 1);
    EXPECT_EQ(out.target_candidates.size(), 1u);
}

TEST(ExpandScope, TerminatesAtCap) {
    StarInstance inst(5);
    const auto out = expand_scope(inst.extraction, inst.table, "t", inst.skb, 20, 100);
    EXPECT_EQ(out.target_candidates.size(), 5u);
    EXPECT_EQ(out.final_count, 100);
    EXPECT_GE(out.final_l, 100.0);
}

TEST(ExpandScope, StopsOnceKReached) {
    StarInstance inst(50);
    const auto out = expand_scope(inst.extraction, inst.table, "t", inst.skb, 5, 100);
    // Counts 1, 2, 4, 9: the first to reach 5 answers is 9.
    EXPECT_EQ(out.final_count, 9);
    EXPECT_EQ(out.target_candidates.size(), 9u);
    EXPECT_EQ(out.iterations, 4);
}

}  // namespace
}  // namespace afr
