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

#include <spdlog/spdlog.h>

#include <algorithm>

namespace afr {

std::string_view to_string(StepSubset s) {
    switch (s) {
        case StepSubset::vss_only: return "1+7";
        case StepSubset::grounding: return "1-5";
        case StepSubset::graph_vss: return "1-6";
        case StepSubset::hybrid: return "1-7";
        case StepSubset::full: return "1-8";
    }
    return "?";
}

StepSubset parse_step_subset(std::string_view raw) {
    std::string s(raw);
    for (std::size_t pos; (pos = s.find("\xE2\x80\x93")) != std::string::npos;) s.replace(pos, 3, "-");
    if (s == "1+7") return StepSubset::vss_only;
    if (s == "1-5") return StepSubset::grounding;
    if (s == "1-6") return StepSubset::graph_vss;
    if (s == "1-7") return StepSubset::hybrid;
    if (s == "1-8") return StepSubset::full;
    throw UsageError("unknown step subset '" + std::string(raw) + "'");
}

void PipelineConfig::validate() const {
    if (k < 1) throw UsageError("k must be at least 1");
    if (l_max < 1) throw UsageError("l_max must be at least 1");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw UsageError("alpha must lie in [0, 1]");
    if (token_budget == 0) throw UsageError("token_budget must be positive");
}

std::string_view to_string(Provenance p) { return p == Provenance::graph ? "graph" : "vector"; }

std::vector<NodeId> RankedAnswers::nodes() const {
    std::vector<NodeId> out;
    out.reserve(items.size());
    for (const auto& it : items) out.push_back(it.node);
    return out;
}

std::vector<Scored> select_graph_candidates(const std::string& q, const NodeSet& c_cypher,
                                            const PipelineConfig& cfg, PipelineContext& ctx) {
    const long long n = round_half_up(cfg.alpha * static_cast<double>(cfg.k));
    if (n == 0 || c_cypher.empty()) return {};
    return vss(q, c_cypher, n, ctx.spaces.get(cfg.space_step6), ctx.skb, ctx.embedder);
}

std::vector<Scored> select_vss_fill(const std::string& q, const std::vector<Scored>& y_cypher,
                                    const NodeSet& c_cypher,
                                    const std::optional<std::string>& y_type,
                                    const PipelineConfig& cfg, PipelineContext& ctx) {
    const long long n = cfg.k - static_cast<long long>(y_cypher.size());
    if (n <= 0) return {};
    const NodeSet& typed = y_type ? ctx.skb.nodes_of_type(*y_type) : ctx.skb.all_nodes();
    NodeSet pool;
    std::set_difference(typed.begin(), typed.end(), c_cypher.begin(), c_cypher.end(),
                        std::back_inserter(pool));
    if (pool.empty()) return {};
    return vss(q, pool, n, ctx.spaces.get(cfg.space_step7), ctx.skb, ctx.embedder);
}

namespace {

std::vector<std::string> visible_types(const Skb& skb, const PipelineConfig& cfg) {
    std::vector<std::string> out;
    for (const auto& t : skb.node_types()) {
        const bool hidden = std::any_of(
            cfg.concealed_node_types.begin(), cfg.concealed_node_types.end(),
            [&](const std::string& c) { return label_key(c) == label_key(t); });
        if (!hidden) out.push_back(t);
    }
    return out;
}

NodeSet anchor_nodes(const CandidateTable& table, const std::string& target, const Skb& skb,
                     long long count) {
    NodeSet out;
    for (const auto& [sym, cs] : table.entries) {
        if (sym == target || cs.kind == CandidateSet::Kind::universe) continue;
        const NodeSet m = cs.materialize(skb, static_cast<std::size_t>(count));
        out.insert(out.end(), m.begin(), m.end());
    }
    sort_unique(out);
    return out;
}

void run_steps(const QueryRecord& q, const PipelineConfig& cfg, PipelineContext& ctx,
               LlmSession& llm, RankedAnswers& out) {
    QueryTrace& trace = out.trace;
    const Skb& skb = ctx.skb;

    // Step 1: target type.
    const auto prediction = derive_target_type(llm, ctx.prompts, q.text, skb.node_types());
    trace.target_type_response = prediction.raw;
    std::optional<std::string> y_type;
    if (prediction.valid) y_type = prediction.type;
    trace.target_type = y_type;

    NodeSet c_cypher;
    std::optional<CandidateTable> table;
    trace.skipped_graph = true;

    if (cfg.steps != StepSubset::vss_only) {
        // Steps 2 and 3: Cypher derivation and parsing.
        trace.cypher_text = derive_cypher(llm, ctx.prompts, q.text, visible_types(skb, cfg),
                                          skb.edge_types(), y_type);
        CypherExtraction ex =
            parse_cypher(trace.cypher_text, skb.node_types(), skb.edge_types(), cfg.mode);
        if (!ex.target_symbol.empty() && y_type) {
            auto& spec = ex.symbols[ex.target_symbol];
            if (!spec.node_type) {
                spec.id = ex.target_symbol;
                spec.node_type = y_type;
                spec.node_type_known = true;
                ex.target_type = y_type;
                trace.notes.push_back("target symbol typed from step 1");
            }
        }
        trace.extraction = ex;

        // Steps 4 and 5: candidates and grounding with scope expansion.
        if (!ex.empty() && ex.target_in_triplets()) {
            trace.skipped_graph = false;
            table = retrieve_symbol_candidates(ex, skb, ctx.spaces.get(cfg.space_step4),
                                               ctx.embedder, cfg.l_max, cfg.mode);
            trace.notes.insert(trace.notes.end(), table->notes.begin(), table->notes.end());
            auto outcome = expand_scope(ex, *table, ex.target_symbol, skb, cfg.k, cfg.l_max);
            c_cypher = std::move(outcome.target_candidates);
            trace.final_l = outcome.final_l;
            trace.final_count = outcome.final_count;
            trace.grounding_calls = outcome.iterations;
            trace.scope = std::move(outcome.trace);
        }
        trace.c_cypher_size = c_cypher.size();
    }

    if (cfg.steps == StepSubset::grounding) {
        for (NodeId v : c_cypher) {
            if (static_cast<long long>(out.items.size()) >= cfg.k) break;
            out.items.push_back({v, Provenance::graph, 0.0, std::nullopt});
        }
        return;
    }

    // Step 6: graph strand.
    std::vector<Scored> y_cypher;
    if (cfg.steps == StepSubset::graph_vss) {
        if (!c_cypher.empty()) {
            y_cypher = vss(q.text, c_cypher, cfg.k, ctx.spaces.get(cfg.space_step6), skb,
                           ctx.embedder);
        }
    } else if (cfg.steps != StepSubset::vss_only) {
        y_cypher = select_graph_candidates(q.text, c_cypher, cfg, ctx);
    }
    for (const auto& s : y_cypher) out.items.push_back({s.node, Provenance::graph, s.score, {}});
    if (cfg.steps == StepSubset::graph_vss) return;

    // Step 7: vector strand.
    for (const auto& s : select_vss_fill(q.text, y_cypher, c_cypher, y_type, cfg, ctx)) {
        out.items.push_back({s.node, Provenance::vector, s.score, {}});
    }
    if (cfg.steps != StepSubset::full || cfg.reranker == RerankerKind::none) return;

    // Step 8: rerank the merged list.
    RerankContext rctx{skb, llm, ctx.prompts, q.text,
                       table ? anchor_nodes(*table, trace.extraction.target_symbol, skb,
                                            trace.final_count)
                             : NodeSet{}};
    const auto prior = out.nodes();
    RerankOutcome ro = rerank(cfg.reranker, prior, rctx);
    std::vector<AnswerItem> reordered;
    for (std::size_t pos = 0; pos < ro.order.size(); ++pos) {
        auto it = std::find_if(out.items.begin(), out.items.end(),
                               [&](const AnswerItem& a) { return a.node == ro.order[pos]; });
        AnswerItem item = *it;
        item.rerank_position = static_cast<int>(pos) + 1;
        reordered.push_back(item);
    }
    out.items = std::move(reordered);
    trace.rerank_prompts = ro.prompts_sent;
    trace.rerank_flagged = ro.flagged;
    trace.rerank_levels = ro.degradations;
    if (cfg.detailed_trace) trace.rerank_exchanges = std::move(ro.exchanges);
}

}  // namespace

RankedAnswers answer_query(const QueryRecord& q, const PipelineConfig& cfg, PipelineContext& ctx) {
    cfg.validate();
    RankedAnswers out;
    out.query_id = q.id;
    LlmSession llm(ctx.chat, cfg.token_budget);
    try {
        run_steps(q, cfg, ctx, llm, out);
    } catch (const UsageError&) {
        throw;
    } catch (const Error& e) {
        spdlog::error("query {}: {}", q.id, e.what());
        out.items.clear();
        out.error = e.what();
    }
    out.trace.llm = llm.accounting();
    return out;
}

namespace {

nlohmann::json filter_json(const AttributeFilter& f) {
    nlohmann::json value;
    if (f.value.kind == Literal::Kind::number) {
        value = f.value.number;
    } else {
        value = f.value.text;
    }
    return {{"attr", f.attr}, {"op", std::string(to_string(f.op))}, {"value", value}};
}

}  // namespace

nlohmann::json to_json(const RankedAnswers& r, bool detailed) {
    using nlohmann::json;
    json answers = json::array();
    for (std::size_t i = 0; i < r.items.size(); ++i) {
        const auto& it = r.items[i];
        answers.push_back({{"node_id", it.node.value},
                           {"provenance", std::string(to_string(it.provenance))},
                           {"rank", i + 1}});
    }
    const QueryTrace& t = r.trace;
    json triplets = json::array();
    for (const auto& tr : t.extraction.triplets) {
        triplets.push_back({tr.head, tr.edge_type, tr.tail});
    }
    json trace{{"target_type", t.target_type ? json(*t.target_type) : json(nullptr)},
               {"cypher_text", t.cypher_text},
               {"triplets", triplets},
               {"final_l", t.final_l},
               {"skipped_graph", t.skipped_graph},
               {"c_cypher_size", t.c_cypher_size},
               {"grounding_calls", t.grounding_calls},
               {"llm",
                {{"prompts", t.llm.prompts},
                 {"tokens_in", t.llm.tokens_in},
                 {"tokens_out", t.llm.tokens_out},
                 {"failures", t.llm.failures}}},
               {"rerank_prompts", t.rerank_prompts}};
    json dropped = json::array();
    for (const auto& d : t.extraction.dropped) dropped.push_back({{"fragment", d.fragment}, {"reason", d.reason}});
    trace["dropped"] = dropped;
    if (!t.notes.empty()) trace["notes"] = t.notes;
    if (detailed) {
        json symbols = json::object();
        for (const auto& [id, s] : t.extraction.symbols) {
            json f = json::array();
            for (const auto& flt : s.filters) f.push_back(filter_json(flt));
            symbols[id] = {{"type", s.node_type ? json(*s.node_type) : json(nullptr)},
                           {"kind", s.kind == SymbolKind::constant ? "constant" : "variable"},
                           {"search", s.search_string ? json(*s.search_string) : json(nullptr)},
                           {"filters", f}};
        }
        trace["symbols"] = symbols;
        json scope = json::array();
        for (const auto& it : t.scope) {
            scope.push_back({{"l", it.l},
                             {"effective_count", it.effective_count},
                             {"grounded", it.grounded},
                             {"sizes", it.sizes},
                             {"c_cypher", it.result_size}});
        }
        trace["scope"] = scope;
        trace["rerank_levels"] = {{"full", t.rerank_levels[0]},
                                  {"reduced", t.rerank_levels[1]},
                                  {"bare", t.rerank_levels[2]}};
        json ex = json::array();
        for (const auto& e : t.rerank_exchanges) {
            ex.push_back({{"local_ids", e.local_ids}, {"prompt", e.prompt}, {"response", e.response},
                          {"failed", e.failed}});
        }
        trace["rerank_exchanges"] = ex;
    }
    json out{{"id", r.query_id}, {"answers", answers}, {"trace", trace}};
    if (r.error) out["error"] = *r.error;
    return out;
}

}  // namespace afr
