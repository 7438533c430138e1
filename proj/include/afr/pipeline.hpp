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

#pragma once

#include "afr/common.hpp"
#include "afr/cypher.hpp"
#include "afr/embed.hpp"
#include "afr/grounding.hpp"
#include "afr/llm.hpp"
#include "afr/rerank.hpp"
#include "afr/skb.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace afr {

/// Which pipeline steps run. Mirrors the ablation rows.
enum class StepSubset {
    vss_only,    // "1+7": type prediction and pure VSS
    grounding,   // "1-5": grounded set in ascending id order
    graph_vss,   // "1-6": grounded set ranked by VSS, no fill
    hybrid,      // "1-7": graph strand plus VSS fill, no rerank
    full,        // "1-8"
};

std::string_view to_string(StepSubset s);
/// Accepts "1+7", "1-5", "1-6", "1-7", "1-8" (en dashes too).
StepSubset parse_step_subset(std::string_view s);

struct PipelineConfig {
    long long k = 20;
    long long l_max = 100;
    double alpha = 0.6667;
    ParseMode mode = ParseMode::strict_nodes;
    RerankerKind reranker = RerankerKind::pairwise;
    SpaceVariant space_step4 = SpaceVariant::text_only;
    SpaceVariant space_step6 = SpaceVariant::text_only;
    SpaceVariant space_step7 = SpaceVariant::text_plus_relations;
    std::vector<std::string> concealed_node_types;
    StepSubset steps = StepSubset::full;
    /// Context window of the chat model, prompt and completion together.
    std::size_t token_budget = 131072;
    /// Adds per-iteration grounding and rerank details to the trace.
    bool detailed_trace = false;

    void validate() const;
};

enum class Provenance { graph, vector };
std::string_view to_string(Provenance p);

struct AnswerItem {
    NodeId node;
    Provenance provenance = Provenance::vector;
    double vss_score = 0.0;
    std::optional<int> rerank_position;
};

struct QueryRecord {
    std::string id;
    std::string text;
    std::optional<NodeSet> gold;
};

struct QueryTrace {
    std::optional<std::string> target_type;
    std::string target_type_response;
    std::string cypher_text;
    CypherExtraction extraction;
    bool skipped_graph = false;
    double final_l = 0.0;
    long long final_count = 0;
    int grounding_calls = 0;
    std::size_t c_cypher_size = 0;
    std::vector<GroundingIteration> scope;
    std::vector<std::string> notes;
    LlmAccounting llm;
    std::size_t rerank_prompts = 0;
    bool rerank_flagged = false;
    std::array<std::size_t, 3> rerank_levels{};
    std::vector<RerankExchange> rerank_exchanges;
};

struct RankedAnswers {
    std::string query_id;
    std::vector<AnswerItem> items;
    QueryTrace trace;
    std::optional<std::string> error;

    std::vector<NodeId> nodes() const;
};

/// Shared, read-mostly resources for answering queries. Every member must
/// tolerate concurrent use.
struct PipelineContext {
    const Skb& skb;
    SpaceSet& spaces;
    Embedder& embedder;
    ChatProvider& chat;
    const PromptLibrary& prompts;
};

/// Graph strand: VSS over the grounded set, round(alpha * k) items.
std::vector<Scored> select_graph_candidates(const std::string& q, const NodeSet& c_cypher,
                                            const PipelineConfig& cfg, PipelineContext& ctx);

/// Vector strand: VSS over the typed pool minus the grounded set, filling to k.
std::vector<Scored> select_vss_fill(const std::string& q, const std::vector<Scored>& y_cypher,
                                    const NodeSet& c_cypher,
                                    const std::optional<std::string>& y_type,
                                    const PipelineConfig& cfg, PipelineContext& ctx);

/// Runs the configured steps for one question. Failures of providers or
/// data end up in RankedAnswers::error instead of propagating.
RankedAnswers answer_query(const QueryRecord& q, const PipelineConfig& cfg, PipelineContext& ctx);

nlohmann::json to_json(const RankedAnswers& r, bool detailed = false);

}  // namespace afr
