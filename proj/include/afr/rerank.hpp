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
#include "afr/embed.hpp"
#include "afr/llm.hpp"
#include "afr/skb.hpp"

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace afr {

enum class RerankerKind { none, pointwise, listwise, pairwise };

std::string_view to_string(RerankerKind k);
RerankerKind parse_reranker_kind(std::string_view s);

struct RerankExchange {
    std::string prompt;
    std::string response;
    std::vector<int> local_ids;
    bool failed = false;
};

struct RerankOutcome {
    std::vector<NodeId> order;
    std::size_t prompts_sent = 0;
    std::size_t tokens_in = 0;
    std::size_t tokens_out = 0;
    std::size_t failures = 0;
    /// Descriptions rendered at each detail level, indexed by DetailLevel.
    std::array<std::size_t, 3> degradations{};
    /// Set when a response could not be used and prior order was kept.
    bool flagged = false;
    std::vector<RerankExchange> exchanges;
};

struct RerankContext {
    const Skb& skb;
    LlmSession& llm;
    const PromptLibrary& prompts;
    std::string query;
    /// Candidates of the non-target symbols; relations to these survive the
    /// reduced detail level.
    NodeSet anchors;
};

std::string build_candidate_prompt_text(const Skb& skb, NodeId node, DetailLevel level,
                                        const NodeSet& anchors);

/// First number in [0, 1] appearing in the text.
std::optional<double> parse_score(std::string_view response);

/// Local ids 1..k in response order, repaired into a full permutation.
/// `usable` reports whether any valid id was found.
std::vector<int> parse_listwise(std::string_view response, int k, bool* usable = nullptr);

/// First integer in the text equal to `a` or `b`.
std::optional<int> parse_choice(std::string_view response, int a, int b);

/// Merge insertion (Ford-Johnson) sort of the indices 0..n-1. `later_wins(a, b)`
/// is asked only for a < b and says whether b should rank ahead of a. Uses
/// at most sum_{i=1..n} ceil(log2(3i/4)) calls, 62 for n = 20.
std::vector<std::size_t> merge_insertion_order(
    std::size_t n, const std::function<bool(std::size_t, std::size_t)>& later_wins);

RerankOutcome rerank_pointwise(const std::vector<NodeId>& prior, RerankContext& ctx);
RerankOutcome rerank_listwise(const std::vector<NodeId>& prior, RerankContext& ctx);
RerankOutcome rerank_pairwise(const std::vector<NodeId>& prior, RerankContext& ctx);

RerankOutcome rerank(RerankerKind kind, const std::vector<NodeId>& prior, RerankContext& ctx);

}  // namespace afr
