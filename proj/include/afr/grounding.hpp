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
#include "afr/skb.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace afr {

/// Candidates of one symbol. Ranked sets come from constants and are sliced
/// during scope expansion; universes stay lazy until grounding touches them.
struct CandidateSet {
    enum class Kind { ranked, materialized, universe };

    Kind kind = Kind::universe;
    std::vector<NodeId> ranked;                // best first, kind == ranked
    NodeSet members;                           // kind == materialized
    std::optional<std::string> universe_type;  // kind == universe; empty = all nodes

    static CandidateSet make_ranked(std::vector<NodeId> order);
    static CandidateSet make_materialized(NodeSet members);
    static CandidateSet make_universe(std::optional<std::string> node_type);

    std::size_t size(const Skb& skb) const;
    /// Members as a set, ranked lists cut to their first `l` entries.
    NodeSet materialize(const Skb& skb, std::size_t l) const;
};

struct CandidateTable {
    std::map<std::string, CandidateSet> entries;
    /// Human-readable notes on filters that were rewritten or dropped.
    std::vector<std::string> notes;

    const CandidateSet& at(const std::string& symbol) const;
};

/// Hard-filter semantics shared by retrieval and tests.
bool filter_matches(const Node& node, const AttributeFilter& filter);

/// Builds the per-symbol candidate table. Constants are ranked by VSS of
/// their search string over the filtered pool, capped at l_max.
CandidateTable retrieve_symbol_candidates(const CypherExtraction& extraction, const Skb& skb,
                                          EmbeddingSpace& space, Embedder& embedder,
                                          long long l_max, ParseMode mode);

struct GroundingStats {
    std::size_t passes = 0;
    std::map<std::string, std::size_t> surviving;
};

/// Arc-consistency fixpoint over the triplets with ranked sets cut to `l`.
/// Returns the surviving target candidates; empty when any symbol taking
/// part in a triplet loses all its candidates.
NodeSet ground_triplets(const std::vector<Triplet>& triplets, const CandidateTable& table,
                        std::size_t l, const std::string& target, const Skb& skb,
                        GroundingStats* stats = nullptr);

struct GroundingIteration {
    double l = 0.0;
    long long effective_count = 0;
    bool grounded = false;
    std::map<std::string, std::size_t> sizes;
    std::size_t result_size = 0;
};

struct GroundingOutcome {
    NodeSet target_candidates;
    double final_l = 0.0;
    long long final_count = 0;
    int iterations = 0;  // grounding calls actually made
    std::map<std::string, std::size_t> per_symbol_surviving;
    std::vector<GroundingIteration> trace;
};

/// Next value of the scope schedule, l^1.5 + 0.5.
double next_scope(double l);

/// Distinct per-constant counts visited when nothing ever satisfies k.
std::vector<long long> scope_schedule(long long l_max);

GroundingOutcome expand_scope(const CypherExtraction& extraction, const CandidateTable& table,
                              const std::string& target, const Skb& skb, long long k,
                              long long l_max);

}  // namespace afr
