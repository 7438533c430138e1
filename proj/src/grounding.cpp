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

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>

namespace afr {

CandidateSet CandidateSet::make_ranked(std::vector<NodeId> order) {
    CandidateSet s;
    s.kind = Kind::ranked;
    s.ranked = std::move(order);
    return s;
}

CandidateSet CandidateSet::make_materialized(NodeSet members) {
    CandidateSet s;
    s.kind = Kind::materialized;
    sort_unique(members);
    s.members = std::move(members);
    return s;
}

CandidateSet CandidateSet::make_universe(std::optional<std::string> node_type) {
    CandidateSet s;
    s.kind = Kind::universe;
    s.universe_type = std::move(node_type);
    return s;
}

std::size_t CandidateSet::size(const Skb& skb) const {
    switch (kind) {
        case Kind::ranked: return ranked.size();
        case Kind::materialized: return members.size();
        case Kind::universe:
            return universe_type ? skb.nodes_of_type(*universe_type).size() : skb.node_count();
    }
    return 0;
}

NodeSet CandidateSet::materialize(const Skb& skb, std::size_t l) const {
    switch (kind) {
        case Kind::ranked: {
            NodeSet out(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(
                                                             std::min(l, ranked.size())));
            sort_unique(out);
            return out;
        }
        case Kind::materialized: return members;
        case Kind::universe:
            return universe_type ? skb.nodes_of_type(*universe_type) : skb.all_nodes();
    }
    return {};
}

const CandidateSet& CandidateTable::at(const std::string& symbol) const {
    auto it = entries.find(symbol);
    if (it == entries.end()) throw UsageError("no candidates for symbol '" + symbol + "'");
    return it->second;
}

namespace {

std::optional<double> as_number(const AttrValue& v) {
    if (v.kind == AttrValue::Kind::number) return v.number;
    double d = 0.0;
    if (parse_number(v.text, d)) return d;
    return std::nullopt;
}

template <typename T>
bool compare(const T& a, const T& b, FilterOp op) {
    switch (op) {
        case FilterOp::eq: return a == b;
        case FilterOp::lt: return a < b;
        case FilterOp::le: return a <= b;
        case FilterOp::gt: return a > b;
        case FilterOp::ge: return a >= b;
        case FilterOp::contains: return false;
    }
    return false;
}

}  // namespace

bool filter_matches(const Node& node, const AttributeFilter& filter) {
    auto it = node.attributes.find(filter.attr);
    if (it == node.attributes.end()) return false;
    const AttrValue& have = it->second;
    const Literal& want = filter.value;
    if (filter.op == FilterOp::contains) return icontains(have.text, want.text);

    double want_num = want.number;
    const bool want_is_num =
        want.kind == Literal::Kind::number || parse_number(want.text, want_num);
    if (want_is_num) {
        if (auto have_num = as_number(have)) return compare(*have_num, want_num, filter.op);
    }
    if (is_iso_date(have.text) && is_iso_date(want.text)) {
        return compare(have.text, want.text, filter.op);
    }
    return compare(to_lower(have.text), to_lower(want.text), filter.op);
}

CandidateTable retrieve_symbol_candidates(const CypherExtraction& extraction, const Skb& skb,
                                          EmbeddingSpace& space, Embedder& embedder,
                                          long long l_max, ParseMode mode) {
    if (l_max < 1) throw UsageError("l_max must be at least 1");
    CandidateTable table;
    for (const auto& [id, spec] : extraction.symbols) {
        std::optional<std::string> base_type;
        if (filters_node_labels(mode) && spec.node_type_known) base_type = spec.node_type;
        const std::string attr_scope = spec.node_type_known ? *spec.node_type : std::string();

        std::optional<std::string> search = spec.search_string;
        std::vector<AttributeFilter> filters;
        for (const auto& f : spec.filters) {
            if (skb.attribute_exists(attr_scope, f.attr)) {
                filters.push_back(f);
                continue;
            }
            if (search) {
                *search += "; " + f.attr + " " + f.value.text;
                table.notes.push_back(id + "." + f.attr + ": unknown attribute, moved to search string");
            } else {
                table.notes.push_back(id + "." + f.attr + ": unknown attribute, filter dropped");
            }
        }

        if (!search && filters.empty()) {
            table.entries.emplace(id, CandidateSet::make_universe(base_type));
            continue;
        }
        const NodeSet& base = base_type ? skb.nodes_of_type(*base_type) : skb.all_nodes();
        NodeSet survivors;
        for (NodeId v : base) {
            const Node& n = skb.node(v);
            if (std::all_of(filters.begin(), filters.end(),
                            [&](const AttributeFilter& f) { return filter_matches(n, f); })) {
                survivors.push_back(v);
            }
        }
        if (!search) {
            table.entries.emplace(id, CandidateSet::make_materialized(std::move(survivors)));
            continue;
        }
        std::vector<NodeId> order;
        for (const auto& s : vss(*search, survivors, l_max, space, skb, embedder)) {
            order.push_back(s.node);
        }
        table.entries.emplace(id, CandidateSet::make_ranked(std::move(order)));
    }
    return table;
}

namespace {

struct Working {
    bool universe = false;
    std::optional<std::string> type;
    NodeSet set;

    bool admits(const Skb& skb, NodeId v) const {
        if (universe) return !type || skb.node(v).type == *type;
        return set_contains(set, v);
    }
    std::size_t size(const Skb& skb) const {
        if (!universe) return set.size();
        return type ? skb.nodes_of_type(*type).size() : skb.node_count();
    }
};

// Nodes reachable from `from` over the edge type(s) in direction `dir`.
NodeSet reach(const Skb& skb, const Working& from, const std::vector<std::string>& edge_types,
              Direction dir) {
    NodeSet out;
    for (const auto& e : edge_types) {
        const auto& edges = skb.edges_of_type(e);
        if (from.universe || from.set.size() * 8 > edges.size()) {
            for (const auto& edge : edges) {
                const NodeId src = dir == Direction::outgoing ? edge.head : edge.tail;
                const NodeId dst = dir == Direction::outgoing ? edge.tail : edge.head;
                if (from.admits(skb, src)) out.push_back(dst);
            }
        } else {
            for (NodeId v : from.set) {
                const auto& n = skb.neighbors(v, e, dir);
                out.insert(out.end(), n.begin(), n.end());
            }
        }
    }
    sort_unique(out);
    return out;
}

// S <- S ∩ allowed. Returns whether S shrank.
bool restrict(const Skb& skb, Working& s, const NodeSet& allowed) {
    const std::size_t before = s.size(skb);
    if (s.universe) {
        NodeSet next;
        for (NodeId v : allowed) {
            if (s.admits(skb, v)) next.push_back(v);
        }
        s.universe = false;
        s.set = std::move(next);
    } else {
        s.set = set_intersection(s.set, allowed);
    }
    return s.set.size() < before;
}

}  // namespace

NodeSet ground_triplets(const std::vector<Triplet>& triplets, const CandidateTable& table,
                        std::size_t l, const std::string& target, const Skb& skb,
                        GroundingStats* stats) {
    if (!table.entries.count(target)) {
        throw UsageError("target symbol '" + target + "' has no candidate entry");
    }
    std::map<std::string, Working> work;
    auto load = [&](const std::string& sym) -> Working& {
        auto it = work.find(sym);
        if (it != work.end()) return it->second;
        const CandidateSet& cs = table.at(sym);
        Working w;
        if (cs.kind == CandidateSet::Kind::universe) {
            w.universe = true;
            w.type = cs.universe_type;
        } else {
            w.set = cs.materialize(skb, l);
        }
        return work.emplace(sym, std::move(w)).first->second;
    };
    load(target);
    for (const auto& t : triplets) {
        load(t.head);
        load(t.tail);
    }

    std::vector<std::vector<std::string>> edge_sets;
    for (const auto& t : triplets) {
        edge_sets.push_back(t.edge_known ? std::vector<std::string>{t.edge_type} : skb.edge_types());
    }

    std::size_t passes = 0;
    bool changed = true;
    while (changed) {
        changed = false;
        ++passes;
        for (std::size_t i = 0; i < triplets.size(); ++i) {
            const Triplet& t = triplets[i];
            const NodeSet tails = reach(skb, work.at(t.head), edge_sets[i], Direction::outgoing);
            changed |= restrict(skb, work.at(t.tail), tails);
            const NodeSet heads = reach(skb, work.at(t.tail), edge_sets[i], Direction::incoming);
            changed |= restrict(skb, work.at(t.head), heads);
        }
    }

    bool dead = false;
    for (const auto& t : triplets) {
        if (work.at(t.head).size(skb) == 0 || work.at(t.tail).size(skb) == 0) dead = true;
    }
    if (stats) {
        stats->passes = passes;
        stats->surviving.clear();
        for (const auto& [sym, w] : work) stats->surviving[sym] = dead ? 0 : w.size(skb);
    }
    if (dead) return {};
    const Working& result = work.at(target);
    if (!result.universe) return result.set;
    return result.type ? skb.nodes_of_type(*result.type) : skb.all_nodes();
}

double next_scope(double l) { return std::pow(l, 1.5) + 0.5; }

std::vector<long long> scope_schedule(long long l_max) {
    std::vector<long long> counts;
    double l = 1.0;
    for (;;) {
        const long long eff = std::min(round_half_up(l), l_max);
        if (counts.empty() || counts.back() != eff) counts.push_back(eff);
        if (l >= static_cast<double>(l_max)) break;
        l = next_scope(l);
    }
    return counts;
}

GroundingOutcome expand_scope(const CypherExtraction& extraction, const CandidateTable& table,
                              const std::string& target, const Skb& skb, long long k,
                              long long l_max) {
    if (k < 1 || l_max < 1) throw UsageError("k and l_max must be at least 1");
    GroundingOutcome out;
    double l = 1.0;
    long long previous = -1;
    for (;;) {
        GroundingIteration it;
        it.l = l;
        it.effective_count = std::min(round_half_up(l), l_max);
        if (it.effective_count != previous) {
            GroundingStats stats;
            out.target_candidates =
                ground_triplets(extraction.triplets, table,
                                static_cast<std::size_t>(it.effective_count), target, skb, &stats);
            out.per_symbol_surviving = stats.surviving;
            out.final_count = it.effective_count;
            ++out.iterations;
            it.grounded = true;
            it.sizes = std::move(stats.surviving);
            previous = it.effective_count;
        }
        it.result_size = out.target_candidates.size();
        out.final_l = l;
        spdlog::debug("scope l={:.3f} count={} grounded={} |C|={}", l, it.effective_count,
                      it.grounded, it.result_size);
        out.trace.push_back(std::move(it));
        if (static_cast<long long>(out.target_candidates.size()) >= k ||
            l >= static_cast<double>(l_max)) {
            break;
        }
        l = next_scope(l);
    }
    return out;
}

}  // namespace afr
