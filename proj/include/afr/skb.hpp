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

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace afr {

/// Direction of a neighbor lookup relative to the queried node.
enum class Direction {
    incoming,  // "+": u with (u, e, v) in E
    outgoing,  // "-": u with (v, e, u) in E
};

enum class Cardinality { one_to_one, many_to_one, one_to_many, many_to_many };

std::string_view to_string(Cardinality c);

struct AttrValue {
    enum class Kind { string, number, date };

    Kind kind = Kind::string;
    std::string text;     // original spelling, also for numbers
    double number = 0.0;  // valid when kind == number

    static AttrValue from_string(std::string s);
    static AttrValue from_number(double v, std::string repr);
};

struct Node {
    NodeId id;
    std::string type;
    std::map<std::string, AttrValue> attributes;  // keys normalized
    std::optional<std::string> document;

    /// "name" if present, otherwise "title".
    const AttrValue* display_attribute() const;
    std::string display_key() const;
    /// Name or title, falling back to the decimal id.
    std::string display_name() const;
};

struct Edge {
    NodeId head;
    std::string type;
    NodeId tail;

    friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Immutable typed property graph with per-node documents.
class Skb {
public:
    Skb() = default;

    static Skb load(const std::filesystem::path& nodes_path,
                    const std::filesystem::path& edges_path);
    /// Loads <dir>/nodes.jsonl and <dir>/edges.jsonl.
    static Skb load_dir(const std::filesystem::path& dir);
    /// Validates and indexes in-memory records. Same rules as load().
    static Skb build(std::vector<Node> nodes, std::vector<Edge> edges);

    std::size_t node_count() const noexcept { return nodes_.size(); }
    std::size_t edge_count() const noexcept { return edges_.size(); }

    bool contains(NodeId id) const noexcept;
    const Node& node(NodeId id) const;
    const std::vector<Node>& nodes() const noexcept { return nodes_; }
    const std::vector<Edge>& edges() const noexcept { return edges_; }
    const NodeSet& all_nodes() const noexcept { return all_ids_; }

    const std::vector<std::string>& node_types() const noexcept { return node_types_; }
    const std::vector<std::string>& edge_types() const noexcept { return edge_types_; }
    bool has_edge_type(std::string_view edge_type) const;

    /// Matches a label against the known spellings, ignoring case and treating
    /// spaces and underscores alike.
    std::optional<std::string> resolve_node_type(std::string_view label) const;
    std::optional<std::string> resolve_edge_type(std::string_view label) const;

    /// Unknown edge types yield the empty set; unknown nodes throw DataError.
    const NodeSet& neighbors(NodeId v, std::string_view edge_type, Direction dir) const;

    /// Stored index, no copy. Unknown types yield the empty set.
    const NodeSet& nodes_of_type(std::string_view node_type) const;

    /// Edges of one type sorted by (head, tail).
    const std::vector<Edge>& edges_of_type(std::string_view edge_type) const;

    Cardinality cardinality(std::string_view edge_type) const;

    /// Whether any node of the given type carries the attribute. An empty
    /// type means any node.
    bool attribute_exists(std::string_view node_type, std::string_view attr) const;

private:
    struct EdgeTypeIndex {
        std::vector<Edge> edges;
        std::unordered_map<NodeId, NodeSet> out;
        std::unordered_map<NodeId, NodeSet> in;
        Cardinality cardinality = Cardinality::one_to_one;
    };

    void index();
    const EdgeTypeIndex* edge_index(std::string_view edge_type) const;

    std::vector<Node> nodes_;  // sorted by id
    std::vector<Edge> edges_;  // sorted, unique
    NodeSet all_ids_;
    std::vector<std::string> node_types_;
    std::vector<std::string> edge_types_;
    std::map<std::string, NodeSet, std::less<>> by_type_;
    std::map<std::string, EdgeTypeIndex, std::less<>> by_edge_type_;
    std::map<std::string, std::vector<std::string>, std::less<>> attrs_by_type_;
    std::unordered_map<std::string, std::string> node_type_keys_;
    std::unordered_map<std::string, std::string> edge_type_keys_;
};

}  // namespace afr
