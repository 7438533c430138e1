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

#include "afr/skb.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <set>

namespace afr {

namespace {

using nlohmann::json;

const NodeSet kEmptySet;
const std::vector<Edge> kNoEdges;

template <typename Fn>
void for_each_jsonl(const std::filesystem::path& path, Fn&& fn) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto where = [&] { return path.filename().string() + ":" + std::to_string(line_no) + ": "; };
        json record;
        try {
            record = json::parse(line);
        } catch (const json::parse_error& e) {
            throw DataError(where() + "malformed JSON: " + e.what());
        }
        try {
            fn(record);
        } catch (const json::exception& e) {
            throw DataError(where() + "malformed record: " + e.what());
        } catch (const DataError& e) {
            throw DataError(where() + e.what());
        }
    }
}

std::uint64_t read_id(const json& j, const char* field) {
    const auto& v = j.at(field);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return v.get<std::uint64_t>();
    throw DataError(std::string("field '") + field + "' must be a non-negative integer");
}

Node parse_node(const json& j) {
    Node n;
    n.id = NodeId{read_id(j, "id")};
    n.type = j.at("type").get<std::string>();
    if (auto it = j.find("attributes"); it != j.end() && !it->is_null()) {
        if (!it->is_object()) throw DataError("'attributes' must be an object");
        for (const auto& [key, value] : it->items()) {
            std::string name = normalize_attr_name(key);
            if (value.is_string()) {
                n.attributes[name] = AttrValue::from_string(value.get<std::string>());
            } else if (value.is_number()) {
                n.attributes[name] = AttrValue::from_number(value.get<double>(), value.dump());
            } else if (value.is_null()) {
                continue;
            } else {
                throw DataError("attribute '" + key + "' must be a string or number");
            }
        }
    }
    if (auto it = j.find("document"); it != j.end() && !it->is_null()) {
        n.document = it->get<std::string>();
    }
    return n;
}

Edge parse_edge(const json& j) {
    return Edge{NodeId{read_id(j, "head")}, j.at("type").get<std::string>(),
                NodeId{read_id(j, "tail")}};
}

}  // namespace

std::string_view to_string(Cardinality c) {
    switch (c) {
        case Cardinality::one_to_one: return "one-to-one";
        case Cardinality::many_to_one: return "many-to-one";
        case Cardinality::one_to_many: return "one-to-many";
        case Cardinality::many_to_many: return "many-to-many";
    }
    return "?";
}

AttrValue AttrValue::from_string(std::string s) {
    AttrValue v;
    v.kind = is_iso_date(s) ? Kind::date : Kind::string;
    v.text = std::move(s);
    return v;
}

AttrValue AttrValue::from_number(double value, std::string repr) {
    AttrValue v;
    v.kind = Kind::number;
    v.number = value;
    v.text = std::move(repr);
    return v;
}

const AttrValue* Node::display_attribute() const {
    if (auto it = attributes.find("name"); it != attributes.end()) return &it->second;
    if (auto it = attributes.find("title"); it != attributes.end()) return &it->second;
    return nullptr;
}

std::string Node::display_key() const {
    if (attributes.count("name")) return "name";
    if (attributes.count("title")) return "title";
    return "id";
}

std::string Node::display_name() const {
    if (const auto* a = display_attribute()) return a->text;
    return std::to_string(id.value);
}

Skb Skb::load(const std::filesystem::path& nodes_path, const std::filesystem::path& edges_path) {
    std::vector<Node> nodes;
    for_each_jsonl(nodes_path, [&](const json& j) { nodes.push_back(parse_node(j)); });
    std::vector<Edge> edges;
    for_each_jsonl(edges_path, [&](const json& j) { edges.push_back(parse_edge(j)); });
    return build(std::move(nodes), std::move(edges));
}

Skb Skb::load_dir(const std::filesystem::path& dir) {
    return load(dir / "nodes.jsonl", dir / "edges.jsonl");
}

Skb Skb::build(std::vector<Node> nodes, std::vector<Edge> edges) {
    Skb skb;
    std::sort(nodes.begin(), nodes.end(), [](const Node& a, const Node& b) { return a.id < b.id; });
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (i > 0 && nodes[i].id == nodes[i - 1].id) {
            throw DataError("duplicate node id " + std::to_string(nodes[i].id.value));
        }
        if (trim(nodes[i].type).empty()) {
            throw DataError("node " + std::to_string(nodes[i].id.value) + " has an empty type");
        }
        for (const char* key : {"name", "title"}) {
            auto it = nodes[i].attributes.find(key);
            if (it != nodes[i].attributes.end() && it->second.kind == AttrValue::Kind::number) {
                throw DataError("node " + std::to_string(nodes[i].id.value) + ": '" + key +
                                "' must be a string");
            }
        }
    }
    skb.nodes_ = std::move(nodes);
    skb.all_ids_.reserve(skb.nodes_.size());
    for (const auto& n : skb.nodes_) skb.all_ids_.push_back(n.id);

    for (const auto& e : edges) {
        for (NodeId end : {e.head, e.tail}) {
            if (!skb.contains(end)) {
                throw DataError("edge (" + std::to_string(e.head.value) + ", " + e.type + ", " +
                                std::to_string(e.tail.value) + ") references unknown node " +
                                std::to_string(end.value));
            }
        }
        if (trim(e.type).empty()) throw DataError("edge with empty type");
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    skb.edges_ = std::move(edges);
    skb.index();
    return skb;
}

void Skb::index() {
    std::map<std::string, std::set<std::string>> attrs;
    for (const auto& n : nodes_) {
        by_type_[n.type].push_back(n.id);  // ids arrive sorted
        auto& names = attrs[n.type];
        for (const auto& [k, _] : n.attributes) names.insert(k);
    }
    for (auto& [type, names] : attrs) {
        node_types_.push_back(type);
        attrs_by_type_[type] = std::vector<std::string>(names.begin(), names.end());
        node_type_keys_.emplace(label_key(type), type);
    }

    for (const auto& e : edges_) {
        auto& idx = by_edge_type_[e.type];
        idx.edges.push_back(e);
        idx.out[e.head].push_back(e.tail);
        idx.in[e.tail].push_back(e.head);
    }
    for (auto& [type, idx] : by_edge_type_) {
        edge_types_.push_back(type);
        edge_type_keys_.emplace(label_key(type), type);
        std::size_t max_out = 0;
        std::size_t max_in = 0;
        for (auto& [_, s] : idx.out) {
            sort_unique(s);
            max_out = std::max(max_out, s.size());
        }
        for (auto& [_, s] : idx.in) {
            sort_unique(s);
            max_in = std::max(max_in, s.size());
        }
        // Class reads "<heads per tail>-to-<tails per head>".
        const bool many_heads = max_in > 1;
        const bool many_tails = max_out > 1;
        if (many_heads && many_tails) {
            idx.cardinality = Cardinality::many_to_many;
        } else if (many_heads) {
            idx.cardinality = Cardinality::many_to_one;
        } else if (many_tails) {
            idx.cardinality = Cardinality::one_to_many;
        } else {
            idx.cardinality = Cardinality::one_to_one;
        }
    }
}

bool Skb::contains(NodeId id) const noexcept { return set_contains(all_ids_, id); }

const Node& Skb::node(NodeId id) const {
    auto it = std::lower_bound(nodes_.begin(), nodes_.end(), id,
                               [](const Node& n, NodeId x) { return n.id < x; });
    if (it == nodes_.end() || it->id != id) {
        throw DataError("unknown node id " + std::to_string(id.value));
    }
    return *it;
}

bool Skb::has_edge_type(std::string_view edge_type) const {
    return by_edge_type_.find(edge_type) != by_edge_type_.end();
}

std::optional<std::string> Skb::resolve_node_type(std::string_view label) const {
    if (auto it = node_type_keys_.find(label_key(label)); it != node_type_keys_.end()) {
        return it->second;
    }
    return std::nullopt;
}

std::optional<std::string> Skb::resolve_edge_type(std::string_view label) const {
    if (auto it = edge_type_keys_.find(label_key(label)); it != edge_type_keys_.end()) {
        return it->second;
    }
    return std::nullopt;
}

const Skb::EdgeTypeIndex* Skb::edge_index(std::string_view edge_type) const {
    auto it = by_edge_type_.find(edge_type);
    return it == by_edge_type_.end() ? nullptr : &it->second;
}

const NodeSet& Skb::neighbors(NodeId v, std::string_view edge_type, Direction dir) const {
    if (!contains(v)) throw DataError("unknown node id " + std::to_string(v.value));
    const auto* idx = edge_index(edge_type);
    if (idx == nullptr) return kEmptySet;
    const auto& map = dir == Direction::incoming ? idx->in : idx->out;
    auto it = map.find(v);
    return it == map.end() ? kEmptySet : it->second;
}

const NodeSet& Skb::nodes_of_type(std::string_view node_type) const {
    auto it = by_type_.find(node_type);
    return it == by_type_.end() ? kEmptySet : it->second;
}

const std::vector<Edge>& Skb::edges_of_type(std::string_view edge_type) const {
    const auto* idx = edge_index(edge_type);
    return idx == nullptr ? kNoEdges : idx->edges;
}

Cardinality Skb::cardinality(std::string_view edge_type) const {
    const auto* idx = edge_index(edge_type);
    if (idx == nullptr) throw DataError("unknown edge type '" + std::string(edge_type) + "'");
    return idx->cardinality;
}

bool Skb::attribute_exists(std::string_view node_type, std::string_view attr) const {
    auto has = [&](const std::vector<std::string>& names) {
        return std::binary_search(names.begin(), names.end(), attr);
    };
    if (node_type.empty()) {
        return std::any_of(attrs_by_type_.begin(), attrs_by_type_.end(),
                           [&](const auto& kv) { return has(kv.second); });
    }
    auto it = attrs_by_type_.find(node_type);
    return it != attrs_by_type_.end() && has(it->second);
}

}  // namespace afr
