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

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace afr {

/// Which Cypher labels act as hard filters.
enum class ParseMode { strict_nodes, strict_edges, strict_both, lenient };

std::string_view to_string(ParseMode m);
ParseMode parse_mode_from(std::string_view s);

inline bool filters_node_labels(ParseMode m) {
    return m == ParseMode::strict_nodes || m == ParseMode::strict_both;
}
inline bool filters_edge_labels(ParseMode m) {
    return m == ParseMode::strict_edges || m == ParseMode::strict_both;
}

enum class SymbolKind { constant, variable };
enum class FilterOp { eq, lt, le, gt, ge, contains };

std::string_view to_string(FilterOp op);

struct Literal {
    enum class Kind { string, number };

    Kind kind = Kind::string;
    std::string text;
    double number = 0.0;

    bool is_date() const;
    friend bool operator==(const Literal&, const Literal&) = default;
};

struct AttributeFilter {
    std::string attr;  // normalized
    FilterOp op = FilterOp::eq;
    Literal value;

    friend bool operator==(const AttributeFilter&, const AttributeFilter&) = default;
};

struct SymbolSpec {
    std::string id;
    /// Known node type the symbol is restricted to (canonical spelling), or
    /// the raw label when the mode treats labels as advisory.
    std::optional<std::string> node_type;
    bool node_type_known = false;
    SymbolKind kind = SymbolKind::variable;
    /// Name/title values joined with "; ". Present iff kind == constant.
    std::optional<std::string> search_string;
    std::vector<AttributeFilter> filters;
};

struct Triplet {
    std::string head;
    std::string edge_type;
    std::string tail;
    /// False when the label is not a known edge type (advisory modes only).
    bool edge_known = true;

    friend bool operator==(const Triplet&, const Triplet&) = default;
};

struct Dropped {
    std::string fragment;
    std::string reason;

    friend bool operator==(const Dropped&, const Dropped&) = default;
};

struct CypherExtraction {
    std::string target_symbol;  // empty when RETURN is missing or unusable
    std::optional<std::string> target_type;
    std::vector<Triplet> triplets;
    std::map<std::string, SymbolSpec> symbols;
    std::vector<Dropped> dropped;
    bool has_match = false;

    /// No usable RETURN or no parseable MATCH pattern.
    bool empty() const { return target_symbol.empty() || !has_match; }
    /// Whether the target takes part in at least one triplet.
    bool target_in_triplets() const;
    const SymbolSpec* symbol(const std::string& id) const;
};

/// Parses LLM-produced Cypher text. Total: never throws on any input.
CypherExtraction parse_cypher(std::string_view text, const std::vector<std::string>& node_types,
                              const std::vector<std::string>& edge_types, ParseMode mode);

/// Orients a single-relationship fragment so that head -edge-> tail.
std::variant<Triplet, Dropped> normalize_direction(std::string_view fragment);

}  // namespace afr
