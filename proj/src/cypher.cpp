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

#include "afr/cypher.hpp"

#include "afr/common.hpp"

#include <algorithm>
#include <cctype>
#include <regex>
#include <unordered_map>

namespace afr {

namespace {

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0 || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_'; }
bool is_quote(char c) { return c == '\'' || c == '"' || c == '`'; }

void replace_all(std::string& s, std::string_view from, std::string_view to) {
    for (std::size_t pos = 0; (pos = s.find(from, pos)) != std::string::npos; pos += to.size()) {
        s.replace(pos, from.size(), to);
    }
}

// Typographic quotes, markdown escapes and code fences are common in LLM output.
std::string preprocess(std::string_view text) {
    std::string s(text);
    replace_all(s, "\r", "");
    replace_all(s, "\xE2\x80\x98", "'");
    replace_all(s, "\xE2\x80\x99", "'");
    replace_all(s, "\xE2\x80\x9C", "\"");
    replace_all(s, "\xE2\x80\x9D", "\"");
    replace_all(s, "\\_", "_");
    std::string out;
    std::size_t start = 0;
    while (start <= s.size()) {
        auto end = s.find('\n', start);
        if (end == std::string::npos) end = s.size();
        std::string line = s.substr(start, end - start);
        if (trim(line).rfind("```", 0) != 0) {
            out += line;
            out.push_back('\n');
        }
        start = end + 1;
    }
    return out;
}

// Index one past the matching closer of s[open], honoring quotes and nesting.
std::size_t match_bracket(std::string_view s, std::size_t open) {
    int depth = 0;
    char quote = 0;
    for (std::size_t i = open; i < s.size(); ++i) {
        const char c = s[i];
        if (quote) {
            if (c == '\\' && quote != '`') {
                ++i;
            } else if (c == quote) {
                quote = 0;
            }
            continue;
        }
        if (is_quote(c)) {
            quote = c;
        } else if (c == '(' || c == '[' || c == '{') {
            ++depth;
        } else if (c == ')' || c == ']' || c == '}') {
            if (--depth == 0) return i + 1;
        }
    }
    return std::string_view::npos;
}

// Calls fn(pos) for every position at depth 0 outside quotes.
template <typename Fn>
void scan_top_level(std::string_view s, Fn&& fn) {
    int depth = 0;
    char quote = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const char c = s[i];
        if (quote) {
            if (c == '\\' && quote != '`') {
                ++i;
            } else if (c == quote) {
                quote = 0;
            }
            continue;
        }
        if (is_quote(c)) {
            quote = c;
            continue;
        }
        if (c == '(' || c == '[' || c == '{') {
            ++depth;
            continue;
        }
        if (c == ')' || c == ']' || c == '}') {
            depth = std::max(0, depth - 1);
            continue;
        }
        if (depth == 0 && !fn(i)) return;
    }
}

// Length of `word` matched case-insensitively at pos on identifier boundaries, or 0.
std::size_t word_at(std::string_view s, std::size_t pos, std::string_view word) {
    if (pos > 0 && (is_ident_char(s[pos - 1]) || s[pos - 1] == '.')) return 0;
    if (pos + word.size() > s.size()) return 0;
    if (!iequals(s.substr(pos, word.size()), word)) return 0;
    const std::size_t end = pos + word.size();
    if (end < s.size() && is_ident_char(s[end])) return 0;
    return word.size();
}

bool contains_top_level_word(std::string_view s, std::string_view word) {
    bool found = false;
    scan_top_level(s, [&](std::size_t i) {
        if (word_at(s, i, word) != 0) found = true;
        return !found;
    });
    return found;
}

bool contains_top_level(std::string_view s, std::string_view needle) {
    bool found = false;
    scan_top_level(s, [&](std::size_t i) {
        if (s.substr(i, needle.size()) == needle) found = true;
        return !found;
    });
    return found;
}

std::vector<std::string> split_top_level_word(std::string_view s, std::string_view word) {
    std::vector<std::string> parts;
    std::size_t last = 0;
    scan_top_level(s, [&](std::size_t i) {
        if (i >= last) {
            if (auto len = word_at(s, i, word)) {
                parts.emplace_back(s.substr(last, i - last));
                last = i + len;
            }
        }
        return true;
    });
    parts.emplace_back(s.substr(last));
    return parts;
}

std::vector<std::string> split_top_level_char(std::string_view s, char sep) {
    std::vector<std::string> parts;
    std::size_t last = 0;
    scan_top_level(s, [&](std::size_t i) {
        if (s[i] == sep) {
            parts.emplace_back(s.substr(last, i - last));
            last = i + 1;
        }
        return true;
    });
    parts.emplace_back(s.substr(last));
    return parts;
}

std::string strip_backticks(std::string_view s) {
    std::string t = trim(s);
    if (t.size() >= 2 && t.front() == '`' && t.back() == '`') t = t.substr(1, t.size() - 2);
    return trim(t);
}

std::string strip_outer_parens(std::string s) {
    for (;;) {
        s = trim(s);
        if (s.size() < 2 || s.front() != '(') return s;
        if (match_bracket(s, 0) != s.size()) return s;
        s = s.substr(1, s.size() - 2);
    }
}

std::string collapse_ws(std::string_view s) {
    std::string out;
    bool space = false;
    for (char c : trim(s)) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            space = true;
            continue;
        }
        if (space && !out.empty()) out.push_back(' ');
        space = false;
        out.push_back(c);
    }
    return out;
}

// Parses the whole string as a Cypher literal.
std::optional<Literal> parse_literal(std::string_view raw) {
    const std::string s = trim(raw);
    if (s.empty()) return std::nullopt;
    if (s.front() == '\'' || s.front() == '"') {
        const char q = s.front();
        std::string out;
        std::size_t i = 1;
        for (; i < s.size(); ++i) {
            if (s[i] == '\\' && i + 1 < s.size()) {
                out.push_back(s[++i]);
            } else if (s[i] == q) {
                break;
            } else {
                out.push_back(s[i]);
            }
        }
        if (i != s.size() - 1) return std::nullopt;
        return Literal{Literal::Kind::string, out, 0.0};
    }
    double v = 0.0;
    if (parse_number(s, v)) return Literal{Literal::Kind::number, s, v};
    if (iequals(s, "true") || iequals(s, "false")) return Literal{Literal::Kind::string, to_lower(s), 0.0};
    return std::nullopt;
}

struct NodeRef {
    std::string var;
    std::vector<std::string> labels;
    std::string props;  // inside of {...}, may be empty
    bool has_props = false;
    std::string raw;
};

struct RelRef {
    bool left = false;
    bool right = false;
    std::string types_raw;
    std::vector<std::string> types;
    bool alternation = false;
    bool var_length = false;
    std::string raw;
};

struct PathElem {
    enum class Kind { node, rel, brk } kind;
    NodeRef node;
    RelRef rel;
};

std::optional<NodeRef> parse_node_inner(std::string_view inner, std::string raw) {
    NodeRef n;
    n.raw = std::move(raw);
    std::size_t i = 0;
    auto skip_ws = [&] {
        while (i < inner.size() && std::isspace(static_cast<unsigned char>(inner[i]))) ++i;
    };
    skip_ws();
    if (i < inner.size() && is_ident_start(inner[i])) {
        const auto b = i;
        while (i < inner.size() && is_ident_char(inner[i])) ++i;
        n.var = std::string(inner.substr(b, i - b));
    }
    skip_ws();
    while (i < inner.size() && inner[i] == ':') {
        ++i;
        skip_ws();
        std::string label;
        if (i < inner.size() && inner[i] == '`') {
            const auto close = inner.find('`', i + 1);
            if (close == std::string_view::npos) return std::nullopt;
            label = std::string(inner.substr(i + 1, close - i - 1));
            i = close + 1;
        } else {
            const auto b = i;
            while (i < inner.size() && inner[i] != ':' && inner[i] != '{') ++i;
            label = std::string(inner.substr(b, i - b));
        }
        label = trim(label);
        if (label.empty()) return std::nullopt;
        n.labels.push_back(label);
        skip_ws();
    }
    if (i < inner.size() && inner[i] == '{') {
        const auto close = match_bracket(inner, i);
        if (close == std::string_view::npos) return std::nullopt;
        n.props = std::string(inner.substr(i + 1, close - i - 2));
        n.has_props = true;
        i = close;
        skip_ws();
    }
    if (i != inner.size()) return std::nullopt;
    return n;
}

// Relationship: <-[...]-, -[...]->, -[...]-, -->, <--, --.
std::optional<RelRef> parse_rel_at(std::string_view s, std::size_t& pos) {
    std::size_t i = pos;
    RelRef r;
    if (i < s.size() && s[i] == '<') {
        r.left = true;
        ++i;
    }
    if (i >= s.size() || s[i] != '-') return std::nullopt;
    ++i;
    while (i < s.size() && s[i] == ' ') ++i;
    std::string inner;
    if (i < s.size() && s[i] == '[') {
        const auto close = match_bracket(s, i);
        if (close == std::string_view::npos) return std::nullopt;
        inner = std::string(s.substr(i + 1, close - i - 2));
        i = close;
        while (i < s.size() && s[i] == ' ') ++i;
        if (i >= s.size() || s[i] != '-') return std::nullopt;
        ++i;
    } else if (i < s.size() && s[i] == '-') {
        ++i;
    } else if (!r.left && i < s.size() && s[i] == '>') {
        // "->" without brackets
    } else if (!r.left) {
        return std::nullopt;
    }
    if (i < s.size() && s[i] == '>') {
        r.right = true;
        ++i;
    }
    r.raw = std::string(s.substr(pos, i - pos));
    pos = i;

    // [var:TYPE|TYPE*1..2 {props}]
    std::string body = trim(inner);
    if (auto brace = body.find('{'); brace != std::string::npos) body = trim(body.substr(0, brace));
    if (body.find('*') != std::string::npos) {
        r.var_length = true;
        body = trim(body.substr(0, body.find('*')));
    }
    if (auto colon = body.find(':'); colon != std::string::npos) {
        r.types_raw = trim(body.substr(colon + 1));
        for (auto& t : split_top_level_char(r.types_raw, '|')) {
            std::string label = strip_backticks(t);
            if (!label.empty() && label.front() == ':') label = trim(label.substr(1));
            if (!label.empty()) r.types.push_back(label);
        }
        r.alternation = r.types.size() > 1;
    }
    return r;
}

// Tokenizes one MATCH body into nodes, relationships and path breaks.
std::vector<PathElem> scan_pattern(std::string_view s, std::vector<Dropped>& dropped) {
    std::vector<PathElem> out;
    std::size_t pos = 0;
    bool expect_node = true;
    auto skip_ws = [&] {
        while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    };
    auto brk = [&] {
        if (!out.empty() && out.back().kind != PathElem::Kind::brk) {
            out.push_back({PathElem::Kind::brk, {}, {}});
        }
        expect_node = true;
    };
    auto skip_garbage = [&] {
        const auto b = pos;
        while (pos < s.size() && s[pos] != ',' && s[pos] != '\n') {
            if (s[pos] == '(' || s[pos] == '[' || s[pos] == '{') {
                const auto close = match_bracket(s, pos);
                pos = close == std::string_view::npos ? s.size() : close;
            } else {
                ++pos;
            }
        }
        const auto frag = collapse_ws(s.substr(b, pos - b));
        if (!frag.empty()) dropped.push_back({frag, "unparsed"});
        brk();
    };

    while (true) {
        skip_ws();
        if (pos >= s.size()) break;
        if (s[pos] == ',') {
            ++pos;
            brk();
            continue;
        }
        if (expect_node) {
            // named path "p = (...)"
            if (is_ident_start(s[pos])) {
                auto j = pos;
                while (j < s.size() && is_ident_char(s[j])) ++j;
                auto k = j;
                while (k < s.size() && s[k] == ' ') ++k;
                if (k < s.size() && s[k] == '=') {
                    pos = k + 1;
                    continue;
                }
            }
            if (s[pos] == '(') {
                const auto close = match_bracket(s, pos);
                if (close == std::string_view::npos) {
                    skip_garbage();
                    continue;
                }
                const std::string raw(s.substr(pos, close - pos));
                auto node = parse_node_inner(s.substr(pos + 1, close - pos - 2), raw);
                pos = close;
                if (!node) {
                    dropped.push_back({collapse_ws(raw), "unparsed"});
                    brk();
                    continue;
                }
                out.push_back({PathElem::Kind::node, std::move(*node), {}});
                expect_node = false;
                continue;
            }
            if (is_ident_start(s[pos])) {
                const auto b = pos;
                while (pos < s.size() && is_ident_char(s[pos])) ++pos;
                NodeRef n;
                n.var = std::string(s.substr(b, pos - b));
                n.raw = n.var;
                out.push_back({PathElem::Kind::node, std::move(n), {}});
                expect_node = false;
                continue;
            }
            skip_garbage();
            continue;
        }
        auto save = pos;
        if (auto rel = parse_rel_at(s, pos)) {
            out.push_back({PathElem::Kind::rel, {}, std::move(*rel)});
            expect_node = true;
            continue;
        }
        pos = save;
        brk();  // a new path starts without a separator
    }
    return out;
}

class Resolver {
public:
    explicit Resolver(const std::vector<std::string>& labels) {
        for (const auto& l : labels) keys_.emplace(label_key(l), l);
    }
    std::optional<std::string> resolve(std::string_view raw) const {
        auto it = keys_.find(label_key(raw));
        if (it == keys_.end()) return std::nullopt;
        return it->second;
    }

private:
    std::unordered_map<std::string, std::string> keys_;
};

struct Builder {
    const Resolver& nodes;
    const Resolver& edges;
    ParseMode mode;
    CypherExtraction ex;
    std::map<std::string, std::vector<std::string>> search_parts;
    int anon = 0;

    SymbolSpec& symbol(const std::string& id) {
        auto [it, inserted] = ex.symbols.try_emplace(id);
        if (inserted) it->second.id = id;
        return it->second;
    }

    void add_filter_or_search(const std::string& sym, const std::string& attr, FilterOp op,
                              Literal value) {
        const std::string name = normalize_attr_name(attr);
        symbol(sym);
        if ((name == "name" || name == "title") && op == FilterOp::eq) {
            search_parts[sym].push_back(value.text);
            return;
        }
        symbol(sym).filters.push_back({name, op, std::move(value)});
    }

    void add_props(const std::string& sym, const NodeRef& node) {
        if (!node.has_props || trim(node.props).empty()) return;
        for (const auto& item : split_top_level_char(node.props, ',')) {
            if (trim(item).empty()) continue;
            static const std::regex kv(R"(^\s*(`[^`]+`|'[^']*'|"[^"]*"|[A-Za-z_][\w ]*?)\s*:\s*([\s\S]+?)\s*$)");
            std::smatch m;
            const std::string it = item;
            std::optional<Literal> lit;
            if (std::regex_match(it, m, kv)) lit = parse_literal(m[2].str());
            if (!lit) {
                ex.dropped.push_back({collapse_ws(item), "unsupported"});
                continue;
            }
            std::string key = m[1].str();
            if (!key.empty() && (key.front() == '`' || key.front() == '\'' || key.front() == '"')) {
                key = key.substr(1, key.size() - 2);
            }
            add_filter_or_search(sym, key, FilterOp::eq, std::move(*lit));
        }
    }

    std::string register_node(const NodeRef& node) {
        const std::string id = node.var.empty() ? "_anon" + std::to_string(++anon) : node.var;
        SymbolSpec& spec = symbol(id);
        for (std::size_t li = 0; li < node.labels.size(); ++li) {
            const std::string& raw = node.labels[li];
            if (li > 0) {
                ex.dropped.push_back({"(" + id + ":" + raw + ")", "unsupported"});
                continue;
            }
            auto resolved = nodes.resolve(raw);
            std::optional<std::string> type;
            bool known = false;
            if (resolved) {
                type = resolved;
                known = true;
            } else if (filters_node_labels(mode)) {
                ex.dropped.push_back({"(" + id + ":" + raw + ")", "label"});
                continue;
            } else {
                type = raw;
            }
            if (spec.node_type && label_key(*spec.node_type) != label_key(*type)) {
                ex.dropped.push_back({"(" + id + ":" + raw + ")", "label_conflict"});
                continue;
            }
            spec.node_type = type;
            spec.node_type_known = known;
        }
        add_props(id, node);
        return id;
    }

    void link(const std::string& left, const RelRef& rel, const std::string& right,
              const std::string& fragment) {
        if (rel.types.empty()) {
            ex.dropped.push_back({fragment, "untyped_edge"});
            return;
        }
        if (rel.alternation) {
            ex.dropped.push_back({fragment, "or"});
            return;
        }
        if (rel.var_length) {
            ex.dropped.push_back({fragment, "variable_length"});
            return;
        }
        if (rel.left == rel.right) {
            ex.dropped.push_back({fragment, "undirected"});
            return;
        }
        Triplet t;
        t.head = rel.left ? right : left;
        t.tail = rel.left ? left : right;
        if (auto resolved = edges.resolve(rel.types.front())) {
            t.edge_type = *resolved;
        } else if (filters_edge_labels(mode)) {
            ex.dropped.push_back({fragment, "edge_label"});
            return;
        } else {
            t.edge_type = rel.types.front();
            t.edge_known = false;
        }
        if (std::find(ex.triplets.begin(), ex.triplets.end(), t) == ex.triplets.end()) {
            ex.triplets.push_back(std::move(t));
        }
    }

    void match_clause(std::string_view body) {
        auto elems = scan_pattern(body, ex.dropped);
        std::optional<std::string> prev;
        const NodeRef* prev_node = nullptr;
        const RelRef* pending = nullptr;
        for (const auto& e : elems) {
            switch (e.kind) {
                case PathElem::Kind::brk:
                    if (pending) ex.dropped.push_back({collapse_ws(pending->raw), "unparsed"});
                    prev.reset();
                    prev_node = nullptr;
                    pending = nullptr;
                    break;
                case PathElem::Kind::rel:
                    if (!prev) {
                        ex.dropped.push_back({collapse_ws(e.rel.raw), "unparsed"});
                    } else {
                        pending = &e.rel;
                    }
                    break;
                case PathElem::Kind::node: {
                    ex.has_match = true;
                    const std::string id = register_node(e.node);
                    if (pending && prev && prev_node) {
                        link(*prev, *pending, id,
                             collapse_ws(prev_node->raw + pending->raw + e.node.raw));
                    }
                    pending = nullptr;
                    prev = id;
                    prev_node = &e.node;
                    break;
                }
            }
        }
        if (pending) ex.dropped.push_back({collapse_ws(pending->raw), "unparsed"});
    }

    void where_clause(std::string_view body) {
        static const std::regex cond(
            R"(^([A-Za-z_]\w*)\s*\.\s*(`[^`]+`|[A-Za-z_]\w*)\s*(<=|>=|=|<|>|[Cc][Oo][Nn][Tt][Aa][Ii][Nn][Ss]\b)\s*([\s\S]+)$)");
        for (const auto& part : split_top_level_word(body, "AND")) {
            const std::string c = strip_outer_parens(part);
            if (c.empty()) continue;
            const std::string frag = collapse_ws(c);
            if (contains_top_level_word(c, "OR") || contains_top_level_word(c, "XOR")) {
                ex.dropped.push_back({frag, "or"});
                continue;
            }
            if (contains_top_level_word(c, "NOT")) {
                ex.dropped.push_back({frag, "not"});
                continue;
            }
            if (contains_top_level(c, "<>") || contains_top_level(c, "!=")) {
                ex.dropped.push_back({frag, "negation"});
                continue;
            }
            std::smatch m;
            std::optional<Literal> lit;
            if (std::regex_match(c, m, cond)) lit = parse_literal(m[4].str());
            if (!lit) {
                ex.dropped.push_back({frag, "unsupported"});
                continue;
            }
            const std::string op_text = to_lower(m[3].str());
            FilterOp op = FilterOp::eq;
            if (op_text == "<") op = FilterOp::lt;
            else if (op_text == "<=") op = FilterOp::le;
            else if (op_text == ">") op = FilterOp::gt;
            else if (op_text == ">=") op = FilterOp::ge;
            else if (op_text == "contains") op = FilterOp::contains;
            add_filter_or_search(m[1].str(), strip_backticks(m[2].str()), op, std::move(*lit));
        }
    }

    void return_clause(std::string_view body) {
        if (!ex.target_symbol.empty()) {
            ex.dropped.push_back({collapse_ws(body), "multi_return"});
            return;
        }
        std::string items = trim(body);
        if (word_at(items, 0, "DISTINCT")) items = trim(items.substr(8));
        static const std::regex plain(
            R"(^([A-Za-z_]\w*)(?:\s*\.\s*(?:`[^`]+`|\w+))?(?:\s+[Aa][Ss]\s+\w+)?$)");
        static const std::regex func(
            R"(^\w+\s*\(\s*(?:[Dd][Ii][Ss][Tt][Ii][Nn][Cc][Tt]\s+)?([A-Za-z_]\w*)(?:\s*\.\s*\w+)?\s*\)(?:\s+[Aa][Ss]\s+\w+)?$)");
        for (const auto& raw : split_top_level_char(items, ',')) {
            const std::string item = trim(raw);
            if (item.empty()) continue;
            if (!ex.target_symbol.empty()) {
                ex.dropped.push_back({collapse_ws(item), "multi_return"});
                continue;
            }
            std::smatch m;
            if (std::regex_match(item, m, plain) || std::regex_match(item, m, func)) {
                ex.target_symbol = m[1].str();
                symbol(ex.target_symbol);
            } else {
                ex.dropped.push_back({collapse_ws(item), "unsupported"});
            }
        }
    }

    void finish() {
        for (auto& [id, spec] : ex.symbols) {
            auto it = search_parts.find(id);
            if (it != search_parts.end() && !it->second.empty()) {
                std::string joined;
                for (const auto& p : it->second) {
                    if (!joined.empty()) joined += "; ";
                    joined += p;
                }
                spec.kind = SymbolKind::constant;
                spec.search_string = joined;
            }
            if (spec.kind == SymbolKind::constant && trim(spec.search_string.value_or("")).empty()) {
                spec.kind = SymbolKind::variable;
                spec.search_string.reset();
            }
        }
        if (!ex.target_symbol.empty()) {
            const auto& spec = ex.symbols.at(ex.target_symbol);
            if (spec.node_type && spec.node_type_known) ex.target_type = spec.node_type;
        }
    }
};

struct Clause {
    std::string keyword;
    std::string body;
};

std::vector<Clause> split_clauses(const std::string& s, std::string& preamble) {
    static const std::vector<std::vector<std::string_view>> kKeywords{
        {"OPTIONAL", "MATCH"}, {"ORDER", "BY"}, {"DETACH", "DELETE"}, {"MATCH"},  {"WHERE"},
        {"RETURN"},            {"WITH"},        {"LIMIT"},            {"SKIP"},   {"UNWIND"},
        {"CREATE"},            {"MERGE"},       {"DELETE"},           {"SET"},    {"REMOVE"},
        {"UNION"},             {"CALL"},        {"FOREACH"}};
    std::vector<Clause> clauses;
    std::size_t body_start = 0;
    std::string current;
    std::size_t skip_until = 0;
    scan_top_level(s, [&](std::size_t i) {
        if (i < skip_until) return true;
        for (const auto& words : kKeywords) {
            std::size_t j = i;
            bool ok = true;
            for (std::size_t w = 0; w < words.size(); ++w) {
                if (w > 0) {
                    const auto b = j;
                    while (j < s.size() && std::isspace(static_cast<unsigned char>(s[j]))) ++j;
                    if (j == b) {
                        ok = false;
                        break;
                    }
                }
                const auto len = word_at(s, j, words[w]);
                if (len == 0) {
                    ok = false;
                    break;
                }
                j += len;
            }
            if (!ok) continue;
            if (current.empty()) {
                preamble = s.substr(0, i);
            } else {
                clauses.push_back({current, s.substr(body_start, i - body_start)});
            }
            current.clear();
            for (const auto& w : words) current += (current.empty() ? "" : " ") + std::string(w);
            body_start = j;
            skip_until = j;
            return true;
        }
        return true;
    });
    if (current.empty()) {
        preamble = s;
    } else {
        clauses.push_back({current, s.substr(body_start)});
    }
    return clauses;
}

}  // namespace

std::string_view to_string(ParseMode m) {
    switch (m) {
        case ParseMode::strict_nodes: return "strict_nodes";
        case ParseMode::strict_edges: return "strict_edges";
        case ParseMode::strict_both: return "strict_both";
        case ParseMode::lenient: return "lenient";
    }
    return "?";
}

ParseMode parse_mode_from(std::string_view s) {
    if (s == "strict_nodes") return ParseMode::strict_nodes;
    if (s == "strict_edges") return ParseMode::strict_edges;
    if (s == "strict_both") return ParseMode::strict_both;
    if (s == "lenient") return ParseMode::lenient;
    throw UsageError("unknown parsing mode '" + std::string(s) + "'");
}

std::string_view to_string(FilterOp op) {
    switch (op) {
        case FilterOp::eq: return "=";
        case FilterOp::lt: return "<";
        case FilterOp::le: return "<=";
        case FilterOp::gt: return ">";
        case FilterOp::ge: return ">=";
        case FilterOp::contains: return "CONTAINS";
    }
    return "?";
}

bool Literal::is_date() const { return kind == Kind::string && is_iso_date(text); }

bool CypherExtraction::target_in_triplets() const {
    if (target_symbol.empty()) return false;
    return std::any_of(triplets.begin(), triplets.end(), [&](const Triplet& t) {
        return t.head == target_symbol || t.tail == target_symbol;
    });
}

const SymbolSpec* CypherExtraction::symbol(const std::string& id) const {
    auto it = symbols.find(id);
    return it == symbols.end() ? nullptr : &it->second;
}

CypherExtraction parse_cypher(std::string_view text, const std::vector<std::string>& node_types,
                              const std::vector<std::string>& edge_types, ParseMode mode) {
    const Resolver nodes(node_types);
    const Resolver edges(edge_types);
    Builder b{nodes, edges, mode, {}, {}, 0};
    try {
        const std::string s = preprocess(text);
        std::string preamble;
        const auto clauses = split_clauses(s, preamble);
        if (const auto p = collapse_ws(preamble); !p.empty()) {
            b.ex.dropped.push_back({p, "unparsed"});
        }
        for (const auto& c : clauses) {
            if (c.keyword == "MATCH") {
                b.match_clause(c.body);
            } else if (c.keyword == "WHERE") {
                b.where_clause(c.body);
            } else if (c.keyword == "RETURN") {
                b.return_clause(c.body);
            } else if (c.keyword == "OPTIONAL MATCH") {
                b.ex.dropped.push_back({collapse_ws(c.keyword + " " + c.body), "optional_match"});
            } else {
                b.ex.dropped.push_back({collapse_ws(c.keyword + " " + c.body), "unsupported"});
            }
        }
        b.finish();
    } catch (const std::exception& e) {
        // Regex engines can throw on pathological input; degrade to what was parsed.
        b.ex.dropped.push_back({std::string(text.substr(0, 80)), std::string("error: ") + e.what()});
        b.finish();
    }
    if (b.ex.target_symbol.empty()) b.ex.dropped.push_back({"", "no_return"});
    if (!b.ex.has_match) b.ex.dropped.push_back({"", "no_match"});
    return b.ex;
}

std::variant<Triplet, Dropped> normalize_direction(std::string_view fragment) {
    std::vector<Dropped> dropped;
    const auto elems = scan_pattern(preprocess(fragment), dropped);
    std::vector<const PathElem*> core;
    for (const auto& e : elems) {
        if (e.kind != PathElem::Kind::brk) core.push_back(&e);
    }
    const std::string frag = collapse_ws(fragment);
    if (core.size() != 3 || core[0]->kind != PathElem::Kind::node ||
        core[1]->kind != PathElem::Kind::rel || core[2]->kind != PathElem::Kind::node) {
        return Dropped{frag, "unparsed"};
    }
    const RelRef& rel = core[1]->rel;
    if (rel.types.empty()) return Dropped{frag, "untyped_edge"};
    if (rel.alternation) return Dropped{frag, "or"};
    if (rel.var_length) return Dropped{frag, "variable_length"};
    if (rel.left == rel.right) return Dropped{frag, "undirected"};
    const std::string& l = core[0]->node.var;
    const std::string& r = core[2]->node.var;
    Triplet t;
    t.head = rel.left ? r : l;
    t.tail = rel.left ? l : r;
    t.edge_type = rel.types.front();
    return t;
}

}  // namespace afr
