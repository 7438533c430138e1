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

#include "afr/llm.hpp"

#include <nlohmann/json.hpp>

#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

namespace afr {

// Defined in the generated prompts_builtin.cpp.
const std::map<std::string, std::string>& builtin_prompts();

namespace {

std::string expand_groups(const std::string& response, const std::smatch& m) {
    std::string out;
    for (std::size_t i = 0; i < response.size(); ++i) {
        if (response[i] == '$' && i + 1 < response.size() && response[i + 1] >= '1' &&
            response[i + 1] <= '9') {
            const auto g = static_cast<std::size_t>(response[i + 1] - '0');
            if (g < m.size()) out += m[g].str();
            ++i;
        } else {
            out.push_back(response[i]);
        }
    }
    return out;
}

std::string strip_one_trailing_newline(std::string s) {
    if (!s.empty() && s.back() == '\n') s.pop_back();
    return s;
}

}  // namespace

void ScriptedProvider::add_exact(std::string prompt, std::string response) {
    Rule r;
    r.exact = std::move(prompt);
    r.response = std::move(response);
    rules_.push_back(std::move(r));
}

void ScriptedProvider::add_contains(std::vector<std::string> needles, std::string response) {
    Rule r;
    r.needles = std::move(needles);
    r.response = std::move(response);
    rules_.push_back(std::move(r));
}

void ScriptedProvider::add_regex(const std::string& pattern, std::string response,
                                 std::vector<std::string> needles) {
    Rule r;
    r.pattern = std::regex(pattern, std::regex::ECMAScript);
    r.needles = std::move(needles);
    r.response = std::move(response);
    rules_.push_back(std::move(r));
}

void ScriptedProvider::add_handler(Handler handler) {
    Rule r;
    r.handler = std::move(handler);
    rules_.push_back(std::move(r));
}

void ScriptedProvider::append_rules_from(const std::filesystem::path& file) {
    using nlohmann::json;
    std::ifstream in(file);
    if (!in) throw DataError("cannot open transcript " + file.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw DataError(file.string() + ": " + e.what());
    }
    if (doc.is_object() && doc.contains("rules")) doc = doc["rules"];
    if (!doc.is_array()) throw DataError(file.string() + ": expected an array of rules");
    for (const auto& rule : doc) {
        std::string response = rule.at("response").get<std::string>();
        std::vector<std::string> needles;
        if (auto it = rule.find("contains"); it != rule.end()) {
            needles = it->is_array() ? it->get<std::vector<std::string>>()
                                     : std::vector<std::string>{it->get<std::string>()};
        }
        if (auto it = rule.find("exact"); it != rule.end()) {
            add_exact(it->get<std::string>(), std::move(response));
        } else if (auto it = rule.find("regex"); it != rule.end()) {
            try {
                add_regex(it->get<std::string>(), std::move(response), std::move(needles));
            } catch (const std::regex_error& e) {
                throw DataError(file.string() + ": bad regex: " + e.what());
            }
        } else if (!needles.empty()) {
            add_contains(std::move(needles), std::move(response));
        } else {
            throw DataError(file.string() + ": rule needs exact, contains or regex");
        }
    }
}

ScriptedProvider ScriptedProvider::load(const std::filesystem::path& file) {
    ScriptedProvider p;
    p.append_rules_from(file);
    return p;
}

std::string ScriptedProvider::complete(const std::string& prompt) {
    ++calls_;
    for (const auto& rule : rules_) {
        if (rule.handler) {
            if (auto r = rule.handler(prompt)) return *r;
            continue;
        }
        if (rule.exact && *rule.exact != prompt) continue;
        bool all = true;
        for (const auto& n : rule.needles) {
            if (prompt.find(n) == std::string::npos) {
                all = false;
                break;
            }
        }
        if (!all) continue;
        if (rule.pattern) {
            std::smatch m;
            if (!std::regex_search(prompt, m, *rule.pattern)) continue;
            return expand_groups(rule.response, m);
        }
        return rule.response;
    }
    throw ScriptMismatch("no scripted response for prompt: " + prompt.substr(0, 200));
}

std::size_t TokenEstimator::estimate(std::string_view text) const {
    return static_cast<std::size_t>(std::ceil(static_cast<double>(text.size()) / chars_per_token));
}

LlmAccounting& LlmAccounting::operator+=(const LlmAccounting& o) {
    prompts += o.prompts;
    tokens_in += o.tokens_in;
    tokens_out += o.tokens_out;
    failures += o.failures;
    return *this;
}

LlmSession::LlmSession(ChatProvider& provider, std::size_t token_budget, TokenEstimator estimator)
    : provider_(provider), token_budget_(token_budget), estimator_(estimator) {
    if (token_budget_ == 0) throw UsageError("token budget must be positive");
}

bool LlmSession::fits(const std::string& prompt) const {
    return estimator_.estimate(prompt) <= token_budget_;
}

std::string LlmSession::complete(const std::string& prompt) {
    const auto tokens = estimator_.estimate(prompt);
    if (tokens > token_budget_) throw BudgetExceeded(tokens, token_budget_);
    ++accounting_.prompts;
    accounting_.tokens_in += tokens;
    try {
        std::string response = provider_.complete(prompt);
        accounting_.tokens_out += estimator_.estimate(response);
        return response;
    } catch (...) {
        ++accounting_.failures;
        throw;
    }
}

PromptLibrary::PromptLibrary() {
    for (const auto& [name, body] : builtin_prompts()) bodies_[name] = strip_one_trailing_newline(body);
}

PromptLibrary PromptLibrary::from_dir(const std::filesystem::path& dir) {
    PromptLibrary lib;
    for (const auto& name : names()) {
        const auto file = dir / (name + ".txt");
        if (!std::filesystem::exists(file)) continue;
        std::ifstream in(file);
        std::stringstream ss;
        ss << in.rdbuf();
        lib.bodies_[name] = strip_one_trailing_newline(ss.str());
    }
    return lib;
}

const std::vector<std::string>& PromptLibrary::names() {
    static const std::vector<std::string> kNames{kTargetType, kCypher, kPointwise, kListwise,
                                                 kPairwise};
    return kNames;
}

const std::string& PromptLibrary::body(const std::string& name) const {
    auto it = bodies_.find(name);
    if (it == bodies_.end()) throw UsageError("unknown prompt template '" + name + "'");
    return it->second;
}

void PromptLibrary::set_body(const std::string& name, std::string body) {
    bodies_[name] = std::move(body);
}

std::string PromptLibrary::fill(const std::string& name,
                                const std::map<std::string, std::string>& values) const {
    return fill_template(body(name), values);
}

std::string fill_template(const std::string& body, const std::map<std::string, std::string>& values) {
    auto is_ident = [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
    };
    std::string out;
    out.reserve(body.size() * 2);
    std::size_t line_start = 0;  // in out
    std::size_t i = 0;
    while (i < body.size()) {
        const char c = body[i];
        if (c == '{') {
            std::size_t j = i + 1;
            while (j < body.size() && is_ident(body[j])) ++j;
            if (j > i + 1 && j < body.size() && body[j] == '}') {
                const std::string key = body.substr(i + 1, j - i - 1);
                auto it = values.find(key);
                if (it == values.end()) throw UsageError("unfilled prompt placeholder {" + key + "}");
                const bool alone_on_line = out.size() == line_start &&
                                           (j + 1 == body.size() || body[j + 1] == '\n');
                if (alone_on_line && it->second.empty()) {
                    i = j + 1;
                    if (i < body.size()) ++i;  // swallow the newline
                    continue;
                }
                out += it->second;
                i = j + 1;
                continue;
            }
        }
        out.push_back(c);
        if (c == '\n') line_start = out.size();
        ++i;
    }
    return out;
}

std::string join_labels(const std::vector<std::string>& labels) {
    std::string out;
    for (const auto& l : labels) {
        if (!out.empty()) out += ", ";
        out += l;
    }
    return out;
}

TargetTypePrediction match_target_type(const std::string& response,
                                       const std::vector<std::string>& node_types) {
    TargetTypePrediction p;
    p.raw = response;
    std::string s = trim(response);
    auto strip = [&](std::string_view chars) {
        while (!s.empty() && chars.find(s.front()) != std::string_view::npos) s.erase(s.begin());
        while (!s.empty() && chars.find(s.back()) != std::string_view::npos) s.pop_back();
        s = trim(s);
    };
    strip("\"'`.*");
    const std::string key = label_key(s);
    int matches = 0;
    for (const auto& t : node_types) {
        if (label_key(t) == key) {
            p.type = t;
            ++matches;
        }
    }
    p.valid = matches == 1 && !key.empty();
    if (!p.valid) p.type.clear();
    return p;
}

TargetTypePrediction derive_target_type(LlmSession& llm, const PromptLibrary& prompts,
                                        const std::string& question,
                                        const std::vector<std::string>& node_types) {
    if (node_types.empty()) throw UsageError("derive_target_type: no node types");
    const std::string prompt = prompts.fill(
        PromptLibrary::kTargetType,
        {{"candidate_types", join_labels(node_types)}, {"question", question}});
    return match_target_type(llm.complete(prompt), node_types);
}

std::string build_cypher_prompt(const PromptLibrary& prompts, const std::string& question,
                                const std::vector<std::string>& node_types,
                                const std::vector<std::string>& edge_types,
                                const std::optional<std::string>& target_type) {
    std::string restriction;
    if (target_type && !target_type->empty()) {
        restriction = "- Target Label: RETURN a variable of the node label " + *target_type + ".";
    }
    return prompts.fill(PromptLibrary::kCypher, {{"target_type_restriction", restriction},
                                                 {"query", question},
                                                 {"nodes_to_consider", join_labels(node_types)},
                                                 {"edges_to_consider", join_labels(edge_types)}});
}

std::string derive_cypher(LlmSession& llm, const PromptLibrary& prompts,
                          const std::string& question, const std::vector<std::string>& node_types,
                          const std::vector<std::string>& edge_types,
                          const std::optional<std::string>& target_type) {
    return llm.complete(build_cypher_prompt(prompts, question, node_types, edge_types, target_type));
}

}  // namespace afr
