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

#include <atomic>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <regex>
#include <string>
#include <vector>

namespace afr {

class ChatProvider {
public:
    virtual ~ChatProvider() = default;

    virtual std::string complete(const std::string& prompt) = 0;
    virtual std::string id() const = 0;
};

/// Raised by ScriptedProvider for prompts no rule covers.
class ScriptMismatch : public Error {
public:
    using Error::Error;
};

/// Offline chat provider answering from an ordered rule list. Rules match on
/// prompt content only, so concurrent use is deterministic.
class ScriptedProvider final : public ChatProvider {
public:
    using Handler = std::function<std::optional<std::string>(const std::string&)>;

    ScriptedProvider() = default;
    ScriptedProvider(ScriptedProvider&& other) noexcept
        : rules_(std::move(other.rules_)), calls_(other.calls_.load()) {}

    void add_exact(std::string prompt, std::string response);
    /// Matches when every needle occurs in the prompt.
    void add_contains(std::vector<std::string> needles, std::string response);
    /// ECMAScript pattern searched in the prompt; "$1".."$9" in the response
    /// expand to capture groups.
    void add_regex(const std::string& pattern, std::string response,
                   std::vector<std::string> needles = {});
    void add_handler(Handler handler);

    /// Loads a JSON array of {"exact"|"contains"|"regex", "response"} rules.
    static ScriptedProvider load(const std::filesystem::path& file);
    void append_rules_from(const std::filesystem::path& file);

    std::string complete(const std::string& prompt) override;
    std::string id() const override { return "scripted"; }

    std::size_t calls() const noexcept { return calls_.load(); }

private:
    struct Rule {
        std::optional<std::string> exact;
        std::vector<std::string> needles;
        std::optional<std::regex> pattern;
        std::string response;
        Handler handler;
    };

    std::vector<Rule> rules_;
    std::atomic<std::size_t> calls_{0};
};

struct HttpEndpoint {
    std::string base_url;  // e.g. https://api.openai.com/v1
    std::string model;
    std::string api_key;
    double timeout_s = 120.0;
    int max_retries = 3;
    double backoff_initial_s = 0.5;
};

/// OpenAI-compatible chat completions client.
class HttpChatProvider final : public ChatProvider {
public:
    HttpChatProvider(HttpEndpoint endpoint, std::optional<std::string> reasoning_effort = {});

    std::string complete(const std::string& prompt) override;
    std::string id() const override { return "http:" + endpoint_.model; }

private:
    HttpEndpoint endpoint_;
    std::optional<std::string> reasoning_effort_;
};

/// OpenAI-compatible embeddings client.
class HttpEmbeddingProvider final : public EmbeddingProvider {
public:
    explicit HttpEmbeddingProvider(HttpEndpoint endpoint) : endpoint_(std::move(endpoint)) {}

    std::string id() const override { return "http:" + endpoint_.model; }
    std::vector<Vector> embed(std::span<const std::string> texts) override;

private:
    HttpEndpoint endpoint_;
};

/// POSTs JSON to base_url + path with retries on transport errors, 429 and
/// 5xx. Returns the parsed response body.
std::string post_json_with_retries(const HttpEndpoint& endpoint, const std::string& path,
                                   const std::string& body);

/// tokens ~= ceil(characters / chars_per_token)
struct TokenEstimator {
    double chars_per_token = 4.0;

    std::size_t estimate(std::string_view text) const;
};

struct LlmAccounting {
    std::size_t prompts = 0;
    std::size_t tokens_in = 0;
    std::size_t tokens_out = 0;
    std::size_t failures = 0;

    LlmAccounting& operator+=(const LlmAccounting& o);
};

/// Per-query view on a shared provider: enforces the context budget and
/// counts prompts and estimated tokens.
class LlmSession {
public:
    LlmSession(ChatProvider& provider, std::size_t token_budget, TokenEstimator estimator = {});

    /// Throws BudgetExceeded before any network activity when the prompt
    /// does not fit.
    std::string complete(const std::string& prompt);
    bool fits(const std::string& prompt) const;
    std::size_t estimate(const std::string& text) const { return estimator_.estimate(text); }

    const LlmAccounting& accounting() const noexcept { return accounting_; }
    std::size_t token_budget() const noexcept { return token_budget_; }

private:
    ChatProvider& provider_;
    std::size_t token_budget_;
    TokenEstimator estimator_;
    LlmAccounting accounting_;
};

/// Named prompt templates with {placeholder} slots.
class PromptLibrary {
public:
    static constexpr const char* kTargetType = "target_type";
    static constexpr const char* kCypher = "cypher";
    static constexpr const char* kPointwise = "rerank_pointwise";
    static constexpr const char* kListwise = "rerank_listwise";
    static constexpr const char* kPairwise = "rerank_pairwise";

    /// Built-in templates.
    PromptLibrary();
    /// Built-ins overridden by <dir>/<name>.txt where present.
    static PromptLibrary from_dir(const std::filesystem::path& dir);

    const std::string& body(const std::string& name) const;
    void set_body(const std::string& name, std::string body);

    /// Substitutes every {name}; unknown or unfilled placeholders throw. A
    /// line holding only a placeholder that expands to "" is removed.
    std::string fill(const std::string& name, const std::map<std::string, std::string>& values) const;

    static const std::vector<std::string>& names();

private:
    std::map<std::string, std::string> bodies_;
};

std::string fill_template(const std::string& body, const std::map<std::string, std::string>& values);

struct TargetTypePrediction {
    std::string type;
    bool valid = false;
    std::string raw;
};

std::string join_labels(const std::vector<std::string>& labels);

/// Step 1: asks which node type answers the question.
TargetTypePrediction derive_target_type(LlmSession& llm, const PromptLibrary& prompts,
                                        const std::string& question,
                                        const std::vector<std::string>& node_types);

/// Matches a free-text answer against the known node types.
TargetTypePrediction match_target_type(const std::string& response,
                                       const std::vector<std::string>& node_types);

/// Step 2: asks for a restricted Cypher query; returns the raw response.
std::string derive_cypher(LlmSession& llm, const PromptLibrary& prompts,
                          const std::string& question, const std::vector<std::string>& node_types,
                          const std::vector<std::string>& edge_types,
                          const std::optional<std::string>& target_type);

std::string build_cypher_prompt(const PromptLibrary& prompts, const std::string& question,
                                const std::vector<std::string>& node_types,
                                const std::vector<std::string>& edge_types,
                                const std::optional<std::string>& target_type);

}  // namespace afr
