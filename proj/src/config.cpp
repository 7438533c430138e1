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

#include "afr/config.hpp"

#include <spdlog/spdlog.h>

#include <cstdlib>
#include <fstream>
#include <set>

namespace afr {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw UsageError(where + ": expected an object");
    for (const auto& [key, value] : j.items()) {
        if (!allowed.count(key)) throw UsageError(where + ": unknown key '" + key + "'");
    }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return;
    try {
        out = it->get<T>();
    } catch (const json::exception&) {
        throw UsageError(where + ": bad value for '" + key + "'");
    }
}

std::filesystem::path read_path(const json& j, const char* key, const std::filesystem::path& base,
                                const std::string& where) {
    std::string s;
    read(j, key, s, where);
    if (s.empty()) return {};
    std::filesystem::path p(s);
    return p.is_relative() && !base.empty() ? base / p : p;
}

HttpEndpoint read_endpoint(const json& j, const std::string& where) {
    HttpEndpoint e;
    read(j, "base_url", e.base_url, where);
    read(j, "model", e.model, where);
    read(j, "api_key", e.api_key, where);
    read(j, "timeout_s", e.timeout_s, where);
    read(j, "max_retries", e.max_retries, where);
    read(j, "backoff_initial_s", e.backoff_initial_s, where);
    if (e.max_retries < 0) throw UsageError(where + ": max_retries must be >= 0");
    if (e.timeout_s <= 0) throw UsageError(where + ": timeout_s must be positive");
    return e;
}

json endpoint_json(const HttpEndpoint& e) {
    return {{"base_url", e.base_url},
            {"model", e.model},
            {"timeout_s", e.timeout_s},
            {"max_retries", e.max_retries},
            {"backoff_initial_s", e.backoff_initial_s}};
}

}  // namespace

AppConfig AppConfig::from_json(const json& j, const std::filesystem::path& base) {
    reject_unknown(j,
                   {"k", "l_max", "alpha", "mode", "reranker", "steps", "spaces",
                    "concealed_node_types", "token_budget", "trace", "chat", "embedding", "skb",
                    "queries", "out", "space_dir", "prompt_dir", "parallelism"},
                   "config");
    AppConfig c;
    auto& p = c.pipeline;
    read(j, "k", p.k, "config");
    read(j, "l_max", p.l_max, "config");
    read(j, "alpha", p.alpha, "config");
    read(j, "token_budget", p.token_budget, "config");
    read(j, "trace", p.detailed_trace, "config");
    read(j, "concealed_node_types", p.concealed_node_types, "config");
    read(j, "parallelism", c.parallelism, "config");
    std::string s;
    if (read(j, "mode", s, "config"), !s.empty()) p.mode = parse_mode_from(s);
    s.clear();
    if (read(j, "reranker", s, "config"), !s.empty()) p.reranker = parse_reranker_kind(s);
    s.clear();
    if (read(j, "steps", s, "config"), !s.empty()) p.steps = parse_step_subset(s);
    if (auto it = j.find("spaces"); it != j.end()) {
        reject_unknown(*it, {"step4", "step6", "step7"}, "config.spaces");
        for (auto [key, slot] : {std::pair{"step4", &p.space_step4}, std::pair{"step6", &p.space_step6},
                                 std::pair{"step7", &p.space_step7}}) {
            std::string v;
            read(*it, key, v, "config.spaces");
            if (!v.empty()) *slot = parse_space_variant(v);
        }
    }
    if (auto it = j.find("chat"); it != j.end()) {
        reject_unknown(*it,
                       {"provider", "base_url", "model", "api_key", "timeout_s", "max_retries",
                        "backoff_initial_s", "reasoning_effort", "script"},
                       "config.chat");
        read(*it, "provider", c.chat.provider, "config.chat");
        c.chat.endpoint = read_endpoint(*it, "config.chat");
        std::string effort;
        read(*it, "reasoning_effort", effort, "config.chat");
        if (!effort.empty()) {
            if (effort != "none" && effort != "low" && effort != "medium" && effort != "high") {
                throw UsageError("config.chat: reasoning_effort must be none, low, medium or high");
            }
            c.chat.reasoning_effort = effort;
        }
        c.chat.script = read_path(*it, "script", base, "config.chat");
    }
    if (auto it = j.find("embedding"); it != j.end()) {
        reject_unknown(*it,
                       {"provider", "dim", "base_url", "model", "api_key", "timeout_s",
                        "max_retries", "backoff_initial_s", "batch_size", "max_concurrency"},
                       "config.embedding");
        read(*it, "provider", c.embedding.provider, "config.embedding");
        read(*it, "dim", c.embedding.dim, "config.embedding");
        read(*it, "batch_size", c.embedding.batch_size, "config.embedding");
        read(*it, "max_concurrency", c.embedding.max_concurrency, "config.embedding");
        c.embedding.endpoint = read_endpoint(*it, "config.embedding");
    }
    c.skb = read_path(j, "skb", base, "config");
    c.queries = read_path(j, "queries", base, "config");
    c.out = read_path(j, "out", base, "config");
    c.space_dir = read_path(j, "space_dir", base, "config");
    c.prompt_dir = read_path(j, "prompt_dir", base, "config");
    if (c.chat.provider != "http" && c.chat.provider != "scripted") {
        throw UsageError("config.chat: provider must be http or scripted");
    }
    if (c.embedding.provider != "hash" && c.embedding.provider != "http") {
        throw UsageError("config.embedding: provider must be hash or http");
    }
    if (c.embedding.dim == 0 || c.embedding.batch_size == 0 || c.embedding.max_concurrency == 0) {
        throw UsageError("config.embedding: dim, batch_size and max_concurrency must be positive");
    }
    if (c.parallelism == 0) throw UsageError("config: parallelism must be positive");
    p.validate();
    return c;
}

AppConfig AppConfig::load(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw UsageError("cannot open config " + file.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw UsageError(file.string() + ": " + e.what());
    }
    return from_json(j, file.parent_path());
}

json AppConfig::to_json() const {
    const auto& p = pipeline;
    json chat_j = endpoint_json(chat.endpoint);
    chat_j["provider"] = chat.provider;
    if (chat.reasoning_effort) chat_j["reasoning_effort"] = *chat.reasoning_effort;
    if (!chat.script.empty()) chat_j["script"] = chat.script.string();
    json emb_j = endpoint_json(embedding.endpoint);
    emb_j["provider"] = embedding.provider;
    emb_j["dim"] = embedding.dim;
    emb_j["batch_size"] = embedding.batch_size;
    emb_j["max_concurrency"] = embedding.max_concurrency;
    return {{"k", p.k},
            {"l_max", p.l_max},
            {"alpha", p.alpha},
            {"mode", std::string(afr::to_string(p.mode))},
            {"reranker", std::string(afr::to_string(p.reranker))},
            {"steps", std::string(afr::to_string(p.steps))},
            {"spaces",
             {{"step4", std::string(afr::to_string(p.space_step4))},
              {"step6", std::string(afr::to_string(p.space_step6))},
              {"step7", std::string(afr::to_string(p.space_step7))}}},
            {"concealed_node_types", p.concealed_node_types},
            {"token_budget", p.token_budget},
            {"trace", p.detailed_trace},
            {"chat", chat_j},
            {"embedding", emb_j},
            {"skb", skb.string()},
            {"queries", queries.string()},
            {"out", out.string()},
            {"space_dir", resolved_space_dir().string()},
            {"prompt_dir", prompt_dir.string()},
            {"parallelism", parallelism}};
}

std::filesystem::path AppConfig::resolved_space_dir() const {
    if (!space_dir.empty()) return space_dir;
    if (skb.empty()) return {};
    return skb / "spaces";
}

namespace {

HttpEndpoint with_key(HttpEndpoint e) {
    if (e.api_key.empty()) {
        if (const char* key = std::getenv("AFR_API_KEY")) e.api_key = key;
    }
    if (e.base_url.empty()) throw UsageError("HTTP provider needs base_url");
    if (e.model.empty()) throw UsageError("HTTP provider needs model");
    return e;
}

}  // namespace

Runtime make_runtime(const AppConfig& cfg) {
    Runtime rt;
    if (cfg.chat.provider == "scripted") {
        if (cfg.chat.script.empty()) throw UsageError("scripted chat provider needs a script");
        rt.chat = std::make_unique<ScriptedProvider>(ScriptedProvider::load(cfg.chat.script));
    } else {
        rt.chat = std::make_unique<HttpChatProvider>(with_key(cfg.chat.endpoint),
                                                     cfg.chat.reasoning_effort);
    }
    if (cfg.embedding.provider == "hash") {
        rt.embedding_provider = std::make_unique<HashEmbeddingProvider>(cfg.embedding.dim);
    } else {
        rt.embedding_provider =
            std::make_unique<HttpEmbeddingProvider>(with_key(cfg.embedding.endpoint));
    }
    rt.embedder = std::make_unique<Embedder>(*rt.embedding_provider, cfg.embedding.batch_size,
                                             cfg.embedding.max_concurrency);
    rt.prompts = cfg.prompt_dir.empty() ? PromptLibrary() : PromptLibrary::from_dir(cfg.prompt_dir);
    return rt;
}

std::filesystem::path space_file(const std::filesystem::path& dir, SpaceVariant v) {
    return dir / (std::string(to_string(v)) + ".jsonl");
}

SpaceSet load_spaces(const AppConfig& cfg, const std::string& provider_id) {
    const auto dir = cfg.resolved_space_dir();
    auto one = [&](SpaceVariant v) {
        const auto file = dir.empty() ? std::filesystem::path() : space_file(dir, v);
        if (!file.empty() && std::filesystem::exists(file)) {
            EmbeddingSpace s = EmbeddingSpace::load(file);
            if (s.provider_id() == provider_id && s.variant() == v) return s;
            spdlog::warn("{} was built with {}; embedding on demand instead", file.string(),
                         s.provider_id());
        }
        return EmbeddingSpace(v, provider_id);
    };
    return SpaceSet(one(SpaceVariant::text_only), one(SpaceVariant::text_plus_relations));
}

}  // namespace afr
