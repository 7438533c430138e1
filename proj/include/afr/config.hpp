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

#include "afr/embed.hpp"
#include "afr/llm.hpp"
#include "afr/pipeline.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

namespace afr {

struct ChatConfig {
    std::string provider = "http";  // "http" or "scripted"
    HttpEndpoint endpoint;
    std::optional<std::string> reasoning_effort;
    std::filesystem::path script;  // scripted transcript
};

struct EmbeddingConfig {
    std::string provider = "hash";  // "hash" or "http"
    std::size_t dim = 256;
    HttpEndpoint endpoint;
    std::size_t batch_size = 64;
    std::size_t max_concurrency = 1;
};

struct AppConfig {
    PipelineConfig pipeline;
    ChatConfig chat;
    EmbeddingConfig embedding;
    std::filesystem::path skb;
    std::filesystem::path queries;
    std::filesystem::path out;
    std::filesystem::path space_dir;  // defaults to <skb>/spaces
    std::filesystem::path prompt_dir;
    std::size_t parallelism = 1;

    /// Parses a config object; unknown keys are usage errors. Relative
    /// paths resolve against `base_dir`.
    static AppConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
    static AppConfig load(const std::filesystem::path& file);
    nlohmann::json to_json() const;

    std::filesystem::path resolved_space_dir() const;
};

/// Providers and prompt library built from a configuration.
struct Runtime {
    std::unique_ptr<ChatProvider> chat;
    std::unique_ptr<EmbeddingProvider> embedding_provider;
    std::unique_ptr<Embedder> embedder;
    PromptLibrary prompts;
};

/// Reads AFR_API_KEY for HTTP providers without an explicit key.
Runtime make_runtime(const AppConfig& cfg);

/// Loads the persisted spaces of the provider when they exist and match,
/// otherwise returns empty spaces that embed on demand.
SpaceSet load_spaces(const AppConfig& cfg, const std::string& provider_id);

std::filesystem::path space_file(const std::filesystem::path& dir, SpaceVariant v);

}  // namespace afr
