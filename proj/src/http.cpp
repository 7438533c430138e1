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

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include "afr/llm.hpp"

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <thread>

namespace afr {

namespace {

struct SplitUrl {
    std::string origin;  // scheme://host[:port]
    std::string path;    // without trailing slash
};

SplitUrl split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw UsageError("endpoint URL needs a scheme: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    SplitUrl s;
    s.origin = url.substr(0, path_start);
    s.path = path_start == std::string::npos ? "" : url.substr(path_start);
    while (!s.path.empty() && s.path.back() == '/') s.path.pop_back();
    return s;
}

}  // namespace

std::string post_json_with_retries(const HttpEndpoint& endpoint, const std::string& path,
                                   const std::string& body) {
    const auto url = split_url(endpoint.base_url);
    httplib::Client client(url.origin);
    const auto timeout = std::chrono::duration<double>(endpoint.timeout_s);
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    client.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    httplib::Headers headers;
    if (!endpoint.api_key.empty()) {
        headers.emplace("Authorization", "Bearer " + endpoint.api_key);
    }

    std::string last_error;
    for (int attempt = 0; attempt <= endpoint.max_retries; ++attempt) {
        if (attempt > 0) {
            const double wait = endpoint.backoff_initial_s * std::pow(2.0, attempt - 1);
            std::this_thread::sleep_for(std::chrono::duration<double>(wait));
        }
        auto res = client.Post(url.path + path, headers, body, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
        } else if (res->status == 429 || res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
        } else if (res->status != 200) {
            throw ProviderError("HTTP " + std::to_string(res->status) + " from " +
                                endpoint.base_url + path + ": " + res->body.substr(0, 300));
        } else {
            return res->body;
        }
        spdlog::warn("{}{} attempt {} failed: {}", endpoint.base_url, path, attempt + 1,
                     last_error);
    }
    throw ProviderError(endpoint.base_url + path + ": " + last_error + " after " +
                        std::to_string(endpoint.max_retries + 1) + " attempts");
}

HttpChatProvider::HttpChatProvider(HttpEndpoint endpoint, std::optional<std::string> reasoning_effort)
    : endpoint_(std::move(endpoint)), reasoning_effort_(std::move(reasoning_effort)) {}

std::string HttpChatProvider::complete(const std::string& prompt) {
    using nlohmann::json;
    json request{{"model", endpoint_.model},
                 {"messages", json::array({{{"role", "user"}, {"content", prompt}}})}};
    if (reasoning_effort_) request["reasoning_effort"] = *reasoning_effort_;
    const std::string body = post_json_with_retries(endpoint_, "/chat/completions", request.dump());
    try {
        const json j = json::parse(body);
        const auto& content = j.at("choices").at(0).at("message").at("content");
        return content.is_null() ? std::string{} : content.get<std::string>();
    } catch (const json::exception& e) {
        throw ProviderError(std::string("malformed chat completion response: ") + e.what());
    }
}

std::vector<Vector> HttpEmbeddingProvider::embed(std::span<const std::string> texts) {
    using nlohmann::json;
    json request{{"model", endpoint_.model}, {"input", json::array()}};
    for (const auto& t : texts) request["input"].push_back(t);
    const std::string body = post_json_with_retries(endpoint_, "/embeddings", request.dump());
    try {
        const json j = json::parse(body);
        const auto& data = j.at("data");
        if (data.size() != texts.size()) {
            throw ProviderError("embeddings response has " + std::to_string(data.size()) +
                                " items for " + std::to_string(texts.size()) + " inputs");
        }
        std::vector<Vector> out(texts.size());
        for (std::size_t i = 0; i < data.size(); ++i) {
            const auto idx = data[i].contains("index") ? data[i]["index"].get<std::size_t>() : i;
            if (idx >= out.size()) throw ProviderError("embeddings response index out of range");
            out[idx] = data[i].at("embedding").get<Vector>();
        }
        return out;
    } catch (const json::exception& e) {
        throw ProviderError(std::string("malformed embeddings response: ") + e.what());
    }
}

}  // namespace afr
