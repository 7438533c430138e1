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

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <atomic>
#include <mutex>
#include <thread>

namespace afr {
namespace {

using nlohmann::json;

/// Local OpenAI-compatible stub. The first `failures` requests get HTTP 503.
class StubServer {
public:
    explicit StubServer(int failures = 0) : failures_(failures) {
        server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
            if (!record(req, res)) return;
            const json body = json::parse(req.body);
            const std::string prompt = body.at("messages").at(0).at("content");
            const json reply{{"choices", json::array({{{"message",
                                                        {{"role", "assistant"},
                                                         {"content", "echo: " + prompt}}}}})}};
            res.set_content(reply.dump(), "application/json");
        });
        server_.Post("/v1/embeddings", [this](const httplib::Request& req, httplib::Response& res) {
            if (!record(req, res)) return;
            const json body = json::parse(req.body);
            json data = json::array();
            const auto& input = body.at("input");
            // Reverse order with explicit indices.
            for (std::size_t i = input.size(); i-- > 0;) {
                const float len = static_cast<float>(input[i].get<std::string>().size());
                data.push_back({{"index", i}, {"embedding", {len, 1.0f}}});
            }
            res.set_content(json{{"data", data}}.dump(), "application/json");
        });
        server_.Post("/v1/bad/chat/completions", [](const httplib::Request&, httplib::Response& res) {
            res.status = 400;
            res.set_content("bad request", "text/plain");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~StubServer() {
        server_.stop();
        thread_.join();
    }

    HttpEndpoint endpoint(const std::string& suffix = "/v1") const {
        HttpEndpoint e;
        e.base_url = "http://127.0.0.1:" + std::to_string(port_) + suffix;
        e.model = "stub-model";
        e.api_key = "secret";
        e.timeout_s = 5;
        e.max_retries = 3;
        e.backoff_initial_s = 0.001;
        return e;
    }

    int requests() const { return requests_.load(); }
    json last_body() const {
        std::lock_guard lock(mu_);
        return last_body_;
    }
    std::string last_auth() const {
        std::lock_guard lock(mu_);
        return last_auth_;
    }

private:
    bool record(const httplib::Request& req, httplib::Response& res) {
        const int n = ++requests_;
        {
            std::lock_guard lock(mu_);
            last_body_ = json::parse(req.body);
            last_auth_ = req.get_header_value("Authorization");
        }
        if (n <= failures_) {
            res.status = 503;
            return false;
        }
        return true;
    }

    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    int failures_;
    std::atomic<int> requests_{0};
    mutable std::mutex mu_;
    json last_body_;
    std::string last_auth_;
};

TEST(HttpChat, SendsOpenAiShape) {
    StubServer server;
    HttpChatProvider chat(server.endpoint(), std::string("low"));
    EXPECT_EQ(chat.complete("hi there"), "echo: hi there");
    const json body = server.last_body();
    EXPECT_EQ(body.at("model"), "stub-model");
    EXPECT_EQ(body.at("messages").at(0).at("role"), "user");
    EXPECT_EQ(body.at("reasoning_effort"), "low");
    EXPECT_EQ(server.last_auth(), "Bearer secret");
    EXPECT_EQ(chat.id(), "http:stub-model");
}

TEST(HttpChat, RetriesServerErrors) {
    StubServer server(2);
    HttpChatProvider chat(server.endpoint());
    EXPECT_EQ(chat.complete("x"), "echo: x");
    EXPECT_EQ(server.requests(), 3);
    EXPECT_FALSE(server.last_body().contains("reasoning_effort"));
}

TEST(HttpChat, GivesUpAfterMaxRetries) {
    StubServer server(100);
    auto ep = server.endpoint();
    ep.max_retries = 2;
    HttpChatProvider chat(ep);
    EXPECT_THROW(chat.complete("x"), ProviderError);
    EXPECT_EQ(server.requests(), 3);
}

TEST(HttpChat, ClientErrorsAreNotRetried) {
    StubServer server;
    HttpChatProvider chat(server.endpoint("/v1/bad"));
    EXPECT_THROW(chat.complete("x"), ProviderError);
}

TEST(HttpChat, TransportFailureSurfaces) {
    HttpEndpoint ep;
    ep.base_url = "http://127.0.0.1:1";
    ep.model = "m";
    ep.max_retries = 1;
    ep.timeout_s = 1;
    ep.backoff_initial_s = 0.001;
    HttpChatProvider chat(ep);
    EXPECT_THROW(chat.complete("x"), ProviderError);
}

TEST(HttpEmbeddings, RestoresInputOrder) {
    StubServer server;
    HttpEmbeddingProvider emb(server.endpoint());
    const std::vector<std::string> texts{"a", "bbb", "cc"};
    const auto out = emb.embed(texts);
    ASSERT_EQ(out.size(), 3u);
    EXPECT_EQ(out[0], (Vector{1.0f, 1.0f}));
    EXPECT_EQ(out[1], (Vector{3.0f, 1.0f}));
    EXPECT_EQ(out[2], (Vector{2.0f, 1.0f}));
    EXPECT_EQ(server.last_body().at("input").size(), 3u);
}

TEST(HttpEmbeddings, WorksBehindEmbedderBatches) {
    StubServer server;
    HttpEmbeddingProvider emb(server.endpoint());
    Embedder embedder(emb, 2, 2);
    std::vector<std::string> texts;
    for (int i = 0; i < 7; ++i) texts.push_back(std::string(static_cast<std::size_t>(i + 1), 'z'));
    const auto out = embedder.embed_texts(texts);
    for (std::size_t i = 0; i < texts.size(); ++i) {
        EXPECT_NEAR(out[i][0] / out[i][1], static_cast<float>(i + 1), 1e-5);
    }
    EXPECT_EQ(server.requests(), 4);
}

TEST(HttpEndpoint, RejectsUrlWithoutScheme) {
    HttpEndpoint ep;
    ep.base_url = "localhost:8080";
    EXPECT_THROW(post_json_with_retries(ep, "/x", "{}"), UsageError);
}

}  // namespace
}  // namespace afr
