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
#include "afr/skb.hpp"

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace afr {

using Vector = std::vector<float>;

enum class SpaceVariant { text_only, text_plus_relations };

std::string_view to_string(SpaceVariant v);
SpaceVariant parse_space_variant(std::string_view s);

/// How much relational context a rendered node description carries.
enum class DetailLevel {
    full,     // attributes, document, 1-hop and selected 2-hop relations
    reduced,  // only relations touching the anchor set
    bare,     // no relations
};

std::string_view to_string(DetailLevel d);

inline constexpr std::size_t kMaxRelationLines = 200;

/// Deterministic textual description of a node.
///
/// Layout: a "type: <t>; <name|title>: <s>" header, "attr <k>: <v>" lines in
/// key order, the document, then relation lines. 1-hop lines read
/// "<edge> -> <neighbor>" for outgoing and "<edge> <- <neighbor>" for incoming
/// edges. A 2-hop path v -e1- u -e2- w is rendered only when the e1 relation,
/// read from u toward v, is one-to-one or many-to-one (u determines v).
/// Relation lines are capped at kMaxRelationLines. With detail == reduced only
/// lines whose intermediate or end node is in `anchors` survive.
std::string render_node_text(const Skb& skb, NodeId v, SpaceVariant variant, DetailLevel detail,
                             const NodeSet* anchors = nullptr);

/// Cosine similarity; 0 when either vector is zero. Throws on dimension mismatch.
double cosine(std::span<const float> u, std::span<const float> v);

void l2_normalize(Vector& v);

/// Backend producing raw embeddings.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;

    virtual std::string id() const = 0;
    virtual std::vector<Vector> embed(std::span<const std::string> texts) = 0;
};

/// Offline hashing embedder. Tokens are maximal runs of lower-case ASCII
/// alphanumerics; each occurrence adds a signed unit to bucket h mod dim,
/// negative when the top bit of the FNV-1a hash is set.
class HashEmbeddingProvider final : public EmbeddingProvider {
public:
    explicit HashEmbeddingProvider(std::size_t dim = 256) : dim_(dim) {}

    std::string id() const override { return "hash-fnv1a-" + std::to_string(dim_); }
    std::vector<Vector> embed(std::span<const std::string> texts) override;

    Vector embed_one(std::string_view text) const;

    static std::vector<std::string> tokenize(std::string_view text);

private:
    std::size_t dim_;
};

/// Caching front for a provider. Identical texts are embedded once; the
/// counters expose how often the backend was actually called.
class Embedder {
public:
    explicit Embedder(EmbeddingProvider& provider, std::size_t batch_size = 64,
                      std::size_t max_concurrency = 1)
        : provider_(provider), batch_size_(batch_size), max_concurrency_(max_concurrency) {}

    std::vector<Vector> embed_texts(std::span<const std::string> texts);
    Vector embed_text(const std::string& text);

    const EmbeddingProvider& provider() const noexcept { return provider_; }
    std::string provider_id() const { return provider_.id(); }
    std::size_t provider_calls() const noexcept { return calls_.load(); }
    std::size_t texts_embedded() const noexcept { return texts_sent_.load(); }

private:
    EmbeddingProvider& provider_;
    std::size_t batch_size_;
    std::size_t max_concurrency_;
    std::mutex mu_;
    std::unordered_map<std::uint64_t, Vector> cache_;
    std::size_t dim_ = 0;
    std::atomic<std::size_t> calls_{0};
    std::atomic<std::size_t> texts_sent_{0};
};

/// Named set of node vectors built from one rendering variant.
class EmbeddingSpace {
public:
    EmbeddingSpace(SpaceVariant variant, std::string provider_id)
        : variant_(variant), provider_id_(std::move(provider_id)) {}

    EmbeddingSpace(const EmbeddingSpace&) = delete;
    EmbeddingSpace& operator=(const EmbeddingSpace&) = delete;
    EmbeddingSpace(EmbeddingSpace&& other) noexcept;
    EmbeddingSpace& operator=(EmbeddingSpace&&) = delete;

    SpaceVariant variant() const noexcept { return variant_; }
    const std::string& provider_id() const noexcept { return provider_id_; }
    std::size_t dim() const;
    std::size_t size() const;

    /// Renders and embeds the given nodes (all nodes when empty), skipping
    /// nodes whose stored content hash still matches. Returns how many
    /// vectors were (re)computed.
    std::size_t build(const Skb& skb, Embedder& embedder, const NodeSet& only = {});

    /// Stored vector, embedding the node on demand when missing.
    Vector vector_for(const Skb& skb, Embedder& embedder, NodeId v);
    bool contains(NodeId v) const;
    std::optional<Vector> find(NodeId v) const;
    std::optional<std::uint64_t> content_hash(NodeId v) const;

    void put(NodeId v, std::uint64_t hash, Vector vec);

    void save(const std::filesystem::path& file) const;
    static EmbeddingSpace load(const std::filesystem::path& file);

private:
    SpaceVariant variant_;
    std::string provider_id_;
    mutable std::shared_mutex mu_;
    std::size_t dim_ = 0;
    std::unordered_map<NodeId, std::pair<std::uint64_t, Vector>> vectors_;
};

struct Scored {
    NodeId node;
    double score = 0.0;

    friend bool operator==(const Scored&, const Scored&) = default;
};

/// Exact top-n: descending cosine, ties by ascending id.
std::vector<Scored> top_n_by_cosine(std::span<const float> query, const NodeSet& candidates,
                                    long long n,
                                    const std::function<Vector(NodeId)>& vector_of);

/// Vector similarity search of `query_text` over `candidates`.
std::vector<Scored> vss(const std::string& query_text, const NodeSet& candidates, long long n,
                        EmbeddingSpace& space, const Skb& skb, Embedder& embedder);

/// Both spaces of one knowledge base.
struct SpaceSet {
    EmbeddingSpace text_only;
    EmbeddingSpace text_plus_relations;

    explicit SpaceSet(const std::string& provider_id)
        : text_only(SpaceVariant::text_only, provider_id),
          text_plus_relations(SpaceVariant::text_plus_relations, provider_id) {}
    SpaceSet(EmbeddingSpace a, EmbeddingSpace b)
        : text_only(std::move(a)), text_plus_relations(std::move(b)) {}

    EmbeddingSpace& get(SpaceVariant v) {
        return v == SpaceVariant::text_only ? text_only : text_plus_relations;
    }
};

}  // namespace afr
