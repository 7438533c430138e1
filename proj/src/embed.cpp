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

#include "afr/embed.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <tuple>

namespace afr {

namespace {

bool traversal_is_functional(Cardinality c, Direction dir) {
    // Stored u->w traversed from u ("outgoing") is functional when every head
    // has at most one tail; traversed against the stored direction it is
    // functional when every tail has at most one head.
    if (dir == Direction::outgoing) {
        return c == Cardinality::one_to_one || c == Cardinality::many_to_one;
    }
    return c == Cardinality::one_to_one || c == Cardinality::one_to_many;
}

const char* arrow(Direction dir) { return dir == Direction::outgoing ? "->" : "<-"; }

struct RelationLine {
    std::string e1;
    int dir1;
    NodeId mid;
    int hop;
    std::string e2;
    int dir2;
    NodeId end;
    std::string text;

    auto key() const { return std::tie(e1, dir1, mid, hop, e2, dir2, end); }
};

}  // namespace

std::string_view to_string(SpaceVariant v) {
    return v == SpaceVariant::text_only ? "text_only" : "text_plus_relations";
}

SpaceVariant parse_space_variant(std::string_view s) {
    if (s == "text_only") return SpaceVariant::text_only;
    if (s == "text_plus_relations") return SpaceVariant::text_plus_relations;
    throw UsageError("unknown embedding space '" + std::string(s) + "'");
}

std::string_view to_string(DetailLevel d) {
    switch (d) {
        case DetailLevel::full: return "full";
        case DetailLevel::reduced: return "reduced";
        case DetailLevel::bare: return "bare";
    }
    return "?";
}

std::string render_node_text(const Skb& skb, NodeId v, SpaceVariant variant, DetailLevel detail,
                             const NodeSet* anchors) {
    const Node& node = skb.node(v);
    const std::string display_key = node.display_key();

    std::string out = "type: " + node.type + "; " + display_key + ": " + node.display_name();
    for (const auto& [k, val] : node.attributes) {
        if (k == display_key) continue;
        out += "\nattr " + k + ": " + val.text;
    }
    if (node.document && !node.document->empty()) out += "\ndocument: " + *node.document;

    if (variant == SpaceVariant::text_only || detail == DetailLevel::bare) return out;

    auto anchored = [&](NodeId x) {
        return detail != DetailLevel::reduced || (anchors != nullptr && set_contains(*anchors, x));
    };

    std::vector<RelationLine> lines;
    for (const auto& e1 : skb.edge_types()) {
        for (Direction d1 : {Direction::outgoing, Direction::incoming}) {
            for (NodeId u : skb.neighbors(v, e1, d1)) {
                const std::string u_name = skb.node(u).display_name();
                const std::string first = e1 + " " + arrow(d1) + " " + u_name;
                if (anchored(u)) {
                    lines.push_back({e1, static_cast<int>(d1), u, 1, "", 0, u, first});
                }
                for (const auto& e2 : skb.edge_types()) {
                    const Cardinality c2 = skb.cardinality(e2);
                    for (Direction d2 : {Direction::outgoing, Direction::incoming}) {
                        if (!traversal_is_functional(c2, d2)) continue;
                        for (NodeId w : skb.neighbors(u, e2, d2)) {
                            if (w == v) continue;
                            if (!anchored(u) && !anchored(w)) continue;
                            lines.push_back({e1, static_cast<int>(d1), u, 2, e2,
                                             static_cast<int>(d2), w,
                                             first + " / " + e2 + " " + arrow(d2) + " " +
                                                 skb.node(w).display_name()});
                        }
                    }
                }
            }
        }
    }
    std::sort(lines.begin(), lines.end(),
              [](const RelationLine& a, const RelationLine& b) { return a.key() < b.key(); });
    if (lines.size() > kMaxRelationLines) lines.resize(kMaxRelationLines);
    for (const auto& l : lines) out += "\n" + l.text;
    return out;
}

double cosine(std::span<const float> u, std::span<const float> v) {
    if (u.size() != v.size()) {
        throw UsageError("cosine: dimension mismatch " + std::to_string(u.size()) + " vs " +
                         std::to_string(v.size()));
    }
    double dot = 0.0;
    double nu = 0.0;
    double nv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        dot += static_cast<double>(u[i]) * v[i];
        nu += static_cast<double>(u[i]) * u[i];
        nv += static_cast<double>(v[i]) * v[i];
    }
    if (nu == 0.0 || nv == 0.0) return 0.0;
    return std::clamp(dot / (std::sqrt(nu) * std::sqrt(nv)), -1.0, 1.0);
}

void l2_normalize(Vector& v) {
    double n = 0.0;
    for (float x : v) n += static_cast<double>(x) * x;
    if (n == 0.0) return;
    const double inv = 1.0 / std::sqrt(n);
    for (float& x : v) x = static_cast<float>(x * inv);
}

std::vector<std::string> HashEmbeddingProvider::tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        const char lc = static_cast<char>(std::tolower(c));
        if ((lc >= 'a' && lc <= 'z') || (lc >= '0' && lc <= '9')) {
            cur.push_back(lc);
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

Vector HashEmbeddingProvider::embed_one(std::string_view text) const {
    Vector v(dim_, 0.0f);
    for (const auto& tok : tokenize(text)) {
        const std::uint64_t h = fnv1a64(tok);
        const float sign = (h >> 63) == 0 ? 1.0f : -1.0f;
        v[h % dim_] += sign;
    }
    l2_normalize(v);
    return v;
}

std::vector<Vector> HashEmbeddingProvider::embed(std::span<const std::string> texts) {
    std::vector<Vector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(embed_one(t));
    return out;
}

std::vector<Vector> Embedder::embed_texts(std::span<const std::string> texts) {
    std::vector<std::uint64_t> keys;
    keys.reserve(texts.size());
    std::vector<std::string> missing;
    std::vector<std::uint64_t> missing_keys;
    {
        std::lock_guard lock(mu_);
        for (const auto& t : texts) {
            const auto key = fnv1a64(t);
            keys.push_back(key);
            if (!cache_.count(key) &&
                std::find(missing_keys.begin(), missing_keys.end(), key) == missing_keys.end()) {
                missing.push_back(t);
                missing_keys.push_back(key);
            }
        }
    }

    if (!missing.empty()) {
        std::vector<std::span<const std::string>> batches;
        const std::size_t bs = std::max<std::size_t>(1, batch_size_);
        for (std::size_t i = 0; i < missing.size(); i += bs) {
            batches.emplace_back(missing.data() + i, std::min(bs, missing.size() - i));
        }
        std::vector<std::vector<Vector>> results(batches.size());
        auto run = [&](std::size_t b) {
            ++calls_;
            texts_sent_ += batches[b].size();
            auto r = provider_.embed(batches[b]);
            if (r.size() != batches[b].size()) {
                throw ProviderError("embedding provider returned " + std::to_string(r.size()) +
                                    " vectors for " + std::to_string(batches[b].size()) +
                                    " inputs");
            }
            results[b] = std::move(r);
        };
        const std::size_t width = std::max<std::size_t>(1, max_concurrency_);
        for (std::size_t start = 0; start < batches.size(); start += width) {
            std::vector<std::future<void>> inflight;
            for (std::size_t b = start; b < std::min(batches.size(), start + width); ++b) {
                if (width == 1) {
                    run(b);
                } else {
                    inflight.push_back(std::async(std::launch::async, run, b));
                }
            }
            for (auto& f : inflight) f.get();
        }

        std::lock_guard lock(mu_);
        std::size_t m = 0;
        for (auto& batch : results) {
            for (auto& vec : batch) {
                if (vec.empty()) throw ProviderError("embedding provider returned an empty vector");
                if (dim_ == 0) dim_ = vec.size();
                if (vec.size() != dim_) {
                    throw ProviderError("embedding dimension mismatch: got " +
                                        std::to_string(vec.size()) + ", expected " +
                                        std::to_string(dim_));
                }
                l2_normalize(vec);
                cache_.emplace(missing_keys[m++], std::move(vec));
            }
        }
    }

    std::lock_guard lock(mu_);
    std::vector<Vector> out;
    out.reserve(keys.size());
    for (auto key : keys) out.push_back(cache_.at(key));
    return out;
}

Vector Embedder::embed_text(const std::string& text) {
    return embed_texts(std::span<const std::string>(&text, 1)).front();
}

EmbeddingSpace::EmbeddingSpace(EmbeddingSpace&& other) noexcept
    : variant_(other.variant_), provider_id_(std::move(other.provider_id_)) {
    std::unique_lock lock(other.mu_);
    dim_ = other.dim_;
    vectors_ = std::move(other.vectors_);
}

std::size_t EmbeddingSpace::dim() const {
    std::shared_lock lock(mu_);
    return dim_;
}

std::size_t EmbeddingSpace::size() const {
    std::shared_lock lock(mu_);
    return vectors_.size();
}

bool EmbeddingSpace::contains(NodeId v) const {
    std::shared_lock lock(mu_);
    return vectors_.count(v) != 0;
}

std::optional<Vector> EmbeddingSpace::find(NodeId v) const {
    std::shared_lock lock(mu_);
    auto it = vectors_.find(v);
    if (it == vectors_.end()) return std::nullopt;
    return it->second.second;
}

std::optional<std::uint64_t> EmbeddingSpace::content_hash(NodeId v) const {
    std::shared_lock lock(mu_);
    auto it = vectors_.find(v);
    if (it == vectors_.end()) return std::nullopt;
    return it->second.first;
}

void EmbeddingSpace::put(NodeId v, std::uint64_t hash, Vector vec) {
    std::unique_lock lock(mu_);
    if (dim_ == 0) dim_ = vec.size();
    if (vec.size() != dim_) {
        throw DataError("vector for node " + std::to_string(v.value) + " has dim " +
                        std::to_string(vec.size()) + ", space has " + std::to_string(dim_));
    }
    vectors_[v] = {hash, std::move(vec)};
}

std::size_t EmbeddingSpace::build(const Skb& skb, Embedder& embedder, const NodeSet& only) {
    if (embedder.provider_id() != provider_id_) {
        throw UsageError("space was built with provider '" + provider_id_ + "', got '" +
                         embedder.provider_id() + "'");
    }
    const NodeSet& ids = only.empty() ? skb.all_nodes() : only;
    std::vector<NodeId> todo;
    std::vector<std::string> texts;
    std::vector<std::uint64_t> hashes;
    for (NodeId v : ids) {
        std::string text = render_node_text(skb, v, variant_, DetailLevel::full);
        const auto h = fnv1a64(text);
        if (content_hash(v) == h) continue;
        todo.push_back(v);
        hashes.push_back(h);
        texts.push_back(std::move(text));
    }
    auto vecs = embedder.embed_texts(texts);
    for (std::size_t i = 0; i < todo.size(); ++i) put(todo[i], hashes[i], std::move(vecs[i]));
    return todo.size();
}

Vector EmbeddingSpace::vector_for(const Skb& skb, Embedder& embedder, NodeId v) {
    if (auto found = find(v)) return std::move(*found);
    std::string text = render_node_text(skb, v, variant_, DetailLevel::full);
    Vector vec = embedder.embed_text(text);
    put(v, fnv1a64(text), vec);
    return vec;
}

void EmbeddingSpace::save(const std::filesystem::path& file) const {
    using nlohmann::json;
    std::shared_lock lock(mu_);
    if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
    std::ofstream out(file, std::ios::trunc);
    if (!out) throw DataError("cannot write " + file.string());
    out << json{{"dim", dim_}, {"provider_id", provider_id_}, {"variant", to_string(variant_)}}.dump()
        << '\n';
    std::vector<NodeId> ids;
    ids.reserve(vectors_.size());
    for (const auto& [id, _] : vectors_) ids.push_back(id);
    std::sort(ids.begin(), ids.end());
    for (NodeId id : ids) {
        const auto& [hash, vec] = vectors_.at(id);
        out << json{{"node_id", id.value}, {"hash", std::to_string(hash)}, {"vector", vec}}.dump()
            << '\n';
    }
}

EmbeddingSpace EmbeddingSpace::load(const std::filesystem::path& file) {
    using nlohmann::json;
    std::ifstream in(file);
    if (!in) throw DataError("cannot open " + file.string());
    std::string line;
    if (!std::getline(in, line)) throw DataError(file.string() + ": missing header line");
    try {
        const json header = json::parse(line);
        EmbeddingSpace space(parse_space_variant(header.at("variant").get<std::string>()),
                             header.at("provider_id").get<std::string>());
        const auto dim = header.at("dim").get<std::size_t>();
        std::size_t line_no = 1;
        while (std::getline(in, line)) {
            ++line_no;
            if (trim(line).empty()) continue;
            const json rec = json::parse(line);
            Vector vec = rec.at("vector").get<Vector>();
            if (vec.size() != dim) {
                throw DataError(file.string() + ":" + std::to_string(line_no) +
                                ": vector dim does not match header");
            }
            space.put(NodeId{rec.at("node_id").get<std::uint64_t>()},
                      std::stoull(rec.at("hash").get<std::string>()), std::move(vec));
        }
        return space;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(file.string() + ": malformed space file: " + e.what());
    }
}

std::vector<Scored> top_n_by_cosine(std::span<const float> query, const NodeSet& candidates,
                                    long long n, const std::function<Vector(NodeId)>& vector_of) {
    if (n < 0) throw UsageError("vss: n must be non-negative");
    std::vector<Scored> scored;
    scored.reserve(candidates.size());
    for (NodeId c : candidates) scored.push_back({c, cosine(query, vector_of(c))});
    const auto take = std::min<std::size_t>(static_cast<std::size_t>(n), scored.size());
    auto better = [](const Scored& a, const Scored& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.node < b.node;
    };
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take),
                      scored.end(), better);
    scored.resize(take);
    return scored;
}

std::vector<Scored> vss(const std::string& query_text, const NodeSet& candidates, long long n,
                        EmbeddingSpace& space, const Skb& skb, Embedder& embedder) {
    if (n < 0) throw UsageError("vss: n must be non-negative");
    if (n == 0 || candidates.empty()) return {};
    NodeSet missing;
    for (NodeId c : candidates) {
        if (!space.contains(c)) missing.push_back(c);
    }
    if (!missing.empty()) space.build(skb, embedder, missing);
    const Vector q = embedder.embed_text(query_text);
    return top_n_by_cosine(q, candidates, n,
                           [&](NodeId v) { return space.vector_for(skb, embedder, v); });
}

}  // namespace afr
