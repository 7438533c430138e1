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

#include "afr/rerank.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <regex>

namespace afr {

std::string_view to_string(RerankerKind k) {
    switch (k) {
        case RerankerKind::none: return "none";
        case RerankerKind::pointwise: return "pointwise";
        case RerankerKind::listwise: return "listwise";
        case RerankerKind::pairwise: return "pairwise";
    }
    return "?";
}

RerankerKind parse_reranker_kind(std::string_view s) {
    if (s == "none") return RerankerKind::none;
    if (s == "pointwise") return RerankerKind::pointwise;
    if (s == "listwise") return RerankerKind::listwise;
    if (s == "pairwise") return RerankerKind::pairwise;
    throw UsageError("unknown reranker '" + std::string(s) + "'");
}

namespace {

constexpr std::array<DetailLevel, 3> kLadder{DetailLevel::full, DetailLevel::reduced,
                                             DetailLevel::bare};

std::size_t level_index(DetailLevel d) { return static_cast<std::size_t>(d); }

// Descriptions go inside one-line prompt slots.
std::string flatten(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        if (c == '\n') {
            if (!out.empty()) out += "; ";
        } else {
            out.push_back(c);
        }
    }
    return out;
}

struct Described {
    NodeId node;
    int local_id = 0;
    std::string type;
    std::array<std::optional<std::string>, 3> text;

    const std::string& at(const Skb& skb, DetailLevel d, const NodeSet& anchors) {
        auto& slot = text[level_index(d)];
        if (!slot) slot = flatten(build_candidate_prompt_text(skb, node, d, anchors));
        return *slot;
    }
};

std::vector<Described> describe(const Skb& skb, const std::vector<NodeId>& prior) {
    std::vector<Described> out;
    for (std::size_t i = 0; i < prior.size(); ++i) {
        Described d;
        d.node = prior[i];
        d.local_id = static_cast<int>(i) + 1;
        d.type = skb.node(prior[i]).type;
        out.push_back(std::move(d));
    }
    return out;
}

std::vector<long long> integers_in(std::string_view text) {
    // Signed numbers and decimals are matched whole and skipped.
    static const std::regex re(R"(-?\d+(\.\d+)?)");
    std::vector<long long> out;
    const std::string s(text);
    for (auto it = std::sregex_iterator(s.begin(), s.end(), re); it != std::sregex_iterator(); ++it) {
        const std::string m = it->str();
        if (m.size() > 9 || m[0] == '-' || (*it)[1].matched) continue;
        out.push_back(std::stoll(m));
    }
    return out;
}

class Accounting {
public:
    explicit Accounting(const LlmSession& llm) : llm_(llm), start_(llm.accounting()) {}
    void finish(RerankOutcome& out) const {
        const auto& now = llm_.accounting();
        out.prompts_sent = now.prompts - start_.prompts;
        out.tokens_in = now.tokens_in - start_.tokens_in;
        out.tokens_out = now.tokens_out - start_.tokens_out;
    }

private:
    const LlmSession& llm_;
    LlmAccounting start_;
};

}  // namespace

std::string build_candidate_prompt_text(const Skb& skb, NodeId node, DetailLevel level,
                                        const NodeSet& anchors) {
    return render_node_text(skb, node, SpaceVariant::text_plus_relations, level, &anchors);
}

std::optional<double> parse_score(std::string_view response) {
    static const std::regex re(R"(\d+(?:\.\d+)?|\.\d+)");
    const std::string s(response);
    for (auto it = std::sregex_iterator(s.begin(), s.end(), re); it != std::sregex_iterator(); ++it) {
        double v = 0.0;
        if (parse_number(it->str(), v) && v >= 0.0 && v <= 1.0) return v;
    }
    return std::nullopt;
}

std::vector<int> parse_listwise(std::string_view response, int k, bool* usable) {
    std::vector<int> order;
    std::vector<bool> seen(static_cast<std::size_t>(k) + 1, false);
    for (long long v : integers_in(response)) {
        if (v < 1 || v > k || seen[static_cast<std::size_t>(v)]) continue;
        seen[static_cast<std::size_t>(v)] = true;
        order.push_back(static_cast<int>(v));
    }
    if (usable) *usable = !order.empty();
    for (int i = 1; i <= k; ++i) {
        if (!seen[static_cast<std::size_t>(i)]) order.push_back(i);
    }
    return order;
}

std::optional<int> parse_choice(std::string_view response, int a, int b) {
    for (long long v : integers_in(response)) {
        if (v == a || v == b) return static_cast<int>(v);
    }
    return std::nullopt;
}

RerankOutcome rerank_pointwise(const std::vector<NodeId>& prior, RerankContext& ctx) {
    RerankOutcome out;
    Accounting acc(ctx.llm);
    auto items = describe(ctx.skb, prior);
    std::vector<double> scores(items.size(), 0.0);
    for (std::size_t i = 0; i < items.size(); ++i) {
        auto& item = items[i];
        std::optional<std::string> prompt;
        for (DetailLevel level : kLadder) {
            std::string p = ctx.prompts.fill(PromptLibrary::kPointwise,
                                             {{"node_type", item.type},
                                              {"query", ctx.query},
                                              {"description", item.at(ctx.skb, level, ctx.anchors)}});
            if (ctx.llm.fits(p)) {
                ++out.degradations[level_index(level)];
                prompt = std::move(p);
                break;
            }
        }
        RerankExchange ex;
        ex.local_ids = {item.local_id};
        if (!prompt) {
            ex.failed = true;
            ++out.failures;
            spdlog::warn("pointwise: candidate {} does not fit the token budget", item.local_id);
            out.exchanges.push_back(std::move(ex));
            continue;
        }
        ex.prompt = *prompt;
        try {
            ex.response = ctx.llm.complete(*prompt);
            scores[i] = parse_score(ex.response).value_or(0.0);
        } catch (const ProviderError& e) {
            ex.failed = true;
            ++out.failures;
            spdlog::warn("pointwise: candidate {} failed: {}", item.local_id, e.what());
        }
        out.exchanges.push_back(std::move(ex));
    }
    std::vector<std::size_t> idx(items.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    for (auto i : idx) out.order.push_back(prior[i]);
    acc.finish(out);
    return out;
}

RerankOutcome rerank_listwise(const std::vector<NodeId>& prior, RerankContext& ctx) {
    RerankOutcome out;
    Accounting acc(ctx.llm);
    if (prior.empty()) return out;
    auto items = describe(ctx.skb, prior);
    std::optional<std::string> prompt;
    for (DetailLevel level : kLadder) {
        std::string rows;
        for (auto& item : items) {
            rows += "\n" + std::to_string(item.local_id) + ", " + item.type + ", " +
                    item.at(ctx.skb, level, ctx.anchors);
        }
        rows += "\n";
        std::string p = ctx.prompts.fill(PromptLibrary::kListwise,
                                         {{"possible_answers", rows}, {"query", ctx.query}});
        if (ctx.llm.fits(p)) {
            out.degradations[level_index(level)] += items.size();
            prompt = std::move(p);
            break;
        }
    }
    if (!prompt) {
        // The bare prompt is the smallest one; report its size.
        std::string rows;
        for (auto& item : items) rows += item.at(ctx.skb, DetailLevel::bare, ctx.anchors);
        throw BudgetExceeded(ctx.llm.estimate(rows), ctx.llm.token_budget());
    }
    RerankExchange ex;
    ex.prompt = *prompt;
    for (const auto& item : items) ex.local_ids.push_back(item.local_id);
    try {
        ex.response = ctx.llm.complete(*prompt);
    } catch (const ProviderError& e) {
        ex.failed = true;
        ++out.failures;
        spdlog::warn("listwise: request failed: {}", e.what());
    }
    bool usable = false;
    const auto order = parse_listwise(ex.response, static_cast<int>(items.size()), &usable);
    out.flagged = !usable;
    for (int id : order) out.order.push_back(prior[static_cast<std::size_t>(id - 1)]);
    out.exchanges.push_back(std::move(ex));
    acc.finish(out);
    return out;
}

namespace {

using LaterWins = std::function<bool(std::size_t, std::size_t)>;

// True when x ranks ahead of y.
bool ahead(std::size_t x, std::size_t y, const LaterWins& later_wins) {
    return x < y ? !later_wins(x, y) : later_wins(y, x);
}

// Sorts worst first.
std::vector<std::size_t> merge_insertion(const std::vector<std::size_t>& xs,
                                         const LaterWins& later_wins) {
    const std::size_t n = xs.size();
    if (n <= 1) return xs;

    // Pair up neighbours; the loser of each pair waits for insertion.
    std::map<std::size_t, std::size_t> loser_of;
    std::vector<std::size_t> winners;
    for (std::size_t i = 0; i + 1 < n; i += 2) {
        std::size_t w = xs[i];
        std::size_t l = xs[i + 1];
        if (ahead(l, w, later_wins)) std::swap(w, l);
        loser_of[w] = l;
        winners.push_back(w);
    }
    const std::vector<std::size_t> chain = merge_insertion(winners, later_wins);

    // pending[j] sorts before bound[j]; the odd element has no bound.
    std::vector<std::size_t> pending;
    std::vector<std::optional<std::size_t>> bound;
    for (std::size_t w : chain) {
        pending.push_back(loser_of.at(w));
        bound.emplace_back(w);
    }
    if (n % 2 == 1) {
        pending.push_back(xs.back());
        bound.emplace_back(std::nullopt);
    }

    std::vector<std::size_t> main_chain{pending.front()};
    main_chain.insert(main_chain.end(), chain.begin(), chain.end());

    // Insert in Jacobsthal groups, each group from its highest index down.
    std::vector<std::size_t> order;
    std::size_t done = 1;
    for (long long k = 2; done < pending.size(); ++k) {
        const long long t = ((1LL << k) + (k % 2 == 0 ? -1 : 1)) / 3;
        const std::size_t top = std::min<std::size_t>(static_cast<std::size_t>(t), pending.size());
        for (std::size_t j = top; j > done; --j) order.push_back(j - 1);
        done = std::max(done, top);
    }
    for (std::size_t j : order) {
        const std::size_t x = pending[j];
        std::size_t hi = main_chain.size();
        if (bound[j]) {
            hi = static_cast<std::size_t>(
                std::find(main_chain.begin(), main_chain.end(), *bound[j]) - main_chain.begin());
        }
        std::size_t lo = 0;
        while (lo < hi) {
            const std::size_t mid = (lo + hi) / 2;
            if (ahead(main_chain[mid], x, later_wins)) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        main_chain.insert(main_chain.begin() + static_cast<std::ptrdiff_t>(lo), x);
    }
    return main_chain;
}

}  // namespace

std::vector<std::size_t> merge_insertion_order(std::size_t n, const LaterWins& later_wins) {
    std::vector<std::size_t> xs(n);
    for (std::size_t i = 0; i < n; ++i) xs[i] = i;
    auto order = merge_insertion(xs, later_wins);
    std::reverse(order.begin(), order.end());
    return order;
}

RerankOutcome rerank_pairwise(const std::vector<NodeId>& prior, RerankContext& ctx) {
    RerankOutcome out;
    Accounting acc(ctx.llm);
    auto items = describe(ctx.skb, prior);

    // True when the later-prior item wins. Unusable answers favor the
    // earlier-prior item, which is always presented first.
    auto later_wins = [&](std::size_t a, std::size_t b) {
        Described& first = items[a];
        Described& second = items[b];
        std::size_t li = 0;
        std::size_t lc = 0;
        auto build = [&] {
            return ctx.prompts.fill(
                PromptLibrary::kPairwise,
                {{"node1_id", std::to_string(first.local_id)},
                 {"node_type_1", first.type},
                 {"doc_info_1", first.at(ctx.skb, kLadder[li], ctx.anchors)},
                 {"node2_id", std::to_string(second.local_id)},
                 {"node_type_2", second.type},
                 {"doc_info_2", second.at(ctx.skb, kLadder[lc], ctx.anchors)},
                 {"query", ctx.query}});
        };
        std::string prompt = build();
        while (!ctx.llm.fits(prompt) && (li < 2 || lc < 2)) {
            // Shrink the longer description first.
            const auto& di = first.at(ctx.skb, kLadder[li], ctx.anchors);
            const auto& dc = second.at(ctx.skb, kLadder[lc], ctx.anchors);
            if (lc == 2 || (li < 2 && di.size() >= dc.size())) {
                ++li;
            } else {
                ++lc;
            }
            prompt = build();
        }
        RerankExchange ex;
        ex.local_ids = {first.local_id, second.local_id};
        bool result = false;
        if (!ctx.llm.fits(prompt)) {
            ex.failed = true;
            ++out.failures;
        } else {
            ++out.degradations[li];
            ++out.degradations[lc];
            ex.prompt = prompt;
            try {
                ex.response = ctx.llm.complete(prompt);
                result = parse_choice(ex.response, first.local_id, second.local_id) ==
                         second.local_id;
            } catch (const ProviderError& e) {
                ex.failed = true;
                ++out.failures;
                spdlog::warn("pairwise: comparison {} vs {} failed: {}", first.local_id,
                             second.local_id, e.what());
            }
        }
        out.exchanges.push_back(std::move(ex));
        return result;
    };

    const auto sorted = merge_insertion_order(items.size(), later_wins);
    for (auto i : sorted) out.order.push_back(prior[i]);
    acc.finish(out);
    return out;
}

RerankOutcome rerank(RerankerKind kind, const std::vector<NodeId>& prior, RerankContext& ctx) {
    switch (kind) {
        case RerankerKind::pointwise: return rerank_pointwise(prior, ctx);
        case RerankerKind::listwise: return rerank_listwise(prior, ctx);
        case RerankerKind::pairwise: return rerank_pairwise(prior, ctx);
        case RerankerKind::none: break;
    }
    RerankOutcome out;
    out.order = prior;
    return out;
}

}  // namespace afr
