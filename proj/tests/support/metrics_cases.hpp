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

// Twelve queries with hand-computed metrics. One has no gold labels and one
// errored, so eleven are evaluated.

#include "afr/eval.hpp"

#include <optional>
#include <string>
#include <vector>

namespace testing_support {

struct MetricsCase {
    std::string id;
    std::vector<std::uint64_t> answers;
    std::optional<std::vector<std::uint64_t>> gold;
    bool errored = false;
};

inline std::vector<MetricsCase> metrics_cases() {
    std::vector<std::uint64_t> long_list;
    for (std::uint64_t i = 100; i < 125; ++i) long_list.push_back(i);
    return {
        {"a", {1, 2, 3}, std::vector<std::uint64_t>{1}},
        {"b", {2, 1, 3}, std::vector<std::uint64_t>{1}},
        {"c", {5, 6, 7, 8, 9, 1}, std::vector<std::uint64_t>{1}},
        {"d", {5, 6}, std::vector<std::uint64_t>{1}},
        {"e", {1, 2}, std::vector<std::uint64_t>{1, 2}},
        {"f", {3, 1, 4, 2}, std::vector<std::uint64_t>{1, 2, 7}},
        {"g", long_list, std::vector<std::uint64_t>{121}},
        {"h", {1}, std::vector<std::uint64_t>{1}, true},
        {"i", {1}, std::nullopt},
        {"j", {}, std::vector<std::uint64_t>{3}},
        {"k", {4, 3}, std::vector<std::uint64_t>{3, 4}},
        {"l", {9, 8, 7, 6, 5, 4, 3, 2, 1}, std::vector<std::uint64_t>{2}},
    };
}

// Per query (hit@1, hit@5, hit@20, recall@20, rr):
//   a 1 1 1 1 1        b 0 1 1 1 1/2      c 0 0 1 1 1/6      d 0 0 0 0 0
//   e 1 1 1 1 1        f 0 1 1 2/3 1/2    g 0 0 0 0 1/22     h errored, 0
//   j 0 0 0 0 0        k 1 1 1 1 1        l 0 0 1 1 1/8
// The sum of rr is 4 + 1/6 + 1/22 + 1/8 = 1145/264.
struct MetricsExpectation {
    double hit1 = 300.0 / 11.0;
    double hit5 = 500.0 / 11.0;
    double hit20 = 700.0 / 11.0;
    double recall20 = 2000.0 / 33.0;
    double mrr = 114500.0 / 2904.0;
    std::size_t processed = 12;
    std::size_t evaluated = 11;
    std::size_t excluded = 1;
    std::size_t errors = 1;
};

inline void build_metrics_inputs(std::vector<afr::RankedAnswers>& results,
                                 std::vector<afr::QueryRecord>& queries) {
    for (const auto& c : metrics_cases()) {
        afr::RankedAnswers r;
        r.query_id = c.id;
        for (auto v : c.answers) r.items.push_back({afr::NodeId{v}, afr::Provenance::vector, 0.0, {}});
        if (c.errored) r.error = "provider failed";
        results.push_back(std::move(r));
        afr::QueryRecord q;
        q.id = c.id;
        q.text = "question " + c.id;
        if (c.gold) {
            afr::NodeSet g;
            for (auto v : *c.gold) g.push_back(afr::NodeId{v});
            afr::sort_unique(g);
            q.gold = g;
        }
        queries.push_back(std::move(q));
    }
}

}  // namespace testing_support
