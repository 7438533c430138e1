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

#include <compare>
#include <cstdint>
#include <functional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace afr {

/// Identifier of a node inside one knowledge base.
struct NodeId {
    std::uint64_t value = 0;

    constexpr NodeId() = default;
    constexpr explicit NodeId(std::uint64_t v) : value(v) {}

    friend constexpr auto operator<=>(NodeId, NodeId) = default;
};

inline std::ostream& operator<<(std::ostream& os, NodeId id) { return os << id.value; }

/// Sorted, duplicate-free list of node ids. All set algebra in the engine
/// works on this representation so results are deterministic.
using NodeSet = std::vector<NodeId>;

// Error hierarchy. The CLI maps each family onto an exit code.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class UsageError : public Error {
public:
    using Error::Error;
};

class DataError : public Error {
public:
    using Error::Error;
};

class ProviderError : public Error {
public:
    using Error::Error;
};

/// Prompt would not fit into the provider's context window. Never retried.
class BudgetExceeded : public ProviderError {
public:
    BudgetExceeded(std::size_t estimated, std::size_t budget);

    std::size_t estimated_tokens() const noexcept { return estimated_; }
    std::size_t budget() const noexcept { return budget_; }

private:
    std::size_t estimated_;
    std::size_t budget_;
};

/// 64-bit FNV-1a.
constexpr std::uint64_t fnv1a64(std::string_view s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Rounds x to the nearest integer, halves away from zero for positive x.
long long round_half_up(double x);

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);

/// Canonical spelling for label comparison: lower case, runs of spaces and
/// underscores collapsed to one underscore.
std::string label_key(std::string_view label);

/// Attribute names are lower-cased and spaces become underscores.
std::string normalize_attr_name(std::string_view name);

bool iequals(std::string_view a, std::string_view b);
bool icontains(std::string_view haystack, std::string_view needle);

/// Parses the whole string as a finite number.
bool parse_number(std::string_view s, double& out);

/// True iff s has exactly the shape YYYY-MM-DD.
bool is_iso_date(std::string_view s);

void sort_unique(NodeSet& s);
NodeSet set_intersection(const NodeSet& a, const NodeSet& b);
bool set_contains(const NodeSet& s, NodeId id);

}  // namespace afr

template <>
struct std::hash<afr::NodeId> {
    std::size_t operator()(afr::NodeId id) const noexcept {
        return std::hash<std::uint64_t>{}(id.value);
    }
};
