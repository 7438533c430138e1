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

#include "afr/stark.hpp"

#include "afr/common.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <map>
#include <optional>

namespace afr {

namespace {

using nlohmann::json;

json read_json(const std::filesystem::path& file, bool required = true) {
    std::ifstream in(file);
    if (!in) {
        if (!required) return nullptr;
        throw DataError("cannot open " + file.string());
    }
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw DataError(file.string() + ": " + e.what());
    }
}

std::map<long long, std::string> read_dict(const std::filesystem::path& file) {
    const json j = read_json(file);
    if (!j.is_object()) throw DataError(file.string() + ": expected an object");
    std::map<long long, std::string> out;
    for (const auto& [k, v] : j.items()) {
        double idx = 0;
        if (!parse_number(k, idx) || !v.is_string()) {
            throw DataError(file.string() + ": entries must map integer keys to names");
        }
        out[static_cast<long long>(idx)] = v.get<std::string>();
    }
    return out;
}

std::vector<long long> read_int_list(const json& j, const std::string& what) {
    if (!j.is_array()) throw DataError(what + ": expected an array");
    std::vector<long long> out;
    out.reserve(j.size());
    for (const auto& v : j) {
        if (!v.is_number_integer()) throw DataError(what + ": expected integers");
        out.push_back(v.get<long long>());
    }
    return out;
}

// Scalars stay as they are, lists of scalars are joined, anything else is dropped.
std::optional<json> attribute_value(const json& v) {
    if (v.is_string() || v.is_number()) return std::optional<json>(std::in_place, v);
    if (v.is_boolean()) return json(v.get<bool>() ? "true" : "false");
    if (v.is_array()) {
        std::string joined;
        for (const auto& item : v) {
            std::string s;
            if (item.is_string()) {
                s = item.get<std::string>();
            } else if (item.is_number()) {
                s = item.dump();
            } else {
                continue;
            }
            if (!joined.empty()) joined += "; ";
            joined += s;
        }
        if (!joined.empty()) return json(joined);
    }
    return std::nullopt;
}

}  // namespace

ConversionSummary convert_stark(const std::filesystem::path& in_dir,
                                const std::filesystem::path& out_dir) {
    const auto node_types = read_int_list(read_json(in_dir / "node_types.json"), "node_types.json");
    const auto node_type_names = read_dict(in_dir / "node_type_dict.json");
    const auto edge_types = read_int_list(read_json(in_dir / "edge_types.json"), "edge_types.json");
    const auto edge_type_names = read_dict(in_dir / "edge_type_dict.json");
    const json edge_index = read_json(in_dir / "edge_index.json");
    const json node_info = read_json(in_dir / "node_info.json", false);

    if (!edge_index.is_array() || edge_index.size() != 2) {
        throw DataError("edge_index.json: expected [[heads...], [tails...]]");
    }
    const auto heads = read_int_list(edge_index[0], "edge_index.json");
    const auto tails = read_int_list(edge_index[1], "edge_index.json");
    if (heads.size() != tails.size() || heads.size() != edge_types.size()) {
        throw DataError("edge_index.json and edge_types.json disagree on the edge count");
    }

    std::filesystem::create_directories(out_dir);
    ConversionSummary summary;
    std::ofstream nodes(out_dir / "nodes.jsonl", std::ios::binary | std::ios::trunc);
    if (!nodes) throw DataError("cannot write " + (out_dir / "nodes.jsonl").string());
    static const char* kDocFields[] = {"abstract", "summary", "details", "description", "text"};
    for (std::size_t id = 0; id < node_types.size(); ++id) {
        auto type_it = node_type_names.find(node_types[id]);
        if (type_it == node_type_names.end()) {
            throw DataError("node " + std::to_string(id) + " has unknown type index " +
                            std::to_string(node_types[id]));
        }
        json attributes = json::object();
        json document = nullptr;
        const json* info = nullptr;
        if (node_info.is_object()) {
            auto it = node_info.find(std::to_string(id));
            if (it != node_info.end() && it->is_object()) info = &*it;
        }
        if (info) {
            std::string doc_key;
            if (info->contains("document") && (*info)["document"].is_string()) {
                doc_key = "document";
            } else {
                for (const char* f : kDocFields) {
                    if (info->contains(f) && (*info)[f].is_string()) {
                        doc_key = f;
                        break;
                    }
                }
            }
            if (!doc_key.empty()) document = (*info)[doc_key];
            for (const auto& [k, v] : info->items()) {
                if (k == doc_key || k == "type") continue;
                if (auto value = attribute_value(v)) attributes[k] = *value;
            }
        }
        if (!document.is_null()) ++summary.documents;
        nodes << json{{"id", id}, {"type", type_it->second}, {"attributes", attributes},
                      {"document", document}}
                     .dump()
              << '\n';
        ++summary.nodes;
    }

    std::ofstream edges(out_dir / "edges.jsonl", std::ios::binary | std::ios::trunc);
    if (!edges) throw DataError("cannot write " + (out_dir / "edges.jsonl").string());
    for (std::size_t i = 0; i < heads.size(); ++i) {
        auto it = edge_type_names.find(edge_types[i]);
        if (it == edge_type_names.end()) {
            throw DataError("edge " + std::to_string(i) + " has unknown type index " +
                            std::to_string(edge_types[i]));
        }
        edges << json{{"head", heads[i]}, {"type", it->second}, {"tail", tails[i]}}.dump() << '\n';
        ++summary.edges;
    }
    return summary;
}

}  // namespace afr
