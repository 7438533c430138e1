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

#include <filesystem>

namespace afr {

struct ConversionSummary {
    std::size_t nodes = 0;
    std::size_t edges = 0;
    std::size_t documents = 0;
};

/// Converts a JSON export of a STaRK knowledge base into nodes.jsonl and
/// edges.jsonl. The input directory holds:
///   node_types.json      [type_index per node]
///   node_type_dict.json  {"type_index": "type name"}
///   node_info.json       {"node_id": {field: value}}  (optional)
///   edge_index.json      [[heads...], [tails...]]
///   edge_types.json      [type_index per edge]
///   edge_type_dict.json  {"type_index": "edge name"}
/// A "document" field becomes the node document; otherwise the first of
/// abstract, summary, details, description and text does.
ConversionSummary convert_stark(const std::filesystem::path& in_dir,
                                const std::filesystem::path& out_dir);

}  // namespace afr
