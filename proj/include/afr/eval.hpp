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

#include "afr/pipeline.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace afr {

struct QueryMetrics {
    std::map<int, double> hit;     // m -> 0 or 1
    std::map<int, double> recall;  // m -> fraction of gold in top m
    double rr = 0.0;
    bool errored = false;
    bool skipped_graph = false;
};

QueryMetrics query_metrics(const std::vector<NodeId>& answers, const NodeSet& gold,
                           const std::vector<int>& ms);

struct MetricsReport {
    std::vector<int> ms;
    std::map<std::string, QueryMetrics> per_query;
    /// Means over evaluated queries, in percent.
    std::map<int, double> hit;
    std::map<int, double> recall;
    double mrr = 0.0;
    std::size_t processed = 0;
    std::size_t evaluated = 0;
    std::size_t excluded = 0;  // no gold labels
    std::size_t skipped_graph = 0;
    std::size_t errors = 0;
};

/// `results` and `queries` are matched by query id. Errored queries count
/// as complete misses.
MetricsReport compute_metrics(const std::vector<RankedAnswers>& results,
                              const std::vector<QueryRecord>& queries,
                              const std::vector<int>& ms = {1, 5, 20});

/// Reads queries.jsonl. Gold lists, when present, must be non-empty.
std::vector<QueryRecord> load_queries(const std::filesystem::path& file);

/// Answers all queries with up to `parallelism` workers; output order
/// follows the input.
std::vector<RankedAnswers> run_batch(const std::vector<QueryRecord>& queries,
                                     const PipelineConfig& cfg, PipelineContext& ctx,
                                     std::size_t parallelism);

void write_results_jsonl(const std::filesystem::path& file,
                         const std::vector<RankedAnswers>& results, bool detailed = false);

struct SpaceAssignment {
    SpaceVariant step4 = SpaceVariant::text_only;
    SpaceVariant step6 = SpaceVariant::text_only;
    SpaceVariant step7 = SpaceVariant::text_plus_relations;
};

/// Each empty axis keeps the base configuration's value.
struct AblationGrid {
    std::vector<StepSubset> steps;
    std::vector<double> alpha;
    std::vector<long long> l_max;
    std::vector<SpaceAssignment> spaces;
    std::vector<ParseMode> modes;
    std::vector<RerankerKind> rerankers;
    std::vector<std::vector<std::string>> concealed;

    /// Parses "name=v1,v2,..." and appends to that axis. Space assignments
    /// are written "step4/step6/step7", concealed sets "a|b".
    void add_axis(std::string_view spec);
    /// Cartesian product in a fixed axis order.
    std::vector<PipelineConfig> expand(const PipelineConfig& base) const;
};

struct AblationRow {
    PipelineConfig cfg;
    MetricsReport report;
};

std::vector<AblationRow> run_ablation(const AblationGrid& grid, const PipelineConfig& base,
                                      const std::vector<QueryRecord>& queries,
                                      PipelineContext& ctx, std::size_t parallelism);

void write_metrics_csv(const std::filesystem::path& file, const std::vector<AblationRow>& rows);

}  // namespace afr
