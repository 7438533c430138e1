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

#include "afr/eval.hpp"

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <thread>

namespace afr {

QueryMetrics query_metrics(const std::vector<NodeId>& answers, const NodeSet& gold,
                           const std::vector<int>& ms) {
    QueryMetrics m;
    std::size_t first_hit = 0;  // 1-based, 0 = none
    for (std::size_t i = 0; i < answers.size(); ++i) {
        if (set_contains(gold, answers[i])) {
            first_hit = i + 1;
            break;
        }
    }
    m.rr = first_hit ? 1.0 / static_cast<double>(first_hit) : 0.0;
    for (int cut : ms) {
        std::size_t found = 0;
        NodeSet seen;
        for (std::size_t i = 0; i < answers.size() && i < static_cast<std::size_t>(cut); ++i) {
            if (set_contains(gold, answers[i]) && !set_contains(seen, answers[i])) {
                seen.insert(std::lower_bound(seen.begin(), seen.end(), answers[i]), answers[i]);
                ++found;
            }
        }
        m.hit[cut] = found > 0 ? 1.0 : 0.0;
        m.recall[cut] = gold.empty() ? 0.0 : static_cast<double>(found) / static_cast<double>(gold.size());
    }
    return m;
}

MetricsReport compute_metrics(const std::vector<RankedAnswers>& results,
                              const std::vector<QueryRecord>& queries, const std::vector<int>& ms) {
    MetricsReport rep;
    rep.ms = ms;
    std::map<std::string, const RankedAnswers*> by_id;
    for (const auto& r : results) by_id[r.query_id] = &r;
    for (const auto& q : queries) {
        auto it = by_id.find(q.id);
        if (it == by_id.end()) continue;
        ++rep.processed;
        const RankedAnswers& r = *it->second;
        if (r.error) ++rep.errors;
        if (r.trace.skipped_graph) ++rep.skipped_graph;
        if (!q.gold || q.gold->empty()) {
            ++rep.excluded;
            continue;
        }
        QueryMetrics m = query_metrics(r.error ? std::vector<NodeId>{} : r.nodes(), *q.gold, ms);
        m.errored = r.error.has_value();
        m.skipped_graph = r.trace.skipped_graph;
        rep.per_query[q.id] = std::move(m);
    }
    rep.evaluated = rep.per_query.size();
    for (int cut : ms) {
        rep.hit[cut] = 0.0;
        rep.recall[cut] = 0.0;
    }
    if (rep.evaluated == 0) return rep;
    const double n = static_cast<double>(rep.evaluated);
    for (const auto& [id, m] : rep.per_query) {
        for (int cut : ms) {
            rep.hit[cut] += m.hit.at(cut);
            rep.recall[cut] += m.recall.at(cut);
        }
        rep.mrr += m.rr;
    }
    for (int cut : ms) {
        rep.hit[cut] = 100.0 * rep.hit[cut] / n;
        rep.recall[cut] = 100.0 * rep.recall[cut] / n;
    }
    rep.mrr = 100.0 * rep.mrr / n;
    return rep;
}

std::vector<QueryRecord> load_queries(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw DataError("cannot open " + file.string());
    std::vector<QueryRecord> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const std::string where = file.string() + ":" + std::to_string(lineno) + ": ";
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw DataError(where + e.what());
        }
        if (!j.is_object() || !j.contains("id") || !j.contains("query") || !j["query"].is_string()) {
            throw DataError(where + "expected {\"id\", \"query\"}");
        }
        QueryRecord q;
        q.id = j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump();
        q.text = j["query"].get<std::string>();
        if (j.contains("answer_ids") && !j["answer_ids"].is_null()) {
            if (!j["answer_ids"].is_array()) throw DataError(where + "answer_ids must be an array");
            NodeSet gold;
            for (const auto& a : j["answer_ids"]) {
                if (!a.is_number_unsigned()) throw DataError(where + "answer ids must be non-negative integers");
                gold.emplace_back(a.get<std::uint64_t>());
            }
            if (gold.empty()) throw DataError(where + "answer_ids is empty");
            sort_unique(gold);
            q.gold = std::move(gold);
        }
        out.push_back(std::move(q));
    }
    return out;
}

std::vector<RankedAnswers> run_batch(const std::vector<QueryRecord>& queries,
                                     const PipelineConfig& cfg, PipelineContext& ctx,
                                     std::size_t parallelism) {
    cfg.validate();
    std::vector<RankedAnswers> results(queries.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < queries.size();) {
            results[i] = answer_query(queries[i], cfg, ctx);
        }
    };
    const std::size_t n = std::max<std::size_t>(1, std::min(parallelism, queries.size()));
    if (n == 1) {
        worker();
        return results;
    }
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex failure_mu;
    for (std::size_t t = 0; t < n; ++t) {
        pool.emplace_back([&] {
            try {
                worker();
            } catch (...) {
                std::lock_guard lock(failure_mu);
                if (!failure) failure = std::current_exception();
                next = queries.size();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
    return results;
}

void write_results_jsonl(const std::filesystem::path& file,
                         const std::vector<RankedAnswers>& results, bool detailed) {
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + file.string());
    for (const auto& r : results) out << to_json(r, detailed).dump() << '\n';
}

namespace {

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos
                                                                           : pos - start)));
        if (pos == std::string_view::npos) return out;
        start = pos + 1;
    }
}

double parse_double(const std::string& s, std::string_view axis) {
    double v = 0.0;
    if (!parse_number(s, v)) throw UsageError("bad value '" + s + "' for axis " + std::string(axis));
    return v;
}

std::string fmt1(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", v);
    return buf;
}

std::string fmt_g(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

}  // namespace

void AblationGrid::add_axis(std::string_view spec) {
    const auto eq = spec.find('=');
    if (eq == std::string_view::npos) throw UsageError("axis must look like name=v1,v2");
    const std::string name = trim(spec.substr(0, eq));
    const auto values = split(spec.substr(eq + 1), ',');
    for (const auto& v : values) {
        if (v.empty() && name != "concealed") throw UsageError("empty value in axis " + name);
        if (name == "steps") {
            steps.push_back(parse_step_subset(v));
        } else if (name == "alpha") {
            alpha.push_back(parse_double(v, name));
        } else if (name == "l_max") {
            const double d = parse_double(v, name);
            if (d < 1 || d != static_cast<double>(static_cast<long long>(d))) {
                throw UsageError("l_max values must be positive integers");
            }
            l_max.push_back(static_cast<long long>(d));
        } else if (name == "spaces") {
            const auto parts = split(v, '/');
            if (parts.size() != 3) throw UsageError("spaces values look like step4/step6/step7");
            spaces.push_back({parse_space_variant(parts[0]), parse_space_variant(parts[1]),
                              parse_space_variant(parts[2])});
        } else if (name == "mode") {
            modes.push_back(parse_mode_from(v));
        } else if (name == "reranker") {
            rerankers.push_back(parse_reranker_kind(v));
        } else if (name == "concealed") {
            std::vector<std::string> set;
            if (!v.empty()) set = split(v, '|');
            concealed.push_back(std::move(set));
        } else {
            throw UsageError("unknown ablation axis '" + name + "'");
        }
    }
}

std::vector<PipelineConfig> AblationGrid::expand(const PipelineConfig& base) const {
    std::vector<PipelineConfig> cells{base};
    auto axis = [&cells](const auto& values, auto apply) {
        if (values.empty()) return;
        std::vector<PipelineConfig> next;
        for (const auto& c : cells) {
            for (const auto& v : values) {
                PipelineConfig copy = c;
                apply(copy, v);
                next.push_back(std::move(copy));
            }
        }
        cells = std::move(next);
    };
    axis(steps, [](PipelineConfig& c, StepSubset v) { c.steps = v; });
    axis(alpha, [](PipelineConfig& c, double v) { c.alpha = v; });
    axis(l_max, [](PipelineConfig& c, long long v) { c.l_max = v; });
    axis(spaces, [](PipelineConfig& c, const SpaceAssignment& v) {
        c.space_step4 = v.step4;
        c.space_step6 = v.step6;
        c.space_step7 = v.step7;
    });
    axis(modes, [](PipelineConfig& c, ParseMode v) { c.mode = v; });
    axis(rerankers, [](PipelineConfig& c, RerankerKind v) { c.reranker = v; });
    axis(concealed, [](PipelineConfig& c, const std::vector<std::string>& v) {
        c.concealed_node_types = v;
    });
    return cells;
}

std::vector<AblationRow> run_ablation(const AblationGrid& grid, const PipelineConfig& base,
                                      const std::vector<QueryRecord>& queries,
                                      PipelineContext& ctx, std::size_t parallelism) {
    std::vector<AblationRow> rows;
    for (const auto& cfg : grid.expand(base)) {
        cfg.validate();
        spdlog::info("ablation cell steps={} alpha={} l_max={} reranker={}", to_string(cfg.steps),
                     cfg.alpha, cfg.l_max, to_string(cfg.reranker));
        const auto results = run_batch(queries, cfg, ctx, parallelism);
        rows.push_back({cfg, compute_metrics(results, queries)});
    }
    return rows;
}

void write_metrics_csv(const std::filesystem::path& file, const std::vector<AblationRow>& rows) {
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + file.string());
    out << "steps,alpha,l_max,space_step4,space_step6,space_step7,mode,reranker,concealed,"
           "hit@1,hit@5,hit@20,recall@20,mrr,queries,errors\n";
    for (const auto& row : rows) {
        const auto& c = row.cfg;
        std::string concealed;
        for (const auto& t : c.concealed_node_types) concealed += (concealed.empty() ? "" : "|") + t;
        const auto& r = row.report;
        auto metric = [](const std::map<int, double>& m, int cut) {
            auto it = m.find(cut);
            return it == m.end() ? std::string() : fmt1(it->second);
        };
        out << to_string(c.steps) << ',' << fmt_g(c.alpha) << ',' << c.l_max << ','
            << to_string(c.space_step4) << ',' << to_string(c.space_step6) << ','
            << to_string(c.space_step7) << ',' << to_string(c.mode) << ','
            << to_string(c.reranker) << ',' << concealed << ',' << metric(r.hit, 1) << ','
            << metric(r.hit, 5) << ',' << metric(r.hit, 20) << ',' << metric(r.recall, 20) << ','
            << fmt1(r.mrr) << ',' << r.evaluated << ',' << r.errors << '\n';
    }
}

}  // namespace afr
