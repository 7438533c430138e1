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

#include "afr/cli.hpp"

#include "afr/config.hpp"
#include "afr/eval.hpp"
#include "afr/stark.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cmath>
#include <fstream>

namespace afr {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Options {
    std::string config;
    std::string skb;
    std::string queries;
    std::string out;
    std::size_t parallelism = 0;
    bool dry_run = false;
    bool trace = false;
    int verbose = 0;

    std::optional<long long> k;
    std::optional<long long> l_max;
    std::optional<double> alpha;
    std::string mode;
    std::string reranker;
    std::string steps;

    std::string question;
    std::string variant = "all";
    std::vector<std::string> axes;
    std::string stark_in;
};

void add_common(CLI::App* cmd, Options& o) {
    cmd->add_option("--config", o.config, "JSON configuration file");
    cmd->add_option("--skb", o.skb, "Directory holding nodes.jsonl and edges.jsonl");
}

void add_pipeline_flags(CLI::App* cmd, Options& o) {
    cmd->add_option("--k", o.k, "Answers to return");
    cmd->add_option("--l-max", o.l_max, "Candidate cap per constant");
    cmd->add_option("--alpha", o.alpha, "Share of answers taken from the graph strand");
    cmd->add_option("--mode", o.mode, "strict_nodes, strict_edges, strict_both or lenient");
    cmd->add_option("--reranker", o.reranker, "none, pointwise, listwise or pairwise");
    cmd->add_option("--steps", o.steps, "Step subset: 1+7, 1-5, 1-6, 1-7 or 1-8");
    cmd->add_option("--parallelism", o.parallelism, "Concurrent queries");
    cmd->add_flag("--dry-run", o.dry_run, "Print the resolved configuration and planned calls");
    cmd->add_flag("--trace", o.trace, "Include detailed traces");
}

AppConfig resolve(const Options& o) {
    AppConfig cfg = o.config.empty() ? AppConfig::from_json(json::object()) : AppConfig::load(o.config);
    auto& p = cfg.pipeline;
    if (!o.skb.empty()) cfg.skb = o.skb;
    if (!o.queries.empty()) cfg.queries = o.queries;
    if (!o.out.empty()) cfg.out = o.out;
    if (o.parallelism) cfg.parallelism = o.parallelism;
    if (o.k) p.k = *o.k;
    if (o.l_max) p.l_max = *o.l_max;
    if (o.alpha) p.alpha = *o.alpha;
    if (!o.mode.empty()) p.mode = parse_mode_from(o.mode);
    if (!o.reranker.empty()) p.reranker = parse_reranker_kind(o.reranker);
    if (!o.steps.empty()) p.steps = parse_step_subset(o.steps);
    if (o.trace) p.detailed_trace = true;
    p.validate();
    return cfg;
}

Skb load_skb(const AppConfig& cfg) {
    if (cfg.skb.empty()) throw UsageError("no SKB directory given (--skb or config \"skb\")");
    return Skb::load_dir(cfg.skb);
}

std::string provider_id_of(const AppConfig& cfg) {
    if (cfg.embedding.provider == "hash") return HashEmbeddingProvider(cfg.embedding.dim).id();
    return "http:" + cfg.embedding.endpoint.model;
}

std::size_t pairwise_bound(long long k) {
    std::size_t total = 0;
    for (long long i = 1; i <= k; ++i) {
        total += static_cast<std::size_t>(std::ceil(std::log2(3.0 * static_cast<double>(i) / 4.0)));
    }
    return total;
}

json planned_calls(const AppConfig& cfg, const Skb& skb, std::size_t queries) {
    const auto& p = cfg.pipeline;
    std::size_t chat_per_query = 1;
    if (p.steps != StepSubset::vss_only) ++chat_per_query;
    std::size_t rerank = 0;
    if (p.steps == StepSubset::full) {
        switch (p.reranker) {
            case RerankerKind::pointwise: rerank = static_cast<std::size_t>(p.k); break;
            case RerankerKind::listwise: rerank = 1; break;
            case RerankerKind::pairwise: rerank = pairwise_bound(p.k); break;
            case RerankerKind::none: break;
        }
    }
    SpaceSet spaces = load_spaces(cfg, provider_id_of(cfg));
    json missing = json::object();
    for (auto v : {SpaceVariant::text_only, SpaceVariant::text_plus_relations}) {
        std::size_t n = 0;
        for (NodeId id : skb.all_nodes()) {
            if (!spaces.get(v).contains(id)) ++n;
        }
        missing[std::string(to_string(v))] = n;
    }
    return {{"queries", queries},
            {"chat_prompts_per_query", chat_per_query + rerank},
            {"chat_prompts_total", (chat_per_query + rerank) * queries},
            {"rerank_prompts_per_query_max", rerank},
            {"embedding_texts_max",
             {{"queries", queries}, {"node_vectors_missing", missing}}}};
}

void print_answers(std::ostream& out, const Skb& skb, const RankedAnswers& r) {
    for (std::size_t i = 0; i < r.items.size(); ++i) {
        const auto& it = r.items[i];
        const Node& n = skb.node(it.node);
        out << (i + 1) << '\t' << it.node.value << '\t' << to_string(it.provenance) << '\t'
            << n.type << '\t' << n.display_name() << '\n';
    }
}

int cmd_ingest(const Options& o, std::ostream& out) {
    AppConfig cfg = resolve(o);
    const Skb skb = load_skb(cfg);
    out << "nodes: " << skb.node_count() << "\nedges: " << skb.edge_count() << "\n";
    out << "node types:\n";
    for (const auto& t : skb.node_types()) out << "  " << t << "\t" << skb.nodes_of_type(t).size() << "\n";
    out << "edge types:\n";
    for (const auto& e : skb.edge_types()) {
        out << "  " << e << "\t" << skb.edges_of_type(e).size() << "\t"
            << to_string(skb.cardinality(e)) << "\n";
    }
    return kExitOk;
}

int cmd_embed(const Options& o, std::ostream& out) {
    AppConfig cfg = resolve(o);
    const Skb skb = load_skb(cfg);
    const fs::path dir = cfg.out.empty() ? cfg.resolved_space_dir() : cfg.out;
    std::vector<SpaceVariant> variants;
    if (o.variant == "all") {
        variants = {SpaceVariant::text_only, SpaceVariant::text_plus_relations};
    } else {
        variants = {parse_space_variant(o.variant)};
    }
    if (o.dry_run) {
        out << cfg.to_json().dump(2) << "\n";
        out << json{{"space_dir", dir.string()},
                    {"planned", planned_calls(cfg, skb, 0)["embedding_texts_max"]}}
                   .dump(2)
            << "\n";
        return kExitOk;
    }
    Runtime rt = make_runtime(cfg);
    fs::create_directories(dir);
    SpaceSet spaces = load_spaces(cfg, rt.embedder->provider_id());
    for (auto v : variants) {
        auto& space = spaces.get(v);
        const std::size_t rebuilt = space.build(skb, *rt.embedder);
        space.save(space_file(dir, v));
        out << to_string(v) << ": " << space.size() << " vectors, " << rebuilt << " recomputed\n";
    }
    return kExitOk;
}

int cmd_query(const Options& o, std::ostream& out) {
    AppConfig cfg = resolve(o);
    const Skb skb = load_skb(cfg);
    if (o.dry_run) {
        out << cfg.to_json().dump(2) << "\n" << planned_calls(cfg, skb, 1).dump(2) << "\n";
        return kExitOk;
    }
    Runtime rt = make_runtime(cfg);
    SpaceSet spaces = load_spaces(cfg, rt.embedder->provider_id());
    PipelineContext ctx{skb, spaces, *rt.embedder, *rt.chat, rt.prompts};
    const RankedAnswers r = answer_query({"q", o.question, std::nullopt}, cfg.pipeline, ctx);
    if (r.error) throw ProviderError(*r.error);
    print_answers(out, skb, r);
    if (cfg.pipeline.detailed_trace) out << to_json(r, true)["trace"].dump(2) << "\n";
    if (!cfg.out.empty()) write_results_jsonl(cfg.out, {r}, cfg.pipeline.detailed_trace);
    return kExitOk;
}

std::vector<QueryRecord> load_gold_queries(const AppConfig& cfg) {
    if (cfg.queries.empty()) throw UsageError("no query file given (--queries)");
    auto queries = load_queries(cfg.queries);
    for (const auto& q : queries) {
        if (!q.gold) throw DataError("query '" + q.id + "' has no answer_ids");
    }
    return queries;
}

void print_report(std::ostream& out, const MetricsReport& r) {
    char line[160];
    std::snprintf(line, sizeof line,
                  "hit@1 %.1f  hit@5 %.1f  hit@20 %.1f  recall@20 %.1f  mrr %.1f\n", r.hit.at(1),
                  r.hit.at(5), r.hit.at(20), r.recall.at(20), r.mrr);
    out << line << "queries " << r.evaluated << "  skipped_graph " << r.skipped_graph
        << "  errors " << r.errors << "\n";
}

int cmd_eval(const Options& o, std::ostream& out) {
    AppConfig cfg = resolve(o);
    const auto queries = load_gold_queries(cfg);
    const Skb skb = load_skb(cfg);
    if (o.dry_run) {
        out << cfg.to_json().dump(2) << "\n" << planned_calls(cfg, skb, queries.size()).dump(2) << "\n";
        return kExitOk;
    }
    Runtime rt = make_runtime(cfg);
    SpaceSet spaces = load_spaces(cfg, rt.embedder->provider_id());
    PipelineContext ctx{skb, spaces, *rt.embedder, *rt.chat, rt.prompts};
    const auto results = run_batch(queries, cfg.pipeline, ctx, cfg.parallelism);
    const fs::path dir = cfg.out.empty() ? fs::path(".") : cfg.out;
    fs::create_directories(dir);
    write_results_jsonl(dir / "results.jsonl", results, cfg.pipeline.detailed_trace);
    const MetricsReport report = compute_metrics(results, queries);
    write_metrics_csv(dir / "metrics.csv", {{cfg.pipeline, report}});
    print_report(out, report);
    return kExitOk;
}

int cmd_ablate(const Options& o, std::ostream& out) {
    AppConfig cfg = resolve(o);
    if (o.axes.empty()) throw UsageError("ablate needs at least one --axis");
    AblationGrid grid;
    for (const auto& a : o.axes) grid.add_axis(a);
    const auto queries = load_gold_queries(cfg);
    const Skb skb = load_skb(cfg);
    const auto cells = grid.expand(cfg.pipeline);
    if (o.dry_run) {
        out << cfg.to_json().dump(2) << "\n";
        out << json{{"cells", cells.size()}}.dump() << "\n";
        for (const auto& c : cells) {
            AppConfig copy = cfg;
            copy.pipeline = c;
            out << planned_calls(copy, skb, queries.size()).dump() << "\n";
        }
        return kExitOk;
    }
    Runtime rt = make_runtime(cfg);
    SpaceSet spaces = load_spaces(cfg, rt.embedder->provider_id());
    PipelineContext ctx{skb, spaces, *rt.embedder, *rt.chat, rt.prompts};
    const auto rows = run_ablation(grid, cfg.pipeline, queries, ctx, cfg.parallelism);
    const fs::path dir = cfg.out.empty() ? fs::path(".") : cfg.out;
    fs::create_directories(dir);
    write_metrics_csv(dir / "metrics.csv", rows);
    out << rows.size() << " rows written to " << (dir / "metrics.csv").string() << "\n";
    return kExitOk;
}

int cmd_convert(const Options& o, std::ostream& out) {
    if (o.stark_in.empty() || o.out.empty()) throw UsageError("convert-stark needs --in and --out");
    const auto s = convert_stark(o.stark_in, o.out);
    out << "nodes " << s.nodes << "  edges " << s.edges << "  documents " << s.documents << "\n";
    return kExitOk;
}

void setup_logging(int verbose) {
    static auto logger = [] {
        auto l = spdlog::stderr_color_mt("afr");
        spdlog::set_default_logger(l);
        return l;
    }();
    (void)logger;
    spdlog::set_level(verbose >= 2   ? spdlog::level::debug
                      : verbose == 1 ? spdlog::level::info
                                     : spdlog::level::warn);
}

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"Knowledge-base question answering over typed graphs with text documents"};
    app.name("afr");
    app.require_subcommand(1);
    app.add_flag("-v,--verbose", o.verbose, "More log output (repeatable)");

    auto* ingest = app.add_subcommand("ingest", "Load and validate an SKB");
    add_common(ingest, o);

    auto* embed = app.add_subcommand("embed", "Build or refresh embedding spaces");
    add_common(embed, o);
    embed->add_option("--variant", o.variant, "text_only, text_plus_relations or all");
    embed->add_option("--out", o.out, "Directory for the space files");
    embed->add_flag("--dry-run", o.dry_run, "Print what would be embedded");

    auto* query = app.add_subcommand("query", "Answer one question");
    add_common(query, o);
    add_pipeline_flags(query, o);
    query->add_option("--out", o.out, "Also write the result as JSONL");
    query->add_option("question", o.question, "Natural-language question")->required();

    auto* eval = app.add_subcommand("eval", "Answer a query file and compute metrics");
    add_common(eval, o);
    add_pipeline_flags(eval, o);
    eval->add_option("--queries", o.queries, "queries.jsonl");
    eval->add_option("--out", o.out, "Output directory");

    auto* ablate = app.add_subcommand("ablate", "Run a configuration grid");
    add_common(ablate, o);
    add_pipeline_flags(ablate, o);
    ablate->add_option("--queries", o.queries, "queries.jsonl");
    ablate->add_option("--out", o.out, "Output directory");
    ablate->add_option("--axis", o.axes, "name=v1,v2,... (repeatable)");

    auto* convert = app.add_subcommand("convert-stark", "Convert a STaRK JSON export");
    convert->add_option("--in", o.stark_in, "Export directory")->required();
    convert->add_option("--out", o.out, "Output SKB directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
    }
    setup_logging(o.verbose);

    try {
        if (*ingest) return cmd_ingest(o, out);
        if (*embed) return cmd_embed(o, out);
        if (*query) return cmd_query(o, out);
        if (*eval) return cmd_eval(o, out);
        if (*ablate) return cmd_ablate(o, out);
        if (*convert) return cmd_convert(o, out);
    } catch (const UsageError& e) {
        err << "afr: " << e.what() << "\n";
        return kExitUsage;
    } catch (const DataError& e) {
        err << "afr: " << e.what() << "\n";
        return kExitData;
    } catch (const Error& e) {
        err << "afr: " << e.what() << "\n";
        return kExitProvider;
    } catch (const std::exception& e) {
        err << "afr: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}

}  // namespace afr
