#include "novelty/pipeline.hpp"

#include <ctime>
#include <sstream>

#include "novelty/digest.hpp"
#include "novelty/json_io.hpp"
#include "novelty/prompts.hpp"

namespace novelty {

namespace {

template <typename Fn>
auto staged(const char* stage, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const Error& e) {
        if (!e.stage().empty()) throw;
        throw e.with_stage(stage);
    }
}

std::string digest_of(const json& j) { return sha256_hex(canonical_dump(j)); }

json source_counts_json(const CandidatePool& pool) {
    json out = json::object();
    for (const auto& [source, n] : pool.source_counts) out[std::string(to_string(source))] = n;
    return out;
}

}  // namespace

RetrieveStage run_retrieve(PipelineContext& ctx, const Idea& idea, const PipelineConfig& cfg,
                           const SourceSelection& sources) {
    RetrieveStage out;
    out.idea = idea;
    out.retrieval = staged("retrieval", [&] { return retrieve(ctx.gateway, ctx.scholar, idea, cfg, sources); });
    const auto& pool = out.retrieval.pool;
    out.trace.push_back({{"stage", "pool"},
                         {"template_id", std::string(prompts::kQueryTemplateId)},
                         {"queries", out.retrieval.queries.all()},
                         {"pool_size", pool.papers.size()},
                         {"source_counts", source_counts_json(pool)},
                         {"pool_digest", digest_of(to_json(pool))},
                         {"warnings", out.retrieval.warnings}});
    return out;
}

RerankStage run_rerank(PipelineContext& ctx, const Idea& idea, const CandidatePool& pool, const PipelineConfig& cfg,
                       RerankMode mode, Trace trace) {
    staged("rerank", [&] { check_invariants(pool, idea); });
    RerankStage out;
    out.idea = idea;
    out.pool = pool;
    out.trace = std::move(trace);

    out.filtered = staged("embed", [&] {
        return embed_filter(ctx.gateway, idea, pool, cfg.filter_size, cfg.embedding_model_id);
    });
    out.trace.push_back({{"stage", "embed"},
                         {"model", cfg.embedding_model_id},
                         {"N", cfg.filter_size},
                         {"pool_digest", digest_of(to_json(pool))},
                         {"size", out.filtered.size()},
                         {"digest", digest_of(to_json(out.filtered))}});

    auto criteria = RerankCriteria::for_mode(mode);
    out.evidence = staged("rerank", [&] {
        return facet_rerank(ctx.gateway, idea, out.filtered, pool, cfg, criteria, &out.rerank);
    });
    out.trace.push_back({{"stage", "rerank"},
                         {"mode", std::string(to_string(mode))},
                         {"template_id", criteria.template_id},
                         {"model", cfg.rerank_model_id},
                         {"window", cfg.window},
                         {"stride", cfg.stride},
                         {"windows", out.rerank.windows},
                         {"unparseable_windows", out.rerank.unparseable_windows},
                         {"k", cfg.evidence_size},
                         {"evidence", out.evidence.ids()},
                         {"digest", digest_of(to_json(out.evidence))}});
    return out;
}

NoveltyReport run_judge(PipelineContext& ctx, const RerankStage& ranked, const PipelineConfig& cfg) {
    NoveltyReport report;
    report.idea_id = ranked.idea.id;
    report.evidence = ranked.evidence;
    report.config = cfg;
    report.trace = ranked.trace;

    std::map<std::string, Paper> papers;
    for (const auto& e : ranked.evidence.entries) {
        if (const Paper* p = ranked.pool.find(e.paper_id)) papers.emplace(p->paper_id, *p);
    }
    auto outcome = staged("judge", [&] {
        std::vector<LabeledExample> train;
        for (const auto& ex : ctx.train_set) {
            if (ex.id != ranked.idea.id) train.push_back(ex);
        }
        auto examples = select_examples(train, cfg.n_examples, cfg.example_seed);
        return judge(ctx.gateway, ranked.idea, ranked.evidence, papers, std::move(examples), cfg);
    });
    report.verdict = outcome.verdict;
    report.evidence_papers = std::move(papers);

    std::vector<std::string> cited = outcome.verdict.cited_paper_ids;
    report.trace.push_back({{"stage", "judge"},
                            {"template_id", std::string(prompts::kJudgeTemplateId)},
                            {"model", cfg.judge_model_id},
                            {"example_ids", outcome.example_ids},
                            {"examples_dropped", outcome.examples_dropped},
                            {"repair_attempts", outcome.repair_attempts},
                            {"request_digest", outcome.request_digest},
                            {"decision", std::string(to_string(outcome.verdict.decision))},
                            {"cited", cited},
                            {"warnings", outcome.warnings}});
    report.generated_at = utc_timestamp();
    return report;
}

NoveltyReport check_novelty(PipelineContext& ctx, const Idea& idea, const PipelineConfig& cfg,
                            const SourceSelection& sources) {
    cfg.validate();
    auto retrieved = run_retrieve(ctx, idea, cfg, sources);
    auto ranked = run_rerank(ctx, idea, retrieved.retrieval.pool, cfg, RerankMode::facet, retrieved.trace);
    return run_judge(ctx, ranked, cfg);
}

std::string trace_digest(const Trace& trace) { return digest_of(trace); }

json to_json(const NoveltyReport& report) {
    auto title_of = [&](const std::string& id) {
        auto it = report.evidence_papers.find(id);
        return it == report.evidence_papers.end() ? std::string() : it->second.title;
    };
    json cited = json::array();
    for (const auto& id : report.verdict.cited_paper_ids) {
        cited.push_back({{"paper_id", id}, {"title", title_of(id)}});
    }
    json evidence = json::array();
    for (const auto& e : report.evidence.entries) {
        evidence.push_back({{"rank", e.rank}, {"paper_id", e.paper_id}, {"title", title_of(e.paper_id)}});
    }
    return json{{"idea_id", report.idea_id},
                {"decision", std::string(to_string(report.verdict.decision))},
                {"rationale", report.verdict.rationale},
                {"cited_papers", cited},
                {"evidence", evidence},
                {"trace", report.trace},
                {"trace_digest", trace_digest(report.trace)},
                {"config", to_json(report.config)},
                {"generated_at", report.generated_at}};
}

std::string to_markdown(const NoveltyReport& report) {
    std::ostringstream out;
    out << "# Novelty report: " << report.idea_id << "\n\n";
    out << "**Decision:** " << display_name(report.verdict.decision) << "\n\n";
    out << "## Rationale\n\n" << report.verdict.rationale << "\n\n";
    out << "## Evidence\n\n";
    for (const auto& e : report.evidence.entries) {
        auto it = report.evidence_papers.find(e.paper_id);
        const bool cited = std::find(report.verdict.cited_paper_ids.begin(), report.verdict.cited_paper_ids.end(),
                                     e.paper_id) != report.verdict.cited_paper_ids.end();
        out << e.rank << ". " << (it == report.evidence_papers.end() ? e.paper_id : it->second.title) << " (`"
            << e.paper_id << "`)" << (cited ? " *cited*" : "") << "\n";
    }
    out << "\n## Trace\n\n";
    for (const auto& rec : report.trace) {
        out << "- " << rec.value("stage", "?");
        if (rec.contains("pool_size")) out << ": " << rec["pool_size"].get<std::size_t>() << " candidates";
        if (rec.contains("size")) out << ": kept " << rec["size"].get<std::size_t>();
        if (rec.contains("windows")) out << ": " << rec["windows"].get<std::size_t>() << " window(s)";
        if (rec.contains("example_ids")) out << ": " << rec["example_ids"].size() << " example(s)";
        out << "\n";
    }
    out << "\nGenerated " << report.generated_at << ", trace digest `" << trace_digest(report.trace) << "`.\n";
    return out.str();
}

json to_json(const RetrieveStage& stage) {
    return json{{"idea", to_json(stage.idea)},
                {"queries",
                 {{"keywords", stage.retrieval.queries.keywords_queries},
                  {"titles", stage.retrieval.queries.title_queries}}},
                {"pool", to_json(stage.retrieval.pool)},
                {"warnings", stage.retrieval.warnings},
                {"trace", stage.trace}};
}

RetrieveStage retrieve_stage_from_json(const json& j) {
    if (!j.is_object() || !j.contains("idea") || !j.contains("pool") || !j.contains("trace")) {
        throw Error(ErrorKind::InvariantViolation, "retrieve document needs 'idea', 'pool' and 'trace'");
    }
    RetrieveStage out;
    out.idea = idea_from_json(j["idea"]);
    out.retrieval.pool = pool_from_json(j["pool"]);
    if (j.contains("queries")) {
        out.retrieval.queries.keywords_queries = j["queries"].value("keywords", std::vector<std::string>{});
        out.retrieval.queries.title_queries = j["queries"].value("titles", std::vector<std::string>{});
    }
    out.retrieval.warnings = j.value("warnings", std::vector<std::string>{});
    out.trace = j["trace"];
    check_invariants(out.retrieval.pool, out.idea);
    return out;
}

json to_json(const RerankStage& stage) {
    return json{{"idea", to_json(stage.idea)},
                {"pool", to_json(stage.pool)},
                {"filtered", to_json(stage.filtered)},
                {"ranked", to_json(stage.evidence)},
                {"rerank",
                 {{"windows", stage.rerank.windows},
                  {"unparseable_windows", stage.rerank.unparseable_windows},
                  {"request_digests", stage.rerank.request_digests},
                  {"full_order", stage.rerank.full_order}}},
                {"trace", stage.trace}};
}

RerankStage rerank_stage_from_json(const json& j) {
    for (const char* key : {"idea", "pool", "filtered", "ranked", "trace"}) {
        if (!j.is_object() || !j.contains(key)) {
            throw Error(ErrorKind::InvariantViolation, std::string("rerank document lacks '") + key + "'");
        }
    }
    RerankStage out;
    out.idea = idea_from_json(j["idea"]);
    out.pool = pool_from_json(j["pool"]);
    out.filtered = ranked_list_from_json(j["filtered"]);
    out.evidence = ranked_list_from_json(j["ranked"]);
    if (j.contains("rerank")) {
        const auto& r = j["rerank"];
        out.rerank.windows = r.value("windows", std::size_t{0});
        out.rerank.unparseable_windows = r.value("unparseable_windows", std::size_t{0});
        out.rerank.request_digests = r.value("request_digests", std::vector<std::string>{});
        out.rerank.full_order = r.value("full_order", std::vector<std::string>{});
    }
    out.trace = j["trace"];
    check_invariants(out.pool, out.idea);
    check_invariants(out.evidence);
    for (const auto& e : out.evidence.entries) {
        if (out.pool.find(e.paper_id) == nullptr) {
            throw Error(ErrorKind::InvariantViolation, "ranked paper '" + e.paper_id + "' is not in the pool");
        }
    }
    return out;
}

std::string utc_timestamp() {
    std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace novelty
