#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "novelty/domain.hpp"
#include "novelty/gateway.hpp"
#include "novelty/judge.hpp"
#include "novelty/rerank.hpp"
#include "novelty/retrieval.hpp"
#include "novelty/scholar.hpp"

namespace novelty {

/// What a pipeline run needs besides the idea and the config.
struct PipelineContext {
    Gateway& gateway;
    ScholarClient& scholar;
    std::vector<LabeledExample> train_set;
};

/// Ordered stage records. Each record is {"stage": name, ...}; a complete
/// run holds pool, embed, rerank, judge in that order.
using Trace = nlohmann::json;

struct RetrieveStage {
    Idea idea;
    RetrievalResult retrieval;
    Trace trace = Trace::array();
};

struct RerankStage {
    Idea idea;
    CandidatePool pool;
    RankedList filtered;
    RankedList evidence;
    RerankTrace rerank;
    Trace trace = Trace::array();
};

struct NoveltyReport {
    std::string idea_id;
    Verdict verdict;
    RankedList evidence;
    std::map<std::string, Paper> evidence_papers;
    Trace trace = Trace::array();
    PipelineConfig config;
    std::string generated_at;  // ISO-8601 UTC; the only nondeterministic field
};

RetrieveStage run_retrieve(PipelineContext& ctx, const Idea& idea, const PipelineConfig& cfg,
                           const SourceSelection& sources = {});

/// Embedding filter then listwise rerank, appending embed and rerank records
/// to `trace` (normally the retrieve stage's).
RerankStage run_rerank(PipelineContext& ctx, const Idea& idea, const CandidatePool& pool, const PipelineConfig& cfg,
                       RerankMode mode = RerankMode::facet, Trace trace = Trace::array());

/// Example selection and judgment over the reranked evidence.
NoveltyReport run_judge(PipelineContext& ctx, const RerankStage& ranked, const PipelineConfig& cfg);

/// retrieve -> embed_filter(N) -> facet_rerank(k) -> select_examples -> judge.
/// Errors leave with their stage tag set.
NoveltyReport check_novelty(PipelineContext& ctx, const Idea& idea, const PipelineConfig& cfg,
                            const SourceSelection& sources = {});

/// Content digest of the trace; equal for runs that made the same decisions.
std::string trace_digest(const Trace& trace);

nlohmann::json to_json(const NoveltyReport& report);
std::string to_markdown(const NoveltyReport& report);

/// Stage documents written by the retrieve and rerank commands.
nlohmann::json to_json(const RetrieveStage& stage);
RetrieveStage retrieve_stage_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RerankStage& stage);
RerankStage rerank_stage_from_json(const nlohmann::json& j);

/// Current UTC time as "YYYY-MM-DDTHH:MM:SSZ".
std::string utc_timestamp();

}  // namespace novelty
