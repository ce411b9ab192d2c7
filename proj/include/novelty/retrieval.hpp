#pragma once

#include <optional>
#include <string>
#include <vector>

#include "novelty/domain.hpp"
#include "novelty/gateway.hpp"
#include "novelty/scholar.hpp"

namespace novelty {

inline constexpr std::size_t kSnippetMaxWords = 500;

struct QuerySet {
    std::vector<std::string> keywords_queries;
    std::vector<std::string> title_queries;

    /// Keywords first, then titles.
    std::vector<std::string> all() const;
    std::size_t size() const noexcept { return keywords_queries.size() + title_queries.size(); }
};

struct SourceResult {
    Source source = Source::keyword;
    std::optional<std::string> query_echo;
    std::vector<Paper> papers;  // provider order
    std::size_t dropped_without_abstract = 0;
};

/// Which retrieval sources run. Seed papers themselves are always pooled.
struct SourceSelection {
    bool keyword = true;
    bool snippet = true;
    bool recommendation = true;
};

ChatRequest build_query_prompt(const Idea& idea, const PipelineConfig& cfg);

/// Parses {"keywords":[...],"titles":[...]} out of a model reply, trims,
/// drops case-insensitive duplicates and truncates to `max_queries` with
/// keywords taking precedence. Throws MalformedQueryResponse.
QuerySet parse_query_response(const std::string& text, int max_queries);

/// Asks the query model, with cfg.query_repair_attempts repair round-trips.
QuerySet generate_queries(Gateway& gateway, const Idea& idea, const PipelineConfig& cfg);

SourceResult keyword_search(ScholarClient& client, const std::string& query, int limit);

/// First `max_words` whitespace-separated words of `text`, single-spaced.
std::string truncate_words(const std::string& text, std::size_t max_words);

/// Snippet search over the whole idea (truncated to kSnippetMaxWords words).
/// Hits for the same paper collapse onto the first; abstracts missing from
/// snippet hits are fetched before the abstract-less drop.
SourceResult snippet_search(ScholarClient& client, const std::string& idea_text, int limit);

/// Round-robin interleave of per-seed recommendations, deduplicated, at most
/// `limit` papers. A failing seed is skipped; all seeds failing throws.
SourceResult recommend_from_seeds(ScholarClient& client, const std::vector<std::string>& seed_ids, int limit);

/// The seed papers themselves (provenance = seed).
SourceResult seed_papers(ScholarClient& client, const std::vector<std::string>& seed_ids);

/// Deduplicating union (provenance merged, first record's fields kept),
/// minus exclusions. Throws EmptyPool.
CandidatePool assemble_pool(const Idea& idea, const std::vector<SourceResult>& results);

struct RetrievalResult {
    QuerySet queries;
    std::vector<SourceResult> results;
    CandidatePool pool;
    std::vector<std::string> warnings;

    const SourceResult* first_of(Source source) const;
    /// All papers of one source in provider order: per-query lists are
    /// interleaved round-robin and deduplicated.
    std::vector<std::string> raw_ranking(Source source) const;
};

/// Runs every selected source and assembles the pool. A failing source is
/// logged and skipped; if every attempted source call fails, the first
/// failure is rethrown.
RetrievalResult retrieve(Gateway& gateway, ScholarClient& client, const Idea& idea, const PipelineConfig& cfg,
                         const SourceSelection& sources = {});

}  // namespace novelty
