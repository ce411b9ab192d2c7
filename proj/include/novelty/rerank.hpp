#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "novelty/domain.hpp"
#include "novelty/gateway.hpp"

namespace novelty {

enum class RerankMode { facet, relevance };

std::string_view to_string(RerankMode mode) noexcept;
RerankMode parse_rerank_mode(std::string_view text);

/// Ranking instructions for the listwise reranker. Facet mode encodes the
/// four priority tiers; relevance mode is the plain-relevance variant.
struct RerankCriteria {
    RerankMode mode = RerankMode::facet;
    std::string text;
    std::string template_id;

    static RerankCriteria facet();
    static RerankCriteria relevance();
    static RerankCriteria for_mode(RerankMode mode);
    Stage output_stage() const noexcept;
};

struct WindowPermutation {
    std::size_t window_start = 0;
    std::vector<int> order;  // 1-based positions within the window
};

/// dot(u,v) / (|u||v|), clamped to [-1, 1].
/// Throws DimensionMismatch or ZeroVector.
double cosine(const EmbeddingVector& u, const EmbeddingVector& v);

/// "title. abstract", the text embedded for a paper.
std::string embedding_text(const Paper& paper);

/// Ranks the pool by cosine similarity to the idea (ties by paper id) and
/// keeps the first min(N, |pool|).
RankedList embed_filter(Gateway& gateway, const Idea& idea, const CandidatePool& pool, int top_n,
                        const std::string& model_tag);

ChatRequest build_rerank_prompt(const Idea& idea, const std::vector<const Paper*>& window,
                                const RerankCriteria& criteria, const PipelineConfig& cfg);

/// Reads "[i] > [j] > ..." leniently: out-of-range and repeated indices are
/// dropped, unmentioned ones are appended in ascending order.
/// Throws UnparseableRanking when no valid index is present.
WindowPermutation parse_permutation(std::string_view text, int window_len);

/// The window spans the sliding pass visits for a list of `length` items:
/// [start, end) pairs from the tail towards the head.
std::vector<std::pair<std::size_t, std::size_t>> window_spans(std::size_t length, int window, int stride);

struct RerankTrace {
    std::size_t windows = 0;
    std::size_t unparseable_windows = 0;
    std::vector<std::string> request_digests;
    std::vector<std::string> full_order;  // order after the pass, before truncation to k
};

/// Sliding-window listwise rerank of `filtered`, returning the first k.
/// A window whose reply cannot be parsed keeps its order; provider errors
/// propagate.
RankedList facet_rerank(Gateway& gateway, const Idea& idea, const RankedList& filtered, const CandidatePool& pool,
                        const PipelineConfig& cfg, const RerankCriteria& criteria, RerankTrace* trace = nullptr);

}  // namespace novelty
