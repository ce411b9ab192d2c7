#include "novelty/rerank.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include <spdlog/spdlog.h>

#include "novelty/prompts.hpp"
#include "text.hpp"

namespace novelty {

std::string_view to_string(RerankMode mode) noexcept {
    return mode == RerankMode::facet ? "facet" : "relevance";
}

RerankMode parse_rerank_mode(std::string_view text) {
    if (text == "facet") return RerankMode::facet;
    if (text == "relevance") return RerankMode::relevance;
    throw Error(ErrorKind::InvalidConfig, "unknown rerank mode '" + std::string(text) + "' (facet|relevance)");
}

RerankCriteria RerankCriteria::facet() {
    return {RerankMode::facet, std::string(prompts::kFacetCriteria), std::string(prompts::kRerankFacetTemplateId)};
}

RerankCriteria RerankCriteria::relevance() {
    return {RerankMode::relevance, std::string(prompts::kRelevanceCriteria),
            std::string(prompts::kRerankRelevanceTemplateId)};
}

RerankCriteria RerankCriteria::for_mode(RerankMode mode) {
    return mode == RerankMode::facet ? facet() : relevance();
}

Stage RerankCriteria::output_stage() const noexcept {
    return mode == RerankMode::facet ? Stage::facet_topK : Stage::relevance_topK;
}

double cosine(const EmbeddingVector& u, const EmbeddingVector& v) {
    if (u.values.size() != v.values.size()) {
        throw Error(ErrorKind::DimensionMismatch, "cosine of vectors with dimensions " +
                                                      std::to_string(u.values.size()) + " and " +
                                                      std::to_string(v.values.size()));
    }
    // scale by the largest magnitude so tiny or huge components neither
    // underflow nor overflow when squared
    double su = 0.0;
    double sv = 0.0;
    for (std::size_t i = 0; i < u.values.size(); ++i) {
        su = std::max(su, std::abs(u.values[i]));
        sv = std::max(sv, std::abs(v.values[i]));
    }
    if (su == 0.0 || sv == 0.0) {
        throw Error(ErrorKind::ZeroVector, "cosine of an all-zero vector is undefined");
    }
    double dot = 0.0;
    double nu = 0.0;
    double nv = 0.0;
    for (std::size_t i = 0; i < u.values.size(); ++i) {
        const double a = u.values[i] / su;
        const double b = v.values[i] / sv;
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    return std::clamp(dot / (std::sqrt(nu) * std::sqrt(nv)), -1.0, 1.0);
}

std::string embedding_text(const Paper& paper) {
    auto title = text::collapse_whitespace(paper.title);
    auto abstract = text::collapse_whitespace(paper.abstract);
    if (title.empty()) return abstract;
    return title + ". " + abstract;
}

RankedList embed_filter(Gateway& gateway, const Idea& idea, const CandidatePool& pool, int top_n,
                        const std::string& model_tag) {
    if (pool.papers.empty()) {
        throw Error(ErrorKind::EmptyPool, "embedding filter needs a non-empty pool");
    }
    std::vector<std::string> texts;
    texts.reserve(pool.papers.size() + 1);
    texts.push_back(idea.text);
    for (const auto& p : pool.papers) {
        texts.push_back(embedding_text(p));
    }
    auto vectors = gateway.embed(texts, model_tag);

    struct Scored {
        double score;
        const std::string* id;
    };
    std::vector<Scored> scored;
    scored.reserve(pool.papers.size());
    for (std::size_t i = 0; i < pool.papers.size(); ++i) {
        scored.push_back({cosine(vectors[0], vectors[i + 1]), &pool.papers[i].paper_id});
    }
    std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
        if (a.score != b.score) return a.score > b.score;
        return *a.id < *b.id;
    });
    const auto keep = std::min(scored.size(), static_cast<std::size_t>(std::max(0, top_n)));
    std::vector<std::string> ids;
    std::vector<std::optional<double>> scores;
    for (std::size_t i = 0; i < keep; ++i) {
        ids.push_back(*scored[i].id);
        scores.emplace_back(scored[i].score);
    }
    return make_ranked_list(idea.id, Stage::embedding_topN, ids, scores);
}

ChatRequest build_rerank_prompt(const Idea& idea, const std::vector<const Paper*>& window,
                                const RerankCriteria& criteria, const PipelineConfig& cfg) {
    if (window.size() < 2 || window.size() > static_cast<std::size_t>(cfg.window)) {
        throw Error(ErrorKind::InvariantViolation,
                    "rerank window must hold between 2 and " + std::to_string(cfg.window) + " papers");
    }
    std::string papers;
    for (std::size_t i = 0; i < window.size(); ++i) {
        papers += "[" + std::to_string(i + 1) + "] Title: " + text::collapse_whitespace(window[i]->title) + "\n";
        papers += "Abstract: " + text::collapse_whitespace(window[i]->abstract) + "\n\n";
    }
    ChatRequest req;
    req.model_id = cfg.rerank_model_id;
    req.temperature = cfg.temperature;
    req.messages.push_back({Role::system, std::string(prompts::kRerankSystem)});
    req.messages.push_back({Role::user, text::render(prompts::kRerankUser, {{"count", std::to_string(window.size())},
                                                                          {"idea", idea.text},
                                                                          {"papers", papers},
                                                                          {"criteria", criteria.text}})});
    return req;
}

WindowPermutation parse_permutation(std::string_view text, int window_len) {
    if (window_len < 2) {
        throw Error(ErrorKind::InvariantViolation, "permutation window must hold at least 2 items");
    }
    WindowPermutation out;
    std::vector<bool> used(static_cast<std::size_t>(window_len) + 1, false);
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] != '[') continue;
        std::size_t j = i + 1;
        while (j < text.size() && text[j] == ' ') ++j;
        std::size_t digits_start = j;
        while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
        std::size_t digits_end = j;
        while (j < text.size() && text[j] == ' ') ++j;
        if (digits_end == digits_start || j >= text.size() || text[j] != ']') continue;
        if (digits_end - digits_start > 6) continue;  // absurdly large, out of range anyway
        int n = std::stoi(std::string(text.substr(digits_start, digits_end - digits_start)));
        if (n < 1 || n > window_len || used[static_cast<std::size_t>(n)]) continue;
        used[static_cast<std::size_t>(n)] = true;
        out.order.push_back(n);
        i = j;
    }
    if (out.order.empty()) {
        throw Error(ErrorKind::UnparseableRanking, "no valid ranking index in reply");
    }
    for (int n = 1; n <= window_len; ++n) {
        if (!used[static_cast<std::size_t>(n)]) out.order.push_back(n);
    }
    return out;
}

std::vector<std::pair<std::size_t, std::size_t>> window_spans(std::size_t length, int window, int stride) {
    std::vector<std::pair<std::size_t, std::size_t>> spans;
    if (length < 2) return spans;
    const auto w = static_cast<std::size_t>(window);
    const auto s = static_cast<std::size_t>(stride);
    std::size_t end = length;
    while (true) {
        std::size_t start = end > w ? end - w : 0;
        if (end - start >= 2) spans.emplace_back(start, end);
        if (start == 0) break;
        end = end > s ? end - s : 0;
    }
    return spans;
}

RankedList facet_rerank(Gateway& gateway, const Idea& idea, const RankedList& filtered, const CandidatePool& pool,
                        const PipelineConfig& cfg, const RerankCriteria& criteria, RerankTrace* trace) {
    if (filtered.empty()) {
        throw Error(ErrorKind::EmptyPool, "reranker needs a non-empty list");
    }
    std::vector<const Paper*> order;
    order.reserve(filtered.size());
    for (const auto& e : filtered.entries) {
        const Paper* p = pool.find(e.paper_id);
        if (p == nullptr) {
            throw Error(ErrorKind::InvariantViolation, "ranked paper '" + e.paper_id + "' is not in the pool");
        }
        order.push_back(p);
    }

    RerankTrace local;
    for (auto [start, end] : window_spans(order.size(), cfg.window, cfg.stride)) {
        std::vector<const Paper*> window(order.begin() + static_cast<long>(start), order.begin() + static_cast<long>(end));
        auto req = build_rerank_prompt(idea, window, criteria, cfg);
        local.request_digests.push_back(request_digest(req));
        ++local.windows;
        auto reply = gateway.chat(req).text;
        WindowPermutation perm;
        try {
            perm = parse_permutation(reply, static_cast<int>(window.size()));
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::UnparseableRanking) throw;
            ++local.unparseable_windows;
            spdlog::warn("rerank window [{}, {}) for {}: unparseable reply, keeping order", start, end, idea.id);
            continue;
        }
        perm.window_start = start;
        for (std::size_t i = 0; i < perm.order.size(); ++i) {
            order[start + i] = window[static_cast<std::size_t>(perm.order[i] - 1)];
        }
    }

    std::vector<std::string> ids;
    for (const auto* p : order) ids.push_back(p->paper_id);
    local.full_order = ids;
    if (ids.size() > static_cast<std::size_t>(cfg.evidence_size)) {
        ids.resize(static_cast<std::size_t>(cfg.evidence_size));
    }
    if (trace != nullptr) *trace = std::move(local);
    return make_ranked_list(idea.id, criteria.output_stage(), ids);
}

}  // namespace novelty
