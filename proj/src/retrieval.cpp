#include "novelty/retrieval.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <spdlog/spdlog.h>

#include "novelty/json_io.hpp"
#include "novelty/prompts.hpp"
#include "text.hpp"

namespace novelty {

std::vector<std::string> QuerySet::all() const {
    auto out = keywords_queries;
    out.insert(out.end(), title_queries.begin(), title_queries.end());
    return out;
}

ChatRequest build_query_prompt(const Idea& idea, const PipelineConfig& cfg) {
    ChatRequest req;
    req.model_id = cfg.query_model_id;
    req.temperature = cfg.temperature;
    req.messages.push_back({Role::system, std::string(prompts::kQuerySystem)});
    req.messages.push_back(
        {Role::user, text::render(prompts::kQueryUser,
                                  {{"idea", idea.text}, {"max_queries", std::to_string(cfg.max_queries)}})});
    return req;
}

QuerySet parse_query_response(const std::string& reply, int max_queries) {
    auto fail = [&](const std::string& why) -> void {
        throw Error(ErrorKind::MalformedQueryResponse, "query response: " + why);
    };
    auto open = reply.find('{');
    auto close = reply.rfind('}');
    if (open == std::string::npos || close == std::string::npos || close < open) {
        fail("no JSON object found");
    }
    auto j = json::parse(reply.substr(open, close - open + 1), nullptr, false);
    if (j.is_discarded() || !j.is_object()) fail("invalid JSON object");
    if (!j.contains("keywords") && !j.contains("titles")) fail("object lacks 'keywords' and 'titles'");

    std::unordered_set<std::string> seen;
    auto take = [&](const char* key, std::vector<std::string>& into) {
        if (!j.contains(key)) return;
        if (!j[key].is_array()) fail(std::string("'") + key + "' is not an array");
        for (const auto& q : j[key]) {
            if (!q.is_string()) fail(std::string("'") + key + "' holds a non-string");
            auto s = text::collapse_whitespace(q.get<std::string>());
            if (s.empty() || !seen.insert(to_lower(s)).second) continue;
            into.push_back(std::move(s));
        }
    };
    QuerySet qs;
    take("keywords", qs.keywords_queries);
    take("titles", qs.title_queries);

    auto cap = static_cast<std::size_t>(std::max(0, max_queries));
    if (qs.keywords_queries.size() > cap) qs.keywords_queries.resize(cap);
    qs.title_queries.resize(std::min(qs.title_queries.size(), cap - qs.keywords_queries.size()));
    return qs;
}

QuerySet generate_queries(Gateway& gateway, const Idea& idea, const PipelineConfig& cfg) {
    auto req = build_query_prompt(idea, cfg);
    for (int attempt = 0;; ++attempt) {
        auto reply = gateway.chat(req).text;
        try {
            return parse_query_response(reply, cfg.max_queries);
        } catch (const Error& e) {
            if (attempt >= cfg.query_repair_attempts) {
                throw Error(ErrorKind::MalformedQueryResponse,
                            std::string(e.what()) + " (after " + std::to_string(attempt) + " repair attempt(s))");
            }
            spdlog::warn("query generation reply unparseable ({}); asking again", e.what());
            req.messages.push_back({Role::assistant, reply});
            req.messages.push_back({Role::user, std::string(prompts::kQueryRepair)});
        }
    }
}

namespace {

SourceResult tagged(Source source, std::vector<Paper> papers, std::optional<std::string> echo) {
    SourceResult r;
    r.source = source;
    r.query_echo = std::move(echo);
    for (auto& p : papers) {
        if (trim(p.abstract).empty()) {
            ++r.dropped_without_abstract;
            continue;
        }
        p.provenance = {source};
        r.papers.push_back(std::move(p));
    }
    if (r.dropped_without_abstract > 0) {
        spdlog::info("{} source: dropped {} hit(s) without abstract", to_string(source), r.dropped_without_abstract);
    }
    return r;
}

}  // namespace

SourceResult keyword_search(ScholarClient& client, const std::string& query, int limit) {
    if (trim(query).empty()) {
        throw Error(ErrorKind::InvariantViolation, "keyword search needs a non-empty query");
    }
    auto papers = client.search(query, limit);
    if (papers.size() > static_cast<std::size_t>(std::max(0, limit))) {
        papers.resize(static_cast<std::size_t>(std::max(0, limit)));
    }
    return tagged(Source::keyword, std::move(papers), query);
}

std::string truncate_words(const std::string& text, std::size_t max_words) {
    std::istringstream in(text);
    std::string word;
    std::string out;
    std::size_t n = 0;
    while (n < max_words && in >> word) {
        if (!out.empty()) out.push_back(' ');
        out += word;
        ++n;
    }
    return out;
}

SourceResult snippet_search(ScholarClient& client, const std::string& idea_text, int limit) {
    auto query = truncate_words(idea_text, kSnippetMaxWords);
    if (query.empty()) {
        throw Error(ErrorKind::InvariantViolation, "snippet search needs a non-empty idea");
    }
    auto hits = client.snippet_search(query, limit);

    std::vector<Paper> papers;
    std::unordered_set<std::string> seen;
    for (auto& h : hits) {
        if (seen.insert(h.paper.paper_id).second) {
            papers.push_back(std::move(h.paper));
        }
    }
    if (papers.size() > static_cast<std::size_t>(std::max(0, limit))) {
        papers.resize(static_cast<std::size_t>(std::max(0, limit)));
    }

    std::vector<std::string> to_fetch;
    for (const auto& p : papers) {
        if (trim(p.abstract).empty()) to_fetch.push_back(p.paper_id);
    }
    if (!to_fetch.empty()) {
        std::vector<std::optional<Paper>> fetched;
        try {
            fetched = client.fetch(to_fetch);
        } catch (const Error& e) {
            spdlog::warn("snippet source: abstract lookup failed: {}", e.what());
        }
        std::unordered_map<std::string, Paper> by_request;
        for (std::size_t i = 0; i < fetched.size() && i < to_fetch.size(); ++i) {
            if (fetched[i]) by_request.emplace(to_fetch[i], *fetched[i]);
        }
        std::vector<Paper> hydrated;
        std::unordered_set<std::string> ids;
        for (auto& p : papers) {
            if (auto it = by_request.find(p.paper_id); it != by_request.end()) {
                p = it->second;
            }
            if (ids.insert(p.paper_id).second) hydrated.push_back(std::move(p));
        }
        papers = std::move(hydrated);
    }
    return tagged(Source::snippet, std::move(papers), query);
}

SourceResult recommend_from_seeds(ScholarClient& client, const std::vector<std::string>& seed_ids, int limit) {
    SourceResult empty;
    empty.source = Source::recommendation;
    if (seed_ids.empty() || limit <= 0) return empty;

    std::vector<std::vector<Paper>> per_seed;
    std::optional<Error> first_error;
    for (const auto& seed : seed_ids) {
        try {
            per_seed.push_back(client.recommend(seed, limit));
        } catch (const Error& e) {
            spdlog::warn("recommendations for seed '{}' failed: {}", seed, e.what());
            if (!first_error) first_error = e;
        }
    }
    if (per_seed.empty() && first_error) {
        throw Error(first_error->kind(), "recommendations failed for every seed: " + std::string(first_error->what()));
    }

    std::vector<Paper> merged;
    std::unordered_set<std::string> seen;
    const auto cap = static_cast<std::size_t>(limit);
    for (std::size_t round = 0; merged.size() < cap; ++round) {
        bool any = false;
        for (auto& list : per_seed) {
            if (round >= list.size()) continue;
            any = true;
            if (seen.insert(list[round].paper_id).second) {
                merged.push_back(list[round]);
                if (merged.size() >= cap) break;
            }
        }
        if (!any) break;
    }
    return tagged(Source::recommendation, std::move(merged), std::nullopt);
}

SourceResult seed_papers(ScholarClient& client, const std::vector<std::string>& seed_ids) {
    if (seed_ids.empty()) {
        SourceResult r;
        r.source = Source::seed;
        return r;
    }
    std::vector<Paper> found;
    for (auto& p : client.fetch(seed_ids)) {
        if (p) found.push_back(std::move(*p));
    }
    return tagged(Source::seed, std::move(found), std::nullopt);
}

CandidatePool assemble_pool(const Idea& idea, const std::vector<SourceResult>& results) {
    CandidatePool pool;
    pool.idea_id = idea.id;
    std::unordered_set<std::string> excluded(idea.exclusion_ids.begin(), idea.exclusion_ids.end());
    std::unordered_map<std::string, std::size_t> position;
    std::size_t excluded_hits = 0;

    for (const auto& r : results) {
        pool.source_counts[r.source] += r.papers.size();
        for (const auto& p : r.papers) {
            if (trim(p.abstract).empty()) continue;
            if (excluded.count(p.paper_id) != 0) {
                ++excluded_hits;
                continue;
            }
            if (auto it = position.find(p.paper_id); it != position.end()) {
                auto& kept = pool.papers[it->second];
                kept.provenance.insert(p.provenance.begin(), p.provenance.end());
                kept.provenance.insert(r.source);
                continue;
            }
            position.emplace(p.paper_id, pool.papers.size());
            auto copy = p;
            copy.provenance.insert(r.source);
            pool.papers.push_back(std::move(copy));
        }
    }
    if (excluded_hits > 0) {
        spdlog::info("pool for {}: removed {} excluded hit(s)", idea.id, excluded_hits);
    }
    if (pool.papers.empty()) {
        throw Error(ErrorKind::EmptyPool, "no candidate papers were retrieved for idea '" + idea.id + "'");
    }
    return pool;
}

const SourceResult* RetrievalResult::first_of(Source source) const {
    for (const auto& r : results) {
        if (r.source == source) return &r;
    }
    return nullptr;
}

std::vector<std::string> RetrievalResult::raw_ranking(Source source) const {
    std::vector<const SourceResult*> lists;
    for (const auto& r : results) {
        if (r.source == source) lists.push_back(&r);
    }
    std::vector<std::string> out;
    std::unordered_set<std::string> seen;
    for (std::size_t round = 0;; ++round) {
        bool any = false;
        for (const auto* r : lists) {
            if (round >= r->papers.size()) continue;
            any = true;
            const auto& id = r->papers[round].paper_id;
            // only papers that made it into the pool (exclusions applied)
            if (pool.find(id) != nullptr && seen.insert(id).second) out.push_back(id);
        }
        if (!any) break;
    }
    return out;
}

RetrievalResult retrieve(Gateway& gateway, ScholarClient& client, const Idea& idea, const PipelineConfig& cfg,
                         const SourceSelection& sources) {
    RetrievalResult out;
    std::optional<Error> first_error;
    std::size_t attempted = 0;
    std::size_t failed = 0;

    auto attempt = [&](const std::string& what, auto&& fn) {
        ++attempted;
        try {
            fn();
        } catch (const Error& e) {
            // credentials problems are not a flaky endpoint
            if (e.kind() == ErrorKind::AuthError) throw;
            ++failed;
            out.warnings.push_back(what + ": " + e.what());
            spdlog::warn("{} failed: {}", what, e.what());
            if (!first_error) first_error = e;
        }
    };

    if (!idea.seed_paper_ids.empty()) {
        attempt("seed lookup", [&] { out.results.push_back(seed_papers(client, idea.seed_paper_ids)); });
        if (sources.recommendation) {
            attempt("recommendations", [&] {
                out.results.push_back(recommend_from_seeds(client, idea.seed_paper_ids, cfg.recommendation_limit));
            });
        }
    }
    if (sources.keyword) {
        out.queries = generate_queries(gateway, idea, cfg);
        for (const auto& q : out.queries.all()) {
            attempt("keyword search '" + q + "'",
                    [&] { out.results.push_back(keyword_search(client, q, cfg.per_query_limit)); });
        }
    }
    if (sources.snippet) {
        attempt("snippet search", [&] { out.results.push_back(snippet_search(client, idea.text, cfg.snippet_limit)); });
    }

    if (attempted > 0 && failed == attempted && first_error) {
        throw Error(first_error->kind(), "every retrieval source failed; first error: " + std::string(first_error->what()));
    }
    out.pool = assemble_pool(idea, out.results);
    return out;
}

}  // namespace novelty
