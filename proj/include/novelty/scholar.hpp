#pragma once

#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "novelty/clock.hpp"
#include "novelty/domain.hpp"
#include "novelty/gateway.hpp"
#include "novelty/http_providers.hpp"

namespace novelty {

struct SnippetHit {
    Paper paper;  // abstract may be empty until hydrated
    std::string snippet_text;
};

/// Literature search backend. Returned papers carry canonical ids and no
/// provenance; the retrieval stage tags them. Order is the backend's ranking.
///
/// Errors: TransientError(HostError | QuotaExceeded) for retryable failures,
/// Error(HostError) for permanent ones such as an unknown paper id.
class ScholarClient {
public:
    virtual ~ScholarClient() = default;
    virtual std::vector<Paper> search(const std::string& query, int limit) = 0;
    virtual std::vector<SnippetHit> snippet_search(const std::string& text, int limit) = 0;
    virtual std::vector<Paper> recommend(const std::string& seed_id, int limit) = 0;
    /// Metadata for the given ids, aligned with the input; unknown ids map to nullopt.
    virtual std::vector<std::optional<Paper>> fetch(const std::vector<std::string>& ids) = 0;
};

/// Converts a Semantic Scholar paper object into a Paper.
Paper paper_from_s2(const nlohmann::json& j);
/// Canonical id -> identifier accepted by the S2 API ("doi:x" -> "DOI:x").
std::string s2_identifier(const std::string& canonical_id);

/// Semantic Scholar REST client. Every request goes through the rate limiter
/// and the retry policy; successful GET bodies are cached by URL.
class HttpScholarClient final : public ScholarClient {
public:
    struct Options {
        std::string base_url = "https://api.semanticscholar.org";
        std::string api_key;
        RetryPolicy retry;
        double timeout_seconds = 60.0;
    };

    HttpScholarClient(Options options, Clock& clock, RateLimiter& limiter,
                      std::shared_ptr<ResponseCache> cache = nullptr);

    std::vector<Paper> search(const std::string& query, int limit) override;
    std::vector<SnippetHit> snippet_search(const std::string& text, int limit) override;
    std::vector<Paper> recommend(const std::string& seed_id, int limit) override;
    std::vector<std::optional<Paper>> fetch(const std::vector<std::string>& ids) override;

private:
    nlohmann::json get(const std::string& path, const std::vector<std::pair<std::string, std::string>>& params);
    nlohmann::json post(const std::string& path, const std::vector<std::pair<std::string, std::string>>& params,
                        const nlohmann::json& body);

    Options options_;
    BaseUrl base_;
    Clock& clock_;
    RateLimiter& limiter_;
    std::shared_ptr<ResponseCache> cache_;
};

/// Offline backend over a fixture corpus document:
///
///   {"papers": [{paper_id, title, abstract, year, external_ids}],
///    "search": [{"query": q, "ids": [...]}],          exact, case-insensitive
///    "snippet": [{"contains": s, "ids": [...]}],      first substring match
///    "recommendations": {"<seed>": [...]},
///    "fail": {"search": [q...], "recommend": [seed...], "snippet": bool},
///    "lexical_fallback": true}
///
/// Queries without a table entry fall back to a lexical match (papers ranked
/// by the number of distinct query words they contain, ties in corpus order)
/// unless lexical_fallback is false.
class FixtureScholarClient final : public ScholarClient {
public:
    explicit FixtureScholarClient(const nlohmann::json& corpus);

    std::vector<Paper> search(const std::string& query, int limit) override;
    std::vector<SnippetHit> snippet_search(const std::string& text, int limit) override;
    std::vector<Paper> recommend(const std::string& seed_id, int limit) override;
    std::vector<std::optional<Paper>> fetch(const std::vector<std::string>& ids) override;

    struct Call {
        std::string endpoint;  // search | snippet | recommend | fetch
        std::string argument;
        int limit = 0;
    };
    std::vector<Call> calls() const;

private:
    std::vector<Paper> resolve(const std::vector<std::string>& ids, int limit) const;
    std::vector<Paper> lexical(const std::string& query, int limit) const;
    void log(std::string endpoint, std::string argument, int limit);

    std::vector<Paper> papers_;
    std::map<std::string, std::size_t> index_;
    std::vector<std::pair<std::string, std::vector<std::string>>> search_;
    std::vector<std::pair<std::string, std::vector<std::string>>> snippet_;
    std::map<std::string, std::vector<std::string>> recommendations_;
    std::vector<std::string> fail_search_;
    std::vector<std::string> fail_recommend_;
    bool fail_snippet_ = false;
    bool lexical_fallback_ = true;

    mutable std::mutex mu_;
    std::vector<Call> calls_;
};

}  // namespace novelty
