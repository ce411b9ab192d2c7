#include "novelty/scholar.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "http.hpp"
#include "novelty/digest.hpp"
#include "novelty/json_io.hpp"

namespace novelty {

namespace {

constexpr const char* kPaperFields = "paperId,title,abstract,externalIds,year";
constexpr std::size_t kBatchSize = 500;

std::string json_scalar(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    return {};
}

std::vector<std::string> words_of(std::string_view text) {
    std::vector<std::string> out;
    std::string w;
    for (char c : text) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            w.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else if (!w.empty()) {
            out.push_back(std::move(w));
            w.clear();
        }
    }
    if (!w.empty()) out.push_back(std::move(w));
    return out;
}

}  // namespace

Paper paper_from_s2(const json& j) {
    Paper p;
    std::optional<std::string> native;
    if (j.contains("paperId") && j["paperId"].is_string()) {
        native = j["paperId"].get<std::string>();
    }
    if (j.contains("externalIds") && j["externalIds"].is_object()) {
        for (const auto& [k, v] : j["externalIds"].items()) {
            if (auto s = json_scalar(v); !s.empty()) p.external_ids[k] = s;
        }
    }
    if (j.contains("corpusId")) {
        if (auto s = json_scalar(j["corpusId"]); !s.empty()) p.external_ids.emplace("CorpusId", s);
    }
    p.paper_id = canonical_paper_id(p.external_ids, native);
    if (j.contains("title") && j["title"].is_string()) p.title = j["title"].get<std::string>();
    if (j.contains("abstract") && j["abstract"].is_string()) p.abstract = j["abstract"].get<std::string>();
    if (j.contains("year") && j["year"].is_number_integer()) p.year = j["year"].get<int>();
    return p;
}

std::string s2_identifier(const std::string& canonical_id) {
    auto colon = canonical_id.find(':');
    if (colon == std::string::npos) return canonical_id;
    auto scheme = canonical_id.substr(0, colon);
    auto rest = canonical_id.substr(colon + 1);
    if (scheme == "doi") return "DOI:" + rest;
    if (scheme == "arxiv") return "ARXIV:" + rest;
    if (scheme == "corpusid") return "CorpusId:" + rest;
    if (scheme == "pubmed") return "PMID:" + rest;
    if (scheme == "mag") return "MAG:" + rest;
    if (scheme == "acl") return "ACL:" + rest;
    return canonical_id;
}

// --- HTTP ------------------------------------------------------------------

HttpScholarClient::HttpScholarClient(Options options, Clock& clock, RateLimiter& limiter,
                                     std::shared_ptr<ResponseCache> cache)
    : options_(std::move(options)),
      base_(BaseUrl::parse(options_.base_url)),
      clock_(clock),
      limiter_(limiter),
      cache_(std::move(cache)) {}

namespace {

json parse_or_raise(const http::Response& res, const std::string& what) {
    if (res.status == 0) {
        throw TransientError(ErrorKind::HostError, what + ": connection failed (" + res.error + ")");
    }
    const auto detail = what + ": HTTP " + std::to_string(res.status);
    if (res.status == 429) throw TransientError(ErrorKind::QuotaExceeded, detail + " (rate limited)");
    if (res.status >= 500) throw TransientError(ErrorKind::HostError, detail);
    if (res.status == 401 || res.status == 403) throw Error(ErrorKind::AuthError, detail);
    if (res.status != 200) throw Error(ErrorKind::HostError, detail + " " + res.body.substr(0, 200));
    auto j = json::parse(res.body, nullptr, false);
    if (j.is_discarded()) throw TransientError(ErrorKind::HostError, what + ": response is not JSON");
    return j;
}

}  // namespace

json HttpScholarClient::get(const std::string& path, const std::vector<std::pair<std::string, std::string>>& params) {
    auto key = sha256_hex(canonical_dump(json{{"kind", "s2-get"}, {"origin", base_.origin + base_.prefix},
                                              {"path", path}, {"params", params}}));
    if (cache_) {
        if (auto hit = cache_->get(key)) {
            auto j = json::parse(*hit, nullptr, false);
            if (!j.is_discarded()) return j;
        }
    }
    http::Headers headers;
    if (!options_.api_key.empty()) headers["x-api-key"] = options_.api_key;
    auto j = with_retries(clock_, options_.retry, [&] {
        limiter_.acquire(base_.host());
        return parse_or_raise(http::get(base_, path, params, headers, options_.timeout_seconds), "GET " + path);
    });
    if (cache_) cache_->put(key, j.dump());
    return j;
}

json HttpScholarClient::post(const std::string& path, const std::vector<std::pair<std::string, std::string>>& params,
                             const json& body) {
    auto key = sha256_hex(canonical_dump(json{{"kind", "s2-post"}, {"origin", base_.origin + base_.prefix},
                                              {"path", path}, {"params", params}, {"body", body}}));
    if (cache_) {
        if (auto hit = cache_->get(key)) {
            auto j = json::parse(*hit, nullptr, false);
            if (!j.is_discarded()) return j;
        }
    }
    http::Headers headers;
    if (!options_.api_key.empty()) headers["x-api-key"] = options_.api_key;
    auto j = with_retries(clock_, options_.retry, [&] {
        limiter_.acquire(base_.host());
        return parse_or_raise(http::post_json(base_, path, params, headers, body.dump(), options_.timeout_seconds),
                              "POST " + path);
    });
    if (cache_) cache_->put(key, j.dump());
    return j;
}

std::vector<Paper> HttpScholarClient::search(const std::string& query, int limit) {
    if (limit <= 0) return {};
    auto j = get("/graph/v1/paper/search",
                 {{"query", query}, {"fields", "title,abstract,externalIds,year"}, {"limit", std::to_string(limit)}});
    std::vector<Paper> out;
    if (j.contains("data") && j["data"].is_array()) {
        for (const auto& item : j["data"]) {
            try {
                out.push_back(paper_from_s2(item));
            } catch (const Error&) {
                // hit without any identifier; unusable
            }
        }
    }
    if (out.size() > static_cast<std::size_t>(limit)) out.resize(static_cast<std::size_t>(limit));
    return out;
}

std::vector<SnippetHit> HttpScholarClient::snippet_search(const std::string& text, int limit) {
    if (limit <= 0) return {};
    auto j = get("/graph/v1/snippet/search", {{"query", text}, {"limit", std::to_string(limit)}});
    std::vector<SnippetHit> out;
    if (j.contains("data") && j["data"].is_array()) {
        for (const auto& item : j["data"]) {
            if (!item.contains("paper") || !item["paper"].is_object()) continue;
            SnippetHit hit;
            try {
                hit.paper = paper_from_s2(item["paper"]);
            } catch (const Error&) {
                continue;
            }
            if (item.contains("snippet") && item["snippet"].is_object()) {
                hit.snippet_text = item["snippet"].value("text", "");
            }
            out.push_back(std::move(hit));
        }
    }
    return out;
}

std::vector<Paper> HttpScholarClient::recommend(const std::string& seed_id, int limit) {
    if (limit <= 0) return {};
    auto j = get("/recommendations/v1/papers/forpaper/" + http::url_encode(s2_identifier(seed_id)),
                 {{"fields", "title,abstract,externalIds,year"}, {"limit", std::to_string(limit)}});
    std::vector<Paper> out;
    if (j.contains("recommendedPapers") && j["recommendedPapers"].is_array()) {
        for (const auto& item : j["recommendedPapers"]) {
            try {
                out.push_back(paper_from_s2(item));
            } catch (const Error&) {
            }
        }
    }
    if (out.size() > static_cast<std::size_t>(limit)) out.resize(static_cast<std::size_t>(limit));
    return out;
}

std::vector<std::optional<Paper>> HttpScholarClient::fetch(const std::vector<std::string>& ids) {
    std::vector<std::optional<Paper>> out;
    for (std::size_t start = 0; start < ids.size(); start += kBatchSize) {
        json body{{"ids", json::array()}};
        for (std::size_t i = start; i < std::min(ids.size(), start + kBatchSize); ++i) {
            body["ids"].push_back(s2_identifier(ids[i]));
        }
        const auto batch = body["ids"].size();
        auto j = post("/graph/v1/paper/batch", {{"fields", kPaperFields}}, body);
        for (std::size_t i = 0; i < batch; ++i) {
            std::optional<Paper> p;
            if (j.is_array() && i < j.size() && j[i].is_object()) {
                try {
                    p = paper_from_s2(j[i]);
                } catch (const Error&) {
                }
            }
            out.push_back(std::move(p));
        }
    }
    return out;
}

// --- fixture ---------------------------------------------------------------

FixtureScholarClient::FixtureScholarClient(const json& corpus) {
    if (!corpus.is_object() || !corpus.contains("papers") || !corpus["papers"].is_array()) {
        throw Error(ErrorKind::InvalidConfig, "fixture corpus needs a 'papers' array");
    }
    for (const auto& pj : corpus["papers"]) {
        Paper p;
        std::optional<std::string> native;
        if (pj.contains("paper_id")) native = pj["paper_id"].get<std::string>();
        if (pj.contains("external_ids")) {
            for (const auto& [k, v] : pj["external_ids"].items()) p.external_ids[k] = json_scalar(v);
        }
        p.paper_id = canonical_paper_id(p.external_ids, native);
        p.title = pj.value("title", "");
        p.abstract = pj.contains("abstract") && pj["abstract"].is_string() ? pj["abstract"].get<std::string>() : "";
        if (pj.contains("year") && pj["year"].is_number_integer()) p.year = pj["year"].get<int>();
        index_[p.paper_id] = papers_.size();
        papers_.push_back(std::move(p));
    }
    auto table = [&](const char* key, const char* field) {
        std::vector<std::pair<std::string, std::vector<std::string>>> out;
        if (corpus.contains(key)) {
            for (const auto& e : corpus[key]) {
                out.emplace_back(e.at(field).get<std::string>(), e.at("ids").get<std::vector<std::string>>());
            }
        }
        return out;
    };
    search_ = table("search", "query");
    snippet_ = table("snippet", "contains");
    if (corpus.contains("recommendations")) {
        for (const auto& [seed, ids] : corpus["recommendations"].items()) {
            recommendations_[to_lower(trim(seed))] = ids.get<std::vector<std::string>>();
        }
    }
    if (corpus.contains("fail")) {
        const auto& f = corpus["fail"];
        fail_search_ = f.value("search", std::vector<std::string>{});
        fail_recommend_ = f.value("recommend", std::vector<std::string>{});
        fail_snippet_ = f.value("snippet", false);
    }
    lexical_fallback_ = corpus.value("lexical_fallback", true);
}

void FixtureScholarClient::log(std::string endpoint, std::string argument, int limit) {
    std::lock_guard lock(mu_);
    calls_.push_back({std::move(endpoint), std::move(argument), limit});
}

std::vector<FixtureScholarClient::Call> FixtureScholarClient::calls() const {
    std::lock_guard lock(mu_);
    return calls_;
}

std::vector<Paper> FixtureScholarClient::resolve(const std::vector<std::string>& ids, int limit) const {
    std::vector<Paper> out;
    for (const auto& raw : ids) {
        if (static_cast<int>(out.size()) >= limit) break;
        if (auto it = index_.find(to_lower(trim(raw))); it != index_.end()) {
            out.push_back(papers_[it->second]);
        }
    }
    return out;
}

std::vector<Paper> FixtureScholarClient::lexical(const std::string& query, int limit) const {
    if (!lexical_fallback_) return {};
    auto qwords = words_of(query);
    std::set<std::string> terms;
    for (auto& w : qwords) {
        if (w.size() >= 3) terms.insert(w);
    }
    std::vector<std::pair<std::size_t, std::size_t>> scored;  // (score, corpus index)
    for (std::size_t i = 0; i < papers_.size(); ++i) {
        auto pw = words_of(papers_[i].title + " " + papers_[i].abstract);
        std::set<std::string> have(pw.begin(), pw.end());
        std::size_t score = 0;
        for (const auto& t : terms) score += have.count(t);
        if (score > 0) scored.emplace_back(score, i);
    }
    std::stable_sort(scored.begin(), scored.end(), [](auto a, auto b) { return a.first > b.first; });
    std::vector<Paper> out;
    for (const auto& [score, i] : scored) {
        if (static_cast<int>(out.size()) >= limit) break;
        out.push_back(papers_[i]);
    }
    return out;
}

std::vector<Paper> FixtureScholarClient::search(const std::string& query, int limit) {
    log("search", query, limit);
    auto key = to_lower(trim(query));
    if (std::find(fail_search_.begin(), fail_search_.end(), query) != fail_search_.end()) {
        throw Error(ErrorKind::HostError, "fixture: search for '" + query + "' fails");
    }
    for (const auto& [q, ids] : search_) {
        if (to_lower(trim(q)) == key) return resolve(ids, limit);
    }
    return lexical(query, limit);
}

std::vector<SnippetHit> FixtureScholarClient::snippet_search(const std::string& text, int limit) {
    log("snippet", text, limit);
    if (fail_snippet_) {
        throw Error(ErrorKind::HostError, "fixture: snippet search fails");
    }
    std::vector<Paper> papers;
    bool matched = false;
    for (const auto& [needle, ids] : snippet_) {
        if (text.find(needle) != std::string::npos) {
            papers = resolve(ids, limit);
            matched = true;
            break;
        }
    }
    if (!matched) papers = lexical(text, limit);
    std::vector<SnippetHit> out;
    for (auto& p : papers) {
        out.push_back({std::move(p), {}});
    }
    return out;
}

std::vector<Paper> FixtureScholarClient::recommend(const std::string& seed_id, int limit) {
    log("recommend", seed_id, limit);
    auto key = to_lower(trim(seed_id));
    if (std::find(fail_recommend_.begin(), fail_recommend_.end(), key) != fail_recommend_.end()) {
        throw Error(ErrorKind::HostError, "fixture: recommendations for '" + seed_id + "' fail (HTTP 404)");
    }
    auto it = recommendations_.find(key);
    if (it == recommendations_.end()) {
        throw Error(ErrorKind::HostError, "fixture: unknown seed paper '" + seed_id + "' (HTTP 404)");
    }
    return resolve(it->second, limit);
}

std::vector<std::optional<Paper>> FixtureScholarClient::fetch(const std::vector<std::string>& ids) {
    std::string joined;
    for (const auto& id : ids) joined += (joined.empty() ? "" : ",") + id;
    log("fetch", joined, static_cast<int>(ids.size()));
    std::vector<std::optional<Paper>> out;
    for (const auto& id : ids) {
        auto it = index_.find(to_lower(trim(id)));
        out.push_back(it == index_.end() ? std::nullopt : std::optional<Paper>(papers_[it->second]));
    }
    return out;
}

}  // namespace novelty
