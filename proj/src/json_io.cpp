#include "novelty/json_io.hpp"

#include "novelty/error.hpp"

namespace novelty {

namespace {

[[noreturn]] void bad(const std::string& what) {
    throw Error(ErrorKind::InvariantViolation, "malformed JSON: " + what);
}

std::string require_string(const json& j, const char* key) {
    if (!j.is_object() || !j.contains(key) || !j[key].is_string()) {
        bad(std::string("missing string field '") + key + "'");
    }
    return j[key].get<std::string>();
}

}  // namespace

json to_json(const Paper& paper) {
    json j;
    j["paper_id"] = paper.paper_id;
    j["title"] = paper.title;
    j["abstract"] = paper.abstract;
    j["year"] = paper.year ? json(*paper.year) : json(nullptr);
    j["external_ids"] = paper.external_ids;
    auto& prov = j["provenance"] = json::array();
    for (auto s : paper.provenance) {
        prov.push_back(std::string(to_string(s)));
    }
    return j;
}

Paper paper_from_json(const json& j) {
    Paper p;
    p.paper_id = require_string(j, "paper_id");
    p.title = j.value("title", "");
    p.abstract = j.value("abstract", "");
    if (j.contains("year") && j["year"].is_number_integer()) {
        p.year = j["year"].get<int>();
    }
    if (j.contains("external_ids") && j["external_ids"].is_object()) {
        for (const auto& [k, v] : j["external_ids"].items()) {
            if (v.is_string()) {
                p.external_ids[k] = v.get<std::string>();
            } else if (v.is_number()) {
                p.external_ids[k] = v.dump();
            }
        }
    }
    if (j.contains("provenance")) {
        if (!j["provenance"].is_array()) bad("'provenance' must be an array");
        for (const auto& s : j["provenance"]) {
            if (!s.is_string()) bad("'provenance' entries must be strings");
            p.provenance.insert(parse_source(s.get<std::string>()));
        }
    }
    return p;
}

json to_json(const Idea& idea) {
    return json{{"id", idea.id},
                {"text", idea.text},
                {"seed_paper_ids", idea.seed_paper_ids},
                {"exclusion_ids", idea.exclusion_ids}};
}

Idea idea_from_json(const json& j) {
    Idea idea;
    idea.id = require_string(j, "id");
    idea.text = require_string(j, "text");
    idea.seed_paper_ids = j.value("seed_paper_ids", std::vector<std::string>{});
    idea.exclusion_ids = j.value("exclusion_ids", std::vector<std::string>{});
    return idea;
}

json to_json(const CandidatePool& pool) {
    json j;
    j["idea_id"] = pool.idea_id;
    auto& papers = j["papers"] = json::array();
    for (const auto& p : pool.papers) {
        papers.push_back(to_json(p));
    }
    auto& counts = j["source_counts"] = json::object();
    for (const auto& [s, n] : pool.source_counts) {
        counts[std::string(to_string(s))] = n;
    }
    return j;
}

CandidatePool pool_from_json(const json& j) {
    CandidatePool pool;
    pool.idea_id = require_string(j, "idea_id");
    if (!j.contains("papers") || !j["papers"].is_array()) bad("missing array 'papers'");
    for (const auto& p : j["papers"]) {
        pool.papers.push_back(paper_from_json(p));
    }
    if (j.contains("source_counts") && j["source_counts"].is_object()) {
        for (const auto& [k, v] : j["source_counts"].items()) {
            if (!v.is_number_unsigned()) bad("source counts must be non-negative integers");
            pool.source_counts[parse_source(k)] = v.get<std::size_t>();
        }
    }
    return pool;
}

json to_json(const RankedList& list) {
    json j;
    j["idea_id"] = list.idea_id;
    j["stage"] = std::string(to_string(list.stage));
    auto& entries = j["entries"] = json::array();
    for (const auto& e : list.entries) {
        entries.push_back({{"rank", e.rank},
                           {"paper_id", e.paper_id},
                           {"score", e.score ? json(*e.score) : json(nullptr)}});
    }
    return j;
}

RankedList ranked_list_from_json(const json& j) {
    RankedList list;
    list.idea_id = require_string(j, "idea_id");
    list.stage = parse_stage(require_string(j, "stage"));
    if (!j.contains("entries") || !j["entries"].is_array()) bad("missing array 'entries'");
    for (const auto& e : j["entries"]) {
        RankedEntry entry;
        if (!e.contains("rank") || !e["rank"].is_number_integer()) bad("entry without integer rank");
        entry.rank = e["rank"].get<int>();
        entry.paper_id = require_string(e, "paper_id");
        if (e.contains("score") && e["score"].is_number()) {
            entry.score = e["score"].get<double>();
        }
        list.entries.push_back(std::move(entry));
    }
    return list;
}

json to_json(const PipelineConfig& cfg) {
    return json{
        {"N", cfg.filter_size},
        {"k", cfg.evidence_size},
        {"n_examples", cfg.n_examples},
        {"example_seed", cfg.example_seed},
        {"query_model_id", cfg.query_model_id},
        {"rerank_model_id", cfg.rerank_model_id},
        {"judge_model_id", cfg.judge_model_id},
        {"embedding_model_id", cfg.embedding_model_id},
        {"window", cfg.window},
        {"stride", cfg.stride},
        {"max_queries", cfg.max_queries},
        {"per_query_limit", cfg.per_query_limit},
        {"snippet_limit", cfg.snippet_limit},
        {"recommendation_limit", cfg.recommendation_limit},
        {"temperature", cfg.temperature},
        {"rate_limit", cfg.rate_limit},
        {"judge_repair_attempts", cfg.judge_repair_attempts},
        {"query_repair_attempts", cfg.query_repair_attempts},
        {"max_retries", cfg.max_retries},
        {"retry_backoff_seconds", cfg.retry_backoff_seconds},
        {"judge_prompt_char_budget", cfg.judge_prompt_char_budget},
    };
}

json to_json(const LabeledExample& example) {
    json papers = json::array();
    for (const auto& p : example.top_papers) {
        papers.push_back({{"paper_id", p.paper_id}, {"title", p.title}, {"abstract", p.abstract}});
    }
    return json{{"id", example.id},
                {"idea_text", example.idea_text},
                {"top_papers", papers},
                {"label", std::string(to_string(example.label))},
                {"rationale", example.rationale}};
}

std::string canonical_dump(const json& j) {
    // nlohmann::json objects are std::map backed, so keys serialize sorted.
    return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

}  // namespace novelty
