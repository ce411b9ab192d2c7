#include "novelty/domain.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "novelty/digest.hpp"
#include "novelty/error.hpp"

namespace novelty {

namespace {

bool iequals(std::string_view a, std::string_view b) {
    return a.size() == b.size() &&
           std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
               return std::tolower(static_cast<unsigned char>(x)) ==
                      std::tolower(static_cast<unsigned char>(y));
           });
}

std::vector<std::string> canonical_unique(const std::vector<std::string>& ids) {
    std::vector<std::string> out;
    std::unordered_set<std::string> seen;
    for (const auto& raw : ids) {
        auto id = to_lower(trim(raw));
        if (id.empty()) {
            continue;
        }
        if (seen.insert(id).second) {
            out.push_back(std::move(id));
        }
    }
    return out;
}

}  // namespace

std::string_view to_string(Source source) noexcept {
    switch (source) {
        case Source::seed: return "seed";
        case Source::recommendation: return "recommendation";
        case Source::keyword: return "keyword";
        case Source::snippet: return "snippet";
    }
    return "?";
}

std::string_view to_string(Label label) noexcept {
    return label == Label::novel ? "novel" : "not_novel";
}

std::string_view display_name(Label label) noexcept {
    return label == Label::novel ? "novel" : "not novel";
}

std::string_view to_string(Stage stage) noexcept {
    switch (stage) {
        case Stage::embedding_topN: return "embedding_topN";
        case Stage::facet_topK: return "facet_topK";
        case Stage::relevance_topK: return "relevance_topK";
        case Stage::raw_source: return "raw_source";
    }
    return "?";
}

Source parse_source(std::string_view text) {
    for (auto s : {Source::seed, Source::recommendation, Source::keyword, Source::snippet}) {
        if (iequals(text, to_string(s))) {
            return s;
        }
    }
    throw Error(ErrorKind::InvariantViolation, "unknown source tag '" + std::string(text) + "'");
}

Label parse_label(std::string_view text) {
    auto t = to_lower(trim(text));
    if (t == "novel") {
        return Label::novel;
    }
    if (t == "not_novel" || t == "not novel" || t == "not-novel") {
        return Label::not_novel;
    }
    throw Error(ErrorKind::UnknownClass, "unknown class '" + std::string(text) + "'");
}

Stage parse_stage(std::string_view text) {
    for (auto s : {Stage::embedding_topN, Stage::facet_topK, Stage::relevance_topK, Stage::raw_source}) {
        if (text == to_string(s)) {
            return s;
        }
    }
    throw Error(ErrorKind::InvariantViolation, "unknown stage '" + std::string(text) + "'");
}

const Paper* CandidatePool::find(std::string_view paper_id) const {
    auto it = std::find_if(papers.begin(), papers.end(),
                           [&](const Paper& p) { return p.paper_id == paper_id; });
    return it == papers.end() ? nullptr : &*it;
}

std::vector<std::string> RankedList::ids() const {
    std::vector<std::string> out;
    out.reserve(entries.size());
    for (const auto& e : entries) {
        out.push_back(e.paper_id);
    }
    return out;
}

void PipelineConfig::validate() const {
    auto fail = [](const std::string& msg) { throw Error(ErrorKind::InvalidConfig, msg); };
    if (evidence_size < 1) fail("k (evidence_size) must be >= 1");
    if (evidence_size > filter_size) fail("k (evidence_size) must not exceed N (filter_size)");
    if (window < 2) fail("window must be >= 2");
    if (stride < 1 || stride >= window) fail("stride must satisfy 1 <= stride < window");
    if (n_examples < 0) fail("n_examples must be >= 0");
    if (!(temperature >= 0.0)) fail("temperature must be >= 0");
    if (max_queries < 0) fail("max_queries must be >= 0");
    if (per_query_limit < 0 || snippet_limit < 0 || recommendation_limit < 0) {
        fail("source limits must be >= 0");
    }
    if (!(rate_limit > 0.0)) fail("rate_limit must be > 0");
    if (judge_repair_attempts < 0 || query_repair_attempts < 0) fail("repair attempts must be >= 0");
    if (max_retries < 0) fail("max_retries must be >= 0");
    if (!(retry_backoff_seconds >= 0.0)) fail("retry_backoff_seconds must be >= 0");
    for (const auto* id : {&query_model_id, &rerank_model_id, &judge_model_id, &embedding_model_id}) {
        if (id->empty()) fail("model ids must be non-empty");
    }
}

std::string trim(std::string_view text) {
    auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
    auto begin = std::find_if_not(text.begin(), text.end(), is_space);
    auto end = std::find_if_not(text.rbegin(), std::string_view::reverse_iterator(begin), is_space).base();
    return std::string(begin, end);
}

std::string to_lower(std::string_view text) {
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::size_t utf8_length(std::string_view text) noexcept {
    return static_cast<std::size_t>(std::count_if(text.begin(), text.end(), [](char c) {
        return (static_cast<unsigned char>(c) & 0xC0) != 0x80;
    }));
}

std::string canonical_paper_id(const std::map<std::string, std::string>& external_ids,
                               const std::optional<std::string>& native_id) {
    if (native_id) {
        auto id = to_lower(trim(*native_id));
        if (!id.empty()) {
            return id;
        }
    }
    auto lookup = [&](std::string_view scheme) -> std::string {
        for (const auto& [key, value] : external_ids) {
            if (iequals(key, scheme)) {
                return to_lower(trim(value));
            }
        }
        return {};
    };
    for (std::string_view scheme : {"doi", "arxiv"}) {
        if (auto value = lookup(scheme); !value.empty()) {
            return std::string(scheme) + ":" + value;
        }
    }
    // map order is already lexicographic on the scheme name
    for (const auto& [key, value] : external_ids) {
        auto v = to_lower(trim(value));
        if (!v.empty() && !trim(key).empty()) {
            return to_lower(trim(key)) + ":" + v;
        }
    }
    throw Error(ErrorKind::NoIdentifier, "paper has no usable identifier");
}

Idea validate_idea(std::string_view raw_text,
                   const std::vector<std::string>& seeds,
                   const std::vector<std::string>& exclusions,
                   std::string id) {
    Idea idea;
    idea.text = trim(raw_text);
    if (idea.text.empty()) {
        throw Error(ErrorKind::EmptyIdea, "idea text is empty");
    }
    if (auto n = utf8_length(idea.text); n > kMaxIdeaChars) {
        throw Error(ErrorKind::IdeaTooLong, "idea text has " + std::to_string(n) +
                                                " characters; the limit is " +
                                                std::to_string(kMaxIdeaChars));
    }
    idea.seed_paper_ids = canonical_unique(seeds);
    idea.exclusion_ids = canonical_unique(exclusions);
    idea.id = trim(id);
    if (idea.id.empty()) {
        idea.id = "idea-" + sha256_hex(idea.text).substr(0, 12);
    }
    return idea;
}

RankedList make_ranked_list(std::string idea_id, Stage stage,
                            const std::vector<std::string>& ids,
                            const std::vector<std::optional<double>>& scores) {
    RankedList list;
    list.idea_id = std::move(idea_id);
    list.stage = stage;
    list.entries.reserve(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        list.entries.push_back({static_cast<int>(i + 1), ids[i],
                                i < scores.size() ? scores[i] : std::nullopt});
    }
    return list;
}

void check_invariants(const RankedList& list) {
    auto fail = [](const std::string& msg) { throw Error(ErrorKind::InvariantViolation, msg); };
    std::unordered_set<std::string> seen;
    for (std::size_t i = 0; i < list.entries.size(); ++i) {
        const auto& e = list.entries[i];
        if (e.rank != static_cast<int>(i + 1)) {
            fail("ranked list ranks must be 1..len without gaps");
        }
        if (e.paper_id.empty() || !seen.insert(e.paper_id).second) {
            fail("ranked list paper ids must be unique and non-empty");
        }
        if (list.stage == Stage::embedding_topN) {
            if (!e.score) {
                fail("embedding_topN entries must carry a score");
            }
            if (!(*e.score >= -1.0 - 1e-9 && *e.score <= 1.0 + 1e-9)) {
                fail("embedding_topN scores must lie in [-1, 1]");
            }
            if (i > 0 && *e.score > *list.entries[i - 1].score) {
                fail("embedding_topN scores must be non-increasing");
            }
        }
    }
}

void check_invariants(const Paper& paper) {
    auto fail = [&](const std::string& msg) {
        throw Error(ErrorKind::InvariantViolation, "paper '" + paper.paper_id + "': " + msg);
    };
    if (paper.paper_id.empty()) fail("empty paper_id");
    if (trim(paper.abstract).empty()) fail("empty abstract");
    if (paper.provenance.empty()) fail("empty provenance");
}

void check_invariants(const CandidatePool& pool, const Idea& idea) {
    if (pool.idea_id != idea.id) {
        throw Error(ErrorKind::InvariantViolation, "pool belongs to idea '" + pool.idea_id +
                                                       "', expected '" + idea.id + "'");
    }
    std::unordered_set<std::string> excluded(idea.exclusion_ids.begin(), idea.exclusion_ids.end());
    std::unordered_set<std::string> seen;
    for (const auto& p : pool.papers) {
        check_invariants(p);
        if (!seen.insert(p.paper_id).second) {
            throw Error(ErrorKind::InvariantViolation, "duplicate paper '" + p.paper_id + "' in pool");
        }
        if (excluded.count(p.paper_id) != 0) {
            throw Error(ErrorKind::InvariantViolation, "excluded paper '" + p.paper_id + "' in pool");
        }
    }
}

// --- dataset ---------------------------------------------------------------

LabeledExample DatasetRecord::to_example() const {
    if (!label) {
        throw Error(ErrorKind::DatasetParse,
                    "line " + std::to_string(line) + ": record '" + id + "' has no label");
    }
    return LabeledExample{id, idea_text, top_papers, *label, rationale.value_or("")};
}

namespace {

DatasetRecord parse_record(const nlohmann::json& j, std::size_t line) {
    auto fail = [&](const std::string& msg) -> void {
        throw Error(ErrorKind::DatasetParse, "line " + std::to_string(line) + ": " + msg);
    };
    if (!j.is_object()) fail("record is not a JSON object");
    DatasetRecord r;
    r.line = line;
    if (!j.contains("id") || !j["id"].is_string()) fail("missing string field 'id'");
    r.id = j["id"].get<std::string>();
    if (!j.contains("idea_text") || !j["idea_text"].is_string()) fail("missing string field 'idea_text'");
    r.idea_text = j["idea_text"].get<std::string>();
    if (trim(r.idea_text).empty()) fail("empty idea_text");
    if (j.contains("seed_paper_ids")) {
        if (!j["seed_paper_ids"].is_array()) fail("'seed_paper_ids' must be an array");
        for (const auto& s : j["seed_paper_ids"]) {
            if (!s.is_string()) fail("'seed_paper_ids' entries must be strings");
            r.seed_paper_ids.push_back(s.get<std::string>());
        }
    }
    if (j.contains("top_papers")) {
        if (!j["top_papers"].is_array()) fail("'top_papers' must be an array");
        for (const auto& p : j["top_papers"]) {
            if (!p.is_object() || !p.contains("title") || !p["title"].is_string()) {
                fail("'top_papers' entries need a string 'title'");
            }
            ExamplePaper ep;
            ep.paper_id = p.value("paper_id", "");
            ep.title = p["title"].get<std::string>();
            ep.abstract = p.value("abstract", "");
            r.top_papers.push_back(std::move(ep));
        }
    }
    if (j.contains("label") && !j["label"].is_null()) {
        if (!j["label"].is_string()) fail("'label' must be a string");
        auto raw = j["label"].get<std::string>();
        if (raw != "novel" && raw != "not_novel") fail("label must be \"novel\" or \"not_novel\", got \"" + raw + "\"");
        r.label = parse_label(raw);
    }
    if (j.contains("rationale") && !j["rationale"].is_null()) {
        if (!j["rationale"].is_string()) fail("'rationale' must be a string");
        r.rationale = j["rationale"].get<std::string>();
    }
    return r;
}

}  // namespace

std::vector<DatasetRecord> parse_dataset(std::string_view jsonl) {
    std::vector<DatasetRecord> out;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= jsonl.size()) {
        auto nl = jsonl.find('\n', pos);
        auto line = jsonl.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        ++line_no;
        if (!trim(line).empty()) {
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(line);
            } catch (const nlohmann::json::parse_error& e) {
                throw Error(ErrorKind::DatasetParse,
                            "line " + std::to_string(line_no) + ": invalid JSON (" + e.what() + ")");
            }
            out.push_back(parse_record(j, line_no));
        }
        if (nl == std::string_view::npos) {
            break;
        }
        pos = nl + 1;
    }
    return out;
}

std::vector<DatasetRecord> load_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::DatasetParse, "cannot read dataset '" + path + "'");
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_dataset(buf.str());
}

}  // namespace novelty
