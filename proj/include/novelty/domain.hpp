#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace novelty {

inline constexpr std::size_t kMaxIdeaChars = 20'000;

enum class Source { seed, recommendation, keyword, snippet };
enum class Label { novel, not_novel };
enum class Stage { embedding_topN, facet_topK, relevance_topK, raw_source };

std::string_view to_string(Source source) noexcept;
std::string_view to_string(Label label) noexcept;
std::string_view to_string(Stage stage) noexcept;
/// "novel" / "not novel", the form printed to users and demanded from the judge.
std::string_view display_name(Label label) noexcept;

Source parse_source(std::string_view text);
/// Accepts "novel", "not_novel", "not novel", "not-novel" in any case.
Label parse_label(std::string_view text);
Stage parse_stage(std::string_view text);

struct Idea {
    std::string id;
    std::string text;
    std::vector<std::string> seed_paper_ids;
    std::vector<std::string> exclusion_ids;
};

struct Paper {
    std::string paper_id;
    std::string title;
    std::string abstract;
    std::optional<int> year;
    std::map<std::string, std::string> external_ids;
    std::set<Source> provenance;
};

struct CandidatePool {
    std::string idea_id;
    std::vector<Paper> papers;
    /// Pre-dedup tallies per source.
    std::map<Source, std::size_t> source_counts;

    const Paper* find(std::string_view paper_id) const;
};

struct RankedEntry {
    int rank = 0;  // 1-based
    std::string paper_id;
    std::optional<double> score;

    bool operator==(const RankedEntry&) const = default;
};

struct RankedList {
    std::string idea_id;
    Stage stage = Stage::raw_source;
    std::vector<RankedEntry> entries;

    std::vector<std::string> ids() const;
    std::size_t size() const noexcept { return entries.size(); }
    bool empty() const noexcept { return entries.empty(); }
};

struct Verdict {
    Label decision = Label::novel;
    std::string rationale;
    std::vector<std::string> cited_paper_ids;
};

struct ExamplePaper {
    std::string paper_id;
    std::string title;
    std::string abstract;
};

struct LabeledExample {
    std::string id;
    std::string idea_text;
    std::vector<ExamplePaper> top_papers;
    Label label = Label::novel;
    std::string rationale;
};

/// Every tunable of the pipeline. Field names double as config-file keys;
/// `N` and `k` are accepted as aliases of filter_size and evidence_size.
struct PipelineConfig {
    int filter_size = 100;   // N: papers kept by the embedding filter
    int evidence_size = 10;  // k: papers handed to the judge
    int n_examples = 15;
    std::uint64_t example_seed = 100;

    std::string query_model_id = "gpt-4o";
    std::string rerank_model_id = "gpt-4o";
    std::string judge_model_id = "gpt-4o";
    std::string embedding_model_id = "specter2";

    int window = 20;
    int stride = 10;

    int max_queries = 10;
    int per_query_limit = 20;
    int snippet_limit = 25;
    int recommendation_limit = 50;

    double temperature = 0.0;
    double rate_limit = 1.0;  // requests per second per host
    int judge_repair_attempts = 1;
    int query_repair_attempts = 1;

    int max_retries = 3;
    double retry_backoff_seconds = 1.0;  // first backoff; doubles per retry
    std::size_t judge_prompt_char_budget = 200'000;

    /// Throws Error(InvalidConfig) naming the first violated constraint.
    void validate() const;
};

/// Preference order: native id, then DOI, then arXiv, then any remaining
/// scheme in lexicographic order. Result is trimmed and lowercased.
std::string canonical_paper_id(const std::map<std::string, std::string>& external_ids,
                               const std::optional<std::string>& native_id = std::nullopt);

/// Builds an Idea from raw user input. Seeds and exclusions are canonicalized
/// (trimmed, lowercased) and deduplicated keeping first occurrence. An empty
/// `id` is replaced by a content-derived one.
Idea validate_idea(std::string_view raw_text,
                   const std::vector<std::string>& seeds,
                   const std::vector<std::string>& exclusions,
                   std::string id = {});

RankedList make_ranked_list(std::string idea_id, Stage stage,
                            const std::vector<std::string>& ids,
                            const std::vector<std::optional<double>>& scores = {});

/// Throw Error(InvariantViolation) on the first broken invariant.
void check_invariants(const RankedList& list);
void check_invariants(const CandidatePool& pool, const Idea& idea);
void check_invariants(const Paper& paper);

std::string trim(std::string_view text);
std::string to_lower(std::string_view text);
std::size_t utf8_length(std::string_view text) noexcept;

// --- JSONL dataset ---------------------------------------------------------

struct DatasetRecord {
    std::string id;
    std::string idea_text;
    std::vector<std::string> seed_paper_ids;
    std::vector<ExamplePaper> top_papers;
    std::optional<Label> label;
    std::optional<std::string> rationale;
    std::size_t line = 0;  // 1-based source line

    /// Throws when the record is unlabeled.
    LabeledExample to_example() const;
};

/// Parses one record per non-blank line. Throws Error(DatasetParse) with the
/// offending line number in the message.
std::vector<DatasetRecord> parse_dataset(std::string_view jsonl);
std::vector<DatasetRecord> load_dataset(const std::string& path);

}  // namespace novelty
