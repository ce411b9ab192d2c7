#pragma once

#include <string_view>

// Versioned prompt templates. A template id changes whenever its text does;
// reports record the ids they were produced with.
namespace novelty::prompts {

inline constexpr std::string_view kQueryTemplateId = "query-v1";
inline constexpr std::string_view kRerankFacetTemplateId = "rerank-facet-v1";
inline constexpr std::string_view kRerankRelevanceTemplateId = "rerank-relevance-v1";
inline constexpr std::string_view kJudgeTemplateId = "judge-v1";

// --- query generation ------------------------------------------------------

inline constexpr std::string_view kQuerySystem =
    "You are a research assistant who turns a research idea into literature search queries.";

inline constexpr std::string_view kQueryUser = R"(Research idea:
{idea}

Write search queries for finding prior work that overlaps with this idea.
Produce up to {max_queries} queries in total:
- "keywords": short keyword queries covering the idea's problem, method, evaluation and application domain;
- "titles": plausible titles of papers that would already have done this work.

Respond with only a JSON object of the form {"keywords": ["..."], "titles": ["..."]}.)";

inline constexpr std::string_view kQueryRepair =
    "Your reply could not be parsed. Respond with only the JSON object "
    R"({"keywords": [...], "titles": [...]} and nothing else.)";

// --- listwise rerank -------------------------------------------------------

inline constexpr std::string_view kRerankSystem =
    "You are an expert research assistant that ranks scientific papers by how closely they "
    "overlap with a research idea.";

/// Everything outside {criteria} is shared by both rerank modes.
inline constexpr std::string_view kRerankUser = R"(I will give you {count} papers, each marked with a numeric identifier in brackets, and a research idea.

Research idea:
{idea}

Papers:

{papers}
Ranking criteria:
{criteria}

Rank all {count} papers above from most to least relevant. Respond with only the ranking, using the identifiers in the form [i] > [j] > ... > [m], with no other words or explanation.)";

inline constexpr std::string_view kFacetCriteria =
    R"(Compare each paper with the idea along its key facets: purpose (the problem addressed), mechanism (the technical approach), evaluation (how it is validated) and application domain. Infer these facets from the idea yourself. Order the papers by these priorities:
1. First, papers that match all key facets of the idea.
2. Then, papers that align with the application domain and purpose of the idea.
3. Next, papers that share similarities in purpose, mechanism, or evaluation.
4. Last, papers that only partially match or address related facets.)";

inline constexpr std::string_view kRelevanceCriteria =
    "Order the papers by their overall relevance to the research idea.";

// --- judge -----------------------------------------------------------------

inline constexpr std::string_view kJudgeSystem =
    R"(You are an expert reviewer who decides whether a research idea is novel with respect to a set of retrieved papers.

An idea is novel if it differs from all of the retrieved papers in at least one core facet: its purpose (a distinct objective), its mechanism (a distinct technical approach), or its evaluation (a distinct validation method). An idea is also novel if it uniquely combines these facets, or if it applies them to a new application domain. Otherwise the idea is not novel.

Base your decision only on the idea and the numbered papers you are given. In your rationale, refer to papers by their number in brackets, for example [2].)";

inline constexpr std::string_view kJudgeExamplesHeader = "Here are expert-labeled examples.";
/// One per in-context example; followed by the example's 1-based number.
inline constexpr std::string_view kJudgeExampleDelimiter = "### Example ";
inline constexpr std::string_view kJudgeQueryHeader = "## Idea to assess";
inline constexpr std::string_view kJudgePapersHeader = "## Most relevant papers";
inline constexpr std::string_view kJudgeFormatHeader = "## Answer format";

inline constexpr std::string_view kJudgeFormat = R"(Answer in exactly this format:
DECISION: novel | not novel
RATIONALE: <your reasoning, citing the papers by number such as [1]>)";

inline constexpr std::string_view kJudgeRepair =
    R"(Your reply did not follow the required format. Answer again in exactly this format:
DECISION: novel | not novel
RATIONALE: <your reasoning, citing the papers by number such as [1]>)";

}  // namespace novelty::prompts
