#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "novelty/domain.hpp"
#include "novelty/gateway.hpp"

namespace novelty {

/// SplitMix64 (Steele, Lea & Flood 2014). Small, fully specified, and easy to
/// reimplement elsewhere, which keeps example selection portable.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next();
    /// Uniform in [0, bound) by rejection sampling. bound must be > 0.
    std::uint64_t bounded(std::uint64_t bound);

private:
    std::uint64_t state_;
};

/// Seeded sample without replacement: the first n steps of a Fisher-Yates
/// shuffle (swap i with i + bounded(len - i)), selection order preserved.
/// Throws NotEnoughExamples when n exceeds the training set.
std::vector<LabeledExample> select_examples(const std::vector<LabeledExample>& train_set, int n_examples,
                                            std::uint64_t seed);

/// Renders the few-shot judgment request. `papers` must hold every evidence id.
ChatRequest build_judge_prompt(const Idea& idea, const RankedList& evidence, const std::map<std::string, Paper>& papers,
                               const std::vector<LabeledExample>& examples, const PipelineConfig& cfg);

/// Number of rendered in-context example blocks in a judge request.
std::size_t count_example_blocks(const ChatRequest& req);

struct ParsedVerdict {
    Verdict verdict;
    std::vector<std::string> warnings;
};

/// Reads "DECISION: novel|not novel" and "RATIONALE: ..." (case-insensitive).
/// Bracketed numbers in the rationale map to evidence ranks; numbers outside
/// the evidence are dropped with a warning. Throws UnparseableVerdict; never
/// guesses a label.
ParsedVerdict parse_verdict(std::string_view text, const RankedList& evidence);

struct JudgeOutcome {
    Verdict verdict;
    std::vector<std::string> example_ids;  // examples actually rendered
    std::size_t examples_dropped = 0;      // removed to fit the context budget
    int repair_attempts = 0;
    std::string request_digest;            // of the first successful request
    std::vector<std::string> warnings;
};

/// One judgment: builds the prompt (dropping trailing examples to fit
/// cfg.judge_prompt_char_budget, and one more per ContextOverflow from the
/// provider), calls the judge model, repairs up to cfg.judge_repair_attempts
/// times, then throws UnparseableVerdict.
JudgeOutcome judge(Gateway& gateway, const Idea& idea, const RankedList& evidence,
                   const std::map<std::string, Paper>& papers, std::vector<LabeledExample> examples,
                   const PipelineConfig& cfg);

}  // namespace novelty
