#include "novelty/judge.hpp"

#include <algorithm>
#include <cctype>
#include <limits>
#include <regex>

#include <spdlog/spdlog.h>

#include "novelty/prompts.hpp"
#include "text.hpp"

namespace novelty {

std::uint64_t SplitMix64::next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t SplitMix64::bounded(std::uint64_t bound) {
    const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
    const std::uint64_t limit = max - (max % bound);
    for (;;) {
        std::uint64_t x = next();
        if (x < limit) return x % bound;
    }
}

std::vector<LabeledExample> select_examples(const std::vector<LabeledExample>& train_set, int n_examples,
                                            std::uint64_t seed) {
    if (n_examples < 0) {
        throw Error(ErrorKind::InvalidConfig, "n_examples must be >= 0");
    }
    const auto n = static_cast<std::size_t>(n_examples);
    if (n > train_set.size()) {
        throw Error(ErrorKind::NotEnoughExamples, "asked for " + std::to_string(n) + " in-context examples but only " +
                                                      std::to_string(train_set.size()) + " are available");
    }
    std::vector<std::size_t> idx(train_set.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    SplitMix64 rng(seed);
    std::vector<LabeledExample> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto j = i + static_cast<std::size_t>(rng.bounded(idx.size() - i));
        std::swap(idx[i], idx[j]);
        out.push_back(train_set[idx[i]]);
    }
    return out;
}

namespace {

void append_paper(std::string& out, std::size_t number, std::string_view title, std::string_view abstract) {
    out += "[" + std::to_string(number) + "] Title: " + text::collapse_whitespace(title) + "\n";
    auto a = text::collapse_whitespace(abstract);
    if (!a.empty()) out += "Abstract: " + a + "\n";
    out += "\n";
}

std::string render_example(std::size_t number, const LabeledExample& ex) {
    std::string out;
    out += std::string(prompts::kJudgeExampleDelimiter) + std::to_string(number) + "\n";
    out += "Idea:\n" + trim(ex.idea_text) + "\n\n";
    out += "Most relevant papers:\n";
    for (std::size_t i = 0; i < ex.top_papers.size(); ++i) {
        append_paper(out, i + 1, ex.top_papers[i].title, ex.top_papers[i].abstract);
    }
    if (ex.top_papers.empty()) out += "(none)\n\n";
    out += "Label: " + std::string(display_name(ex.label)) + "\n";
    out += "Reasoning: " + text::collapse_whitespace(ex.rationale) + "\n\n";
    return out;
}

std::size_t prompt_chars(const ChatRequest& req) {
    std::size_t n = 0;
    for (const auto& m : req.messages) n += m.content.size();
    return n;
}

}  // namespace

ChatRequest build_judge_prompt(const Idea& idea, const RankedList& evidence, const std::map<std::string, Paper>& papers,
                               const std::vector<LabeledExample>& examples, const PipelineConfig& cfg) {
    if (evidence.empty()) {
        throw Error(ErrorKind::InvariantViolation, "judge needs at least one evidence paper");
    }
    std::string user;
    if (!examples.empty()) {
        user += std::string(prompts::kJudgeExamplesHeader) + "\n\n";
        for (std::size_t i = 0; i < examples.size(); ++i) {
            user += render_example(i + 1, examples[i]);
        }
    }
    user += std::string(prompts::kJudgeQueryHeader) + "\n" + trim(idea.text) + "\n\n";
    user += std::string(prompts::kJudgePapersHeader) + "\n";
    for (const auto& e : evidence.entries) {
        auto it = papers.find(e.paper_id);
        if (it == papers.end()) {
            throw Error(ErrorKind::InvariantViolation, "evidence paper '" + e.paper_id + "' has no metadata");
        }
        append_paper(user, static_cast<std::size_t>(e.rank), it->second.title, it->second.abstract);
    }
    user += std::string(prompts::kJudgeFormatHeader) + "\n" + std::string(prompts::kJudgeFormat);

    ChatRequest req;
    req.model_id = cfg.judge_model_id;
    req.temperature = cfg.temperature;
    req.messages.push_back({Role::system, std::string(prompts::kJudgeSystem)});
    req.messages.push_back({Role::user, std::move(user)});
    return req;
}

std::size_t count_example_blocks(const ChatRequest& req) {
    const std::string needle = "\n" + std::string(prompts::kJudgeExampleDelimiter);
    std::size_t n = 0;
    for (const auto& m : req.messages) {
        if (m.role != Role::user) continue;
        std::string body = "\n" + m.content;
        for (auto pos = body.find(needle); pos != std::string::npos; pos = body.find(needle, pos + 1)) ++n;
    }
    return n;
}

ParsedVerdict parse_verdict(std::string_view text, const RankedList& evidence) {
    const std::string lower = to_lower(text);
    std::optional<Label> decision;
    std::size_t line_start = 0;
    while (line_start <= lower.size() && !decision) {
        auto line_end = lower.find('\n', line_start);
        if (line_end == std::string::npos) line_end = lower.size();
        std::string line = lower.substr(line_start, line_end - line_start);
        line.erase(std::remove(line.begin(), line.end(), '*'), line.end());
        line = trim(line);
        while (!line.empty() && line.front() == '#') line = trim(line.substr(1));
        if (line.rfind("decision:", 0) == 0) {
            std::string value = trim(line.substr(9));
            for (char& c : value) {
                if (c == '_' || c == '-') c = ' ';
            }
            if (value.rfind("not novel", 0) == 0) {
                decision = Label::not_novel;
            } else if (value.rfind("novel", 0) == 0) {
                decision = Label::novel;
            } else {
                throw Error(ErrorKind::UnparseableVerdict, "DECISION line holds neither 'novel' nor 'not novel'");
            }
        }
        line_start = line_end + 1;
    }
    if (!decision) {
        throw Error(ErrorKind::UnparseableVerdict, "reply has no DECISION line");
    }

    auto rpos = lower.find("rationale:");
    if (rpos == std::string::npos) {
        throw Error(ErrorKind::UnparseableVerdict, "reply has no RATIONALE");
    }
    std::string rationale = trim(text.substr(rpos + 10));
    while (!rationale.empty() && rationale.front() == '*') rationale = trim(rationale.substr(1));
    if (rationale.empty()) {
        throw Error(ErrorKind::UnparseableVerdict, "RATIONALE is empty");
    }

    ParsedVerdict out;
    out.verdict.decision = *decision;
    out.verdict.rationale = rationale;

    static const std::regex cite(R"(\[(\s*\d+(?:\s*,\s*\d+)*\s*)\])");
    static const std::regex number(R"(\d+)");
    std::set<std::string> seen;
    for (std::sregex_iterator it(rationale.begin(), rationale.end(), cite), end; it != end; ++it) {
        const std::string group = (*it)[1].str();
        for (std::sregex_iterator n(group.begin(), group.end(), number); n != end; ++n) {
            const std::string digits = n->str();
            const long rank = digits.size() > 6 ? -1 : std::stol(digits);
            if (rank < 1 || rank > static_cast<long>(evidence.size())) {
                out.warnings.push_back("rationale cites [" + digits + "], which is not an evidence paper");
                continue;
            }
            const auto& id = evidence.entries[static_cast<std::size_t>(rank - 1)].paper_id;
            if (seen.insert(id).second) out.verdict.cited_paper_ids.push_back(id);
        }
    }
    if (out.verdict.cited_paper_ids.empty()) {
        out.warnings.push_back("rationale cites no evidence paper");
    }
    return out;
}

JudgeOutcome judge(Gateway& gateway, const Idea& idea, const RankedList& evidence,
                   const std::map<std::string, Paper>& papers, std::vector<LabeledExample> examples,
                   const PipelineConfig& cfg) {
    JudgeOutcome out;
    ChatRequest req;
    std::string reply;
    for (;;) {
        req = build_judge_prompt(idea, evidence, papers, examples, cfg);
        if (prompt_chars(req) > cfg.judge_prompt_char_budget && !examples.empty()) {
            examples.pop_back();
            ++out.examples_dropped;
            continue;
        }
        try {
            reply = gateway.chat(req).text;
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::ContextOverflow || examples.empty()) throw;
            examples.pop_back();
            ++out.examples_dropped;
            continue;
        }
        break;
    }
    if (out.examples_dropped > 0) {
        out.warnings.push_back("dropped " + std::to_string(out.examples_dropped) +
                               " in-context example(s) to fit the context budget");
        spdlog::warn("judge for {}: {}", idea.id, out.warnings.back());
    }
    for (const auto& ex : examples) out.example_ids.push_back(ex.id);
    out.request_digest = request_digest(req);

    for (int attempt = 0;; ++attempt) {
        try {
            auto parsed = parse_verdict(reply, evidence);
            out.verdict = std::move(parsed.verdict);
            out.repair_attempts = attempt;
            for (auto& w : parsed.warnings) {
                spdlog::warn("judge for {}: {}", idea.id, w);
                out.warnings.push_back(std::move(w));
            }
            return out;
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::UnparseableVerdict) throw;
            if (attempt >= cfg.judge_repair_attempts) {
                throw Error(ErrorKind::UnparseableVerdict, std::string(e.what()) + " (after " +
                                                               std::to_string(attempt) + " repair attempt(s))");
            }
            spdlog::warn("judge for {}: {}; asking again", idea.id, e.what());
            req.messages.push_back({Role::assistant, reply});
            req.messages.push_back({Role::user, std::string(prompts::kJudgeRepair)});
            reply = gateway.chat(req).text;
        }
    }
}

}  // namespace novelty
