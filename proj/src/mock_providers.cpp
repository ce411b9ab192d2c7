#include "novelty/mock_providers.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "novelty/domain.hpp"
#include "novelty/prompts.hpp"

namespace novelty {

using nlohmann::json;

namespace {

ErrorKind parse_error_kind(const std::string& name) {
    for (auto kind : {ErrorKind::ProviderUnavailable, ErrorKind::AuthError, ErrorKind::ContextOverflow,
                      ErrorKind::HostError, ErrorKind::QuotaExceeded}) {
        if (name == to_string(kind)) {
            return kind;
        }
    }
    throw Error(ErrorKind::InvalidConfig, "mock rule: unsupported fail_with '" + name + "'");
}

bool contains_ci(std::string_view haystack, std::string_view needle) {
    if (needle.empty()) {
        return true;
    }
    auto it = std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end(),
                          [](char a, char b) {
                              return std::tolower(static_cast<unsigned char>(a)) ==
                                     std::tolower(static_cast<unsigned char>(b));
                          });
    return it != haystack.end();
}

// Latest user turn that carries numbered papers; repair turns carry none.
std::string last_user_message(const ChatRequest& req) {
    std::string fallback;
    for (auto it = req.messages.rbegin(); it != req.messages.rend(); ++it) {
        if (it->role != Role::user) continue;
        if (!numbered_blocks(it->content).empty()) return it->content;
        if (fallback.empty()) fallback = it->content;
    }
    return fallback;
}

std::string ranking_text(const std::vector<int>& order) {
    std::string out;
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (i > 0) {
            out += " > ";
        }
        out += "[" + std::to_string(order[i]) + "]";
    }
    return out;
}

std::size_t count_terms(std::string_view text, const std::vector<std::string>& terms) {
    return static_cast<std::size_t>(std::count_if(
        terms.begin(), terms.end(), [&](const std::string& t) { return contains_ci(text, t); }));
}

std::string run_script(const MockRule& rule, const ChatRequest& req) {
    const auto prompt = last_user_message(req);
    if (rule.script == "judge_by_term") {
        auto pos = prompt.rfind(prompts::kJudgeQueryHeader);
        std::string_view query = pos == std::string::npos ? std::string_view(prompt)
                                                          : std::string_view(prompt).substr(pos);
        auto blocks = numbered_blocks(query);
        for (const auto& [n, block] : blocks) {
            if (count_terms(block, rule.terms) > 0) {
                return "DECISION: not novel\nRATIONALE: The idea closely resembles [" + std::to_string(n) +
                       "], which already addresses the same purpose with the same mechanism.";
            }
        }
        return "DECISION: novel\nRATIONALE: None of the retrieved papers, including [1], combines the "
               "idea's purpose and mechanism.";
    }

    auto blocks = numbered_blocks(prompt);
    if (blocks.empty()) {
        return "I could not find any papers to rank.";
    }
    std::vector<int> order;
    for (const auto& b : blocks) {
        order.push_back(b.first);
    }
    if (rule.script == "identity") {
        return ranking_text(order);
    }
    if (rule.script == "reverse") {
        std::reverse(order.begin(), order.end());
        return ranking_text(order);
    }
    if (rule.script == "rank_by_terms") {
        std::vector<std::size_t> score(blocks.size());
        for (std::size_t i = 0; i < blocks.size(); ++i) {
            score[i] = count_terms(blocks[i].second, rule.terms);
        }
        std::vector<std::size_t> idx(blocks.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return score[a] > score[b]; });
        std::vector<int> ranked;
        for (auto i : idx) ranked.push_back(blocks[i].first);
        return ranking_text(ranked);
    }
    throw Error(ErrorKind::InvalidConfig, "mock rule '" + rule.name + "': unknown script '" + rule.script + "'");
}

}  // namespace

std::vector<std::pair<int, std::string>> numbered_blocks(std::string_view text) {
    std::vector<std::pair<int, std::string>> out;
    std::istringstream in{std::string(text)};
    std::string line;
    bool open = false;
    while (std::getline(in, line)) {
        if (line.size() >= 4 && line[0] == '[') {
            auto close = line.find(']');
            if (close != std::string::npos && close > 1 && close + 1 < line.size() && line[close + 1] == ' ' &&
                std::all_of(line.begin() + 1, line.begin() + static_cast<long>(close),
                            [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
                out.emplace_back(std::stoi(line.substr(1, close - 1)), line);
                open = true;
                continue;
            }
        }
        if (trim(line).empty()) {
            open = false;
        } else if (open) {
            out.back().second += "\n" + line;
        }
    }
    return out;
}

std::vector<double> hashed_bag_of_words(std::string_view text, std::size_t dimension) {
    std::vector<double> v(dimension, 0.0);
    auto bump = [&](std::string_view token) {
        std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
        for (char c : token) {
            h ^= static_cast<unsigned char>(c);
            h *= 1099511628211ULL;
        }
        v[h % dimension] += 1.0;
    };
    std::string token;
    bool any = false;
    for (char c : text) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            token.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else if (!token.empty()) {
            bump(token);
            any = true;
            token.clear();
        }
    }
    if (!token.empty()) {
        bump(token);
        any = true;
    }
    if (!any) {
        bump(text);
    }
    return v;
}

// --- rules -----------------------------------------------------------------

MockRule MockRule::from_json(const json& j) {
    MockRule r;
    r.name = j.value("name", "");
    if (j.contains("digest")) r.digest = j["digest"].get<std::string>();
    if (j.contains("model")) r.model = j["model"].get<std::string>();
    auto strings = [&](const char* key) {
        std::vector<std::string> out;
        if (j.contains(key)) {
            if (j[key].is_string()) {
                out.push_back(j[key].get<std::string>());
            } else {
                out = j[key].get<std::vector<std::string>>();
            }
        }
        return out;
    };
    r.contains = strings("contains");
    r.not_contains = strings("not_contains");
    r.responses = strings("responses");
    if (j.contains("response")) r.responses.insert(r.responses.begin(), j["response"].get<std::string>());
    r.script = j.value("script", "");
    r.terms = strings("terms");
    if (j.contains("fail_with")) r.fail_with = parse_error_kind(j["fail_with"].get<std::string>());
    r.transient = j.value("transient", false);
    if (r.responses.empty() && r.script.empty() && !r.fail_with) {
        throw Error(ErrorKind::InvalidConfig, "mock rule '" + r.name + "' has no response, script or failure");
    }
    return r;
}

MockChatProvider::MockChatProvider(std::vector<MockRule> rules)
    : rules_(std::move(rules)), served_(rules_.size(), 0) {}

std::shared_ptr<MockChatProvider> MockChatProvider::from_json(const json& j) {
    const json& list = j.is_object() ? j.at("rules") : j;
    std::vector<MockRule> rules;
    for (const auto& r : list) {
        rules.push_back(MockRule::from_json(r));
    }
    return std::make_shared<MockChatProvider>(std::move(rules));
}

void MockChatProvider::add_rule(MockRule rule) {
    std::lock_guard lock(mu_);
    rules_.push_back(std::move(rule));
    served_.push_back(0);
}

std::size_t MockChatProvider::calls() const {
    std::lock_guard lock(mu_);
    return log_.size();
}

std::vector<ChatRequest> MockChatProvider::requests() const {
    std::lock_guard lock(mu_);
    return log_;
}

ChatResponse MockChatProvider::complete(const ChatRequest& req) {
    std::unique_lock lock(mu_);
    log_.push_back(req);
    const auto content = req.joined_content();
    std::optional<std::string> digest;
    for (std::size_t i = 0; i < rules_.size(); ++i) {
        const auto& rule = rules_[i];
        if (rule.model && *rule.model != req.model_id) continue;
        if (rule.digest) {
            if (!digest) digest = request_digest(req);
            if (*rule.digest != *digest) continue;
        }
        bool ok = std::all_of(rule.contains.begin(), rule.contains.end(),
                              [&](const std::string& s) { return contains_ci(content, s); }) &&
                  std::none_of(rule.not_contains.begin(), rule.not_contains.end(),
                               [&](const std::string& s) { return contains_ci(content, s); });
        if (!ok) continue;

        if (rule.fail_with) {
            auto msg = "mock rule '" + rule.name + "' fails with " + std::string(to_string(*rule.fail_with));
            if (rule.transient) throw TransientError(*rule.fail_with, msg);
            throw Error(*rule.fail_with, msg);
        }
        json meta{{"mock_rule", rule.name}, {"model", req.model_id}};
        if (rule.handler) {
            auto handler = rule.handler;
            lock.unlock();
            return ChatResponse{handler(req), meta};
        }
        if (!rule.script.empty()) {
            return ChatResponse{run_script(rule, req), meta};
        }
        auto n = served_[i]++;
        return ChatResponse{rule.responses[std::min(n, rule.responses.size() - 1)], meta};
    }
    throw Error(ErrorKind::ProviderUnavailable, "mock: no rule matches request for model '" + req.model_id + "'");
}

// --- embeddings ------------------------------------------------------------

MockEmbeddingProvider::MockEmbeddingProvider(std::size_t dimension) : dimension_(dimension) {
    if (dimension_ == 0) {
        throw Error(ErrorKind::InvalidConfig, "mock embedding dimension must be positive");
    }
}

std::shared_ptr<MockEmbeddingProvider> MockEmbeddingProvider::from_json(const json& j) {
    auto p = std::make_shared<MockEmbeddingProvider>(j.value("dimension", std::size_t{64}));
    if (j.contains("vectors")) {
        for (const auto& [text, values] : j["vectors"].items()) {
            p->set_vector(text, values.get<std::vector<double>>());
        }
    }
    if (j.contains("basis")) {
        p->set_basis(j["basis"].get<std::vector<std::string>>());
    }
    return p;
}

void MockEmbeddingProvider::set_vector(const std::string& text, std::vector<double> values) {
    std::lock_guard lock(mu_);
    vectors_[text] = std::move(values);
}

void MockEmbeddingProvider::set_basis(std::vector<std::string> texts) {
    std::lock_guard lock(mu_);
    basis_ = std::move(texts);
}

std::vector<double> MockEmbeddingProvider::vector_for(const std::string& text) const {
    if (auto it = vectors_.find(text); it != vectors_.end()) {
        return it->second;
    }
    if (auto it = std::find(basis_.begin(), basis_.end(), text); it != basis_.end()) {
        std::vector<double> v(std::max(dimension_, basis_.size()), 0.0);
        v[static_cast<std::size_t>(it - basis_.begin())] = 1.0;
        return v;
    }
    return hashed_bag_of_words(text, dimension_);
}

std::vector<std::vector<double>> MockEmbeddingProvider::embed(const std::vector<std::string>& texts,
                                                              const std::string&) {
    std::lock_guard lock(mu_);
    ++calls_;
    std::vector<std::vector<double>> out;
    out.reserve(texts.size());
    for (const auto& t : texts) {
        log_.push_back(t);
        out.push_back(vector_for(t));
    }
    return out;
}

std::size_t MockEmbeddingProvider::calls() const {
    std::lock_guard lock(mu_);
    return calls_;
}

std::vector<std::string> MockEmbeddingProvider::embedded_texts() const {
    std::lock_guard lock(mu_);
    return log_;
}

}  // namespace novelty
