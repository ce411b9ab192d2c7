#pragma once

#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "novelty/gateway.hpp"

namespace novelty {

/// One entry of the mock chat table. A rule applies when every condition it
/// sets holds; the first applicable rule answers.
///
/// Answers come from, in order of precedence: `fail_with` (raise an error),
/// `handler`, `script`, then `responses` (served in sequence, the last one
/// repeating).
///
/// Scripts:
///   "identity"      rank a listwise prompt in its given order
///   "reverse"       rank a listwise prompt in reverse order
///   "rank_by_terms" rank papers by how many of `terms` they mention
///                   (stable, so ties keep the incoming order)
///   "judge_by_term" answer "not novel" citing the first query-section paper
///                   that mentions any of `terms`, else "novel"
struct MockRule {
    std::string name;
    std::optional<std::string> digest;
    std::optional<std::string> model;
    std::vector<std::string> contains;
    std::vector<std::string> not_contains;

    std::vector<std::string> responses;
    std::string script;
    std::vector<std::string> terms;
    std::optional<ErrorKind> fail_with;
    bool transient = false;
    std::function<std::string(const ChatRequest&)> handler;

    static MockRule from_json(const nlohmann::json& j);
};

/// Table-driven chat provider. Unmatched requests raise a non-retryable
/// ProviderUnavailable so fixture gaps fail loudly.
class MockChatProvider final : public ChatProvider {
public:
    MockChatProvider() = default;
    explicit MockChatProvider(std::vector<MockRule> rules);
    /// Accepts {"rules": [...]} or a bare array of rules.
    static std::shared_ptr<MockChatProvider> from_json(const nlohmann::json& j);

    ChatResponse complete(const ChatRequest& req) override;
    std::string host() const override { return "mock-llm"; }

    void add_rule(MockRule rule);
    std::size_t calls() const;
    std::vector<ChatRequest> requests() const;

private:
    mutable std::mutex mu_;
    std::vector<MockRule> rules_;
    std::vector<std::size_t> served_;
    std::vector<ChatRequest> log_;
};

/// Deterministic embedder. Lookup order per text: explicit `vectors` entry,
/// position in `basis` (unit vector along that axis), then a hashed
/// bag-of-words of the configured dimension.
class MockEmbeddingProvider final : public EmbeddingProvider {
public:
    explicit MockEmbeddingProvider(std::size_t dimension = 64);
    static std::shared_ptr<MockEmbeddingProvider> from_json(const nlohmann::json& j);

    std::vector<std::vector<double>> embed(const std::vector<std::string>& texts,
                                           const std::string& model_tag) override;
    std::string host() const override { return "mock-embed"; }

    void set_vector(const std::string& text, std::vector<double> values);
    void set_basis(std::vector<std::string> texts);

    std::size_t calls() const;
    /// Every text sent to embed(), in order.
    std::vector<std::string> embedded_texts() const;

private:
    std::vector<double> vector_for(const std::string& text) const;

    mutable std::mutex mu_;
    std::size_t dimension_;
    std::map<std::string, std::vector<double>> vectors_;
    std::vector<std::string> basis_;
    std::size_t calls_ = 0;
    std::vector<std::string> log_;
};

/// Splits prompt text into numbered paper blocks: a line starting "[n] "
/// and the lines after it up to the next blank line.
std::vector<std::pair<int, std::string>> numbered_blocks(std::string_view text);

std::vector<double> hashed_bag_of_words(std::string_view text, std::size_t dimension);

}  // namespace novelty
