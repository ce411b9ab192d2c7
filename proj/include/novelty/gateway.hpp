#pragma once

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "novelty/clock.hpp"

namespace novelty {

enum class Role { system, user, assistant };

std::string_view to_string(Role role) noexcept;
Role parse_role(std::string_view text);

struct ChatMessage {
    Role role = Role::user;
    std::string content;
};

struct ChatRequest {
    std::string model_id;
    std::vector<ChatMessage> messages;
    double temperature = 0.0;
    std::optional<int> max_tokens;

    /// Non-empty messages, leading system/user message, temperature >= 0.
    void validate() const;
    /// All message contents joined by newlines.
    std::string joined_content() const;
};

struct ChatResponse {
    std::string text;
    nlohmann::json provider_meta = nlohmann::json::object();
};

struct EmbeddingVector {
    std::vector<double> values;
    std::string model_tag;
};

/// Content hash over (model, messages, temperature, max_tokens).
std::string request_digest(const ChatRequest& req);
/// Content hash of one text of an embedding batch.
std::string request_digest(const std::string& text, const std::string& model_tag);

/// OpenAI-compatible request body.
nlohmann::json chat_wire_body(const ChatRequest& req);

/// Providers throw TransientError for retryable failures and Error
/// (AuthError, ContextOverflow, ...) for everything else.
class ChatProvider {
public:
    virtual ~ChatProvider() = default;
    virtual ChatResponse complete(const ChatRequest& req) = 0;
    virtual std::string host() const = 0;
};

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    /// One vector per input text, same order.
    virtual std::vector<std::vector<double>> embed(const std::vector<std::string>& texts,
                                                   const std::string& model_tag) = 0;
    virtual std::string host() const = 0;
};

/// Content-addressed store, one file per digest. Writes go to a temporary
/// file that is renamed into place. An empty directory keeps entries in
/// memory only.
class ResponseCache {
public:
    explicit ResponseCache(std::filesystem::path dir = {});

    std::optional<std::string> get(const std::string& digest) const;
    void put(const std::string& digest, const std::string& payload);

    std::size_t size() const;
    void clear();
    const std::filesystem::path& dir() const noexcept { return dir_; }

private:
    std::filesystem::path path_for(const std::string& digest) const;

    std::filesystem::path dir_;
    mutable std::mutex mu_;
    std::map<std::string, std::string> memory_;
};

struct GatewayStats {
    std::size_t chat_provider_calls = 0;
    std::size_t chat_cache_hits = 0;
    std::size_t embed_provider_calls = 0;
    std::size_t embedded_texts = 0;  // texts sent to the provider
    std::size_t embed_cache_hits = 0;
};

/// Front door for every model call: caching, retries and per-host pacing.
/// Safe for concurrent use.
class Gateway {
public:
    Gateway(std::shared_ptr<ChatProvider> chat, std::shared_ptr<EmbeddingProvider> embedder,
            std::shared_ptr<ResponseCache> cache, Clock& clock, RetryPolicy retry,
            double rate_limit);

    ChatResponse chat(const ChatRequest& req);
    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts,
                                       const std::string& model_tag);

    GatewayStats stats() const;
    Clock& clock() noexcept { return clock_; }
    const RetryPolicy& retry_policy() const noexcept { return retry_; }
    RateLimiter& rate_limiter() noexcept { return limiter_; }

private:
    std::shared_ptr<ChatProvider> chat_;
    std::shared_ptr<EmbeddingProvider> embedder_;
    std::shared_ptr<ResponseCache> cache_;
    Clock& clock_;
    RetryPolicy retry_;
    RateLimiter limiter_;

    mutable std::mutex stats_mu_;
    GatewayStats stats_;
};

}  // namespace novelty
