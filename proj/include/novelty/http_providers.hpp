#pragma once

#include <memory>
#include <string>

#include "novelty/gateway.hpp"

namespace novelty {

/// Splits "https://host:port/prefix" into the origin and the path prefix.
struct BaseUrl {
    std::string origin;  // scheme://host[:port]
    std::string prefix;  // "" or "/v1" etc., no trailing slash

    static BaseUrl parse(const std::string& url);
    std::string host() const;
};

/// OpenAI-compatible POST {prefix}/chat/completions.
class OpenAiChatProvider final : public ChatProvider {
public:
    OpenAiChatProvider(std::string base_url, std::string api_key, double timeout_seconds = 120.0);

    ChatResponse complete(const ChatRequest& req) override;
    std::string host() const override { return base_.host(); }

private:
    BaseUrl base_;
    std::string api_key_;
    double timeout_;
};

/// OpenAI-compatible POST {prefix}/embeddings: {model, input:[...]} -> {data:[{embedding}]}.
class OpenAiEmbeddingProvider final : public EmbeddingProvider {
public:
    OpenAiEmbeddingProvider(std::string base_url, std::string api_key, double timeout_seconds = 120.0);

    std::vector<std::vector<double>> embed(const std::vector<std::string>& texts,
                                           const std::string& model_tag) override;
    std::string host() const override { return base_.host(); }

private:
    BaseUrl base_;
    std::string api_key_;
    double timeout_;
};

}  // namespace novelty
