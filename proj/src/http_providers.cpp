#include "novelty/http_providers.hpp"

#include "http.hpp"
#include "novelty/domain.hpp"

namespace novelty {

using nlohmann::json;

BaseUrl BaseUrl::parse(const std::string& url) {
    auto u = trim(url);
    auto scheme_end = u.find("://");
    if (scheme_end == std::string::npos || scheme_end == 0) {
        throw Error(ErrorKind::InvalidConfig, "base URL '" + url + "' needs a scheme (http:// or https://)");
    }
    auto path_start = u.find('/', scheme_end + 3);
    BaseUrl out;
    out.origin = u.substr(0, path_start);
    if (path_start != std::string::npos) {
        out.prefix = u.substr(path_start);
        while (!out.prefix.empty() && out.prefix.back() == '/') {
            out.prefix.pop_back();
        }
    }
    if (out.origin.size() <= scheme_end + 3) {
        throw Error(ErrorKind::InvalidConfig, "base URL '" + url + "' has no host");
    }
    return out;
}

std::string BaseUrl::host() const {
    auto p = origin.find("://");
    return p == std::string::npos ? origin : origin.substr(p + 3);
}

namespace {

// Maps an HTTP outcome from a model endpoint onto the gateway's error classes.
[[noreturn]] void raise_for(const http::Response& res, const std::string& what) {
    if (res.status == 0) {
        throw TransientError(ErrorKind::ProviderUnavailable, what + ": connection failed (" + res.error + ")");
    }
    const auto detail = what + ": HTTP " + std::to_string(res.status) + " " + res.body.substr(0, 300);
    if (res.status == 401 || res.status == 403) {
        throw Error(ErrorKind::AuthError, detail);
    }
    if (res.status == 413 || ((res.status == 400 || res.status == 422) &&
                              (res.body.find("context_length") != std::string::npos ||
                               res.body.find("maximum context length") != std::string::npos ||
                               res.body.find("too long") != std::string::npos))) {
        throw Error(ErrorKind::ContextOverflow, detail);
    }
    if (res.status == 408 || res.status == 429 || res.status >= 500) {
        throw TransientError(ErrorKind::ProviderUnavailable, detail);
    }
    throw Error(ErrorKind::ProviderUnavailable, detail);
}

http::Headers auth_headers(const std::string& api_key) {
    http::Headers h;
    if (!api_key.empty()) {
        h["Authorization"] = "Bearer " + api_key;
    }
    return h;
}

}  // namespace

OpenAiChatProvider::OpenAiChatProvider(std::string base_url, std::string api_key, double timeout_seconds)
    : base_(BaseUrl::parse(base_url)), api_key_(std::move(api_key)), timeout_(timeout_seconds) {}

ChatResponse OpenAiChatProvider::complete(const ChatRequest& req) {
    auto res = http::post_json(base_, "/chat/completions", {}, auth_headers(api_key_),
                               chat_wire_body(req).dump(), timeout_);
    if (res.status != 200) {
        raise_for(res, "chat completion");
    }
    auto j = json::parse(res.body, nullptr, false);
    if (j.is_discarded() || !j.contains("choices") || !j["choices"].is_array() || j["choices"].empty()) {
        throw TransientError(ErrorKind::ProviderUnavailable, "chat completion: malformed response body");
    }
    const auto& msg = j["choices"][0].value("message", json::object());
    ChatResponse out;
    if (msg.contains("content") && msg["content"].is_string()) {
        out.text = msg["content"].get<std::string>();
    }
    out.provider_meta = json::object();
    if (j.contains("usage")) out.provider_meta["usage"] = j["usage"];
    if (j.contains("model")) out.provider_meta["model"] = j["model"];
    return out;
}

OpenAiEmbeddingProvider::OpenAiEmbeddingProvider(std::string base_url, std::string api_key,
                                                 double timeout_seconds)
    : base_(BaseUrl::parse(base_url)), api_key_(std::move(api_key)), timeout_(timeout_seconds) {}

std::vector<std::vector<double>> OpenAiEmbeddingProvider::embed(const std::vector<std::string>& texts,
                                                                const std::string& model_tag) {
    json body{{"model", model_tag}, {"input", texts}};
    auto res = http::post_json(base_, "/embeddings", {}, auth_headers(api_key_), body.dump(), timeout_);
    if (res.status != 200) {
        raise_for(res, "embedding");
    }
    auto j = json::parse(res.body, nullptr, false);
    if (j.is_discarded() || !j.contains("data") || !j["data"].is_array()) {
        throw TransientError(ErrorKind::ProviderUnavailable, "embedding: malformed response body");
    }
    std::vector<std::vector<double>> out(texts.size());
    std::size_t pos = 0;
    for (const auto& item : j["data"]) {
        // honour "index" when present; otherwise rely on response order
        std::size_t idx = item.contains("index") ? item["index"].get<std::size_t>() : pos;
        if (idx >= out.size() || !item.contains("embedding")) {
            throw Error(ErrorKind::ProviderUnavailable, "embedding: response item out of range");
        }
        out[idx] = item["embedding"].get<std::vector<double>>();
        ++pos;
    }
    if (pos != texts.size()) {
        throw Error(ErrorKind::ProviderUnavailable, "embedding: response has " + std::to_string(pos) +
                                                        " items for " + std::to_string(texts.size()) + " texts");
    }
    return out;
}

}  // namespace novelty
