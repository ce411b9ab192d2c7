#include "novelty/gateway.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "novelty/digest.hpp"
#include "novelty/json_io.hpp"

namespace novelty {

namespace fs = std::filesystem;

std::string_view to_string(Role role) noexcept {
    switch (role) {
        case Role::system: return "system";
        case Role::user: return "user";
        case Role::assistant: return "assistant";
    }
    return "?";
}

Role parse_role(std::string_view text) {
    if (text == "system") return Role::system;
    if (text == "user") return Role::user;
    if (text == "assistant") return Role::assistant;
    throw Error(ErrorKind::InvariantViolation, "unknown chat role '" + std::string(text) + "'");
}

void ChatRequest::validate() const {
    if (model_id.empty()) {
        throw Error(ErrorKind::InvariantViolation, "chat request without model id");
    }
    if (messages.empty()) {
        throw Error(ErrorKind::InvariantViolation, "chat request without messages");
    }
    if (messages.front().role == Role::assistant) {
        throw Error(ErrorKind::InvariantViolation, "chat request must start with a system or user message");
    }
    if (!(temperature >= 0.0)) {
        throw Error(ErrorKind::InvariantViolation, "temperature must be >= 0");
    }
}

std::string ChatRequest::joined_content() const {
    std::string out;
    for (const auto& m : messages) {
        if (!out.empty()) {
            out += '\n';
        }
        out += m.content;
    }
    return out;
}

json chat_wire_body(const ChatRequest& req) {
    json body;
    body["model"] = req.model_id;
    auto& msgs = body["messages"] = json::array();
    for (const auto& m : req.messages) {
        msgs.push_back({{"role", std::string(to_string(m.role))}, {"content", m.content}});
    }
    body["temperature"] = req.temperature;
    if (req.max_tokens) {
        body["max_tokens"] = *req.max_tokens;
    }
    return body;
}

std::string request_digest(const ChatRequest& req) {
    json j = chat_wire_body(req);
    j["kind"] = "chat";
    if (!req.max_tokens) {
        j["max_tokens"] = nullptr;
    }
    return sha256_hex(canonical_dump(j));
}

std::string request_digest(const std::string& text, const std::string& model_tag) {
    json j{{"kind", "embed"}, {"model", model_tag}, {"text", text}};
    return sha256_hex(canonical_dump(j));
}

// --- cache -----------------------------------------------------------------

ResponseCache::ResponseCache(fs::path dir) : dir_(std::move(dir)) {
    if (!dir_.empty()) {
        fs::create_directories(dir_);
    }
}

fs::path ResponseCache::path_for(const std::string& digest) const {
    return dir_ / digest.substr(0, 2) / (digest + ".json");
}

std::optional<std::string> ResponseCache::get(const std::string& digest) const {
    std::lock_guard lock(mu_);
    if (auto it = memory_.find(digest); it != memory_.end()) {
        return it->second;
    }
    if (dir_.empty()) {
        return std::nullopt;
    }
    std::ifstream in(path_for(digest), std::ios::binary);
    if (!in) {
        return std::nullopt;
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void ResponseCache::put(const std::string& digest, const std::string& payload) {
    std::lock_guard lock(mu_);
    memory_[digest] = payload;
    if (dir_.empty()) {
        return;
    }
    auto target = path_for(digest);
    fs::create_directories(target.parent_path());
    std::ostringstream suffix;
    suffix << ".tmp-" << std::this_thread::get_id() << "-" << std::random_device{}();
    auto tmp = target;
    tmp += suffix.str();
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << payload;
        if (!out) {
            throw Error(ErrorKind::ProviderUnavailable, "cannot write cache file " + tmp.string());
        }
    }
    fs::rename(tmp, target);
}

std::size_t ResponseCache::size() const {
    std::lock_guard lock(mu_);
    if (dir_.empty() || !fs::exists(dir_)) {
        return memory_.size();
    }
    std::size_t n = 0;
    for (const auto& entry : fs::recursive_directory_iterator(dir_)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") {
            ++n;
        }
    }
    return n;
}

void ResponseCache::clear() {
    std::lock_guard lock(mu_);
    memory_.clear();
    if (!dir_.empty() && fs::exists(dir_)) {
        for (const auto& entry : fs::directory_iterator(dir_)) {
            fs::remove_all(entry.path());
        }
    }
}

// --- gateway ---------------------------------------------------------------

Gateway::Gateway(std::shared_ptr<ChatProvider> chat, std::shared_ptr<EmbeddingProvider> embedder,
                 std::shared_ptr<ResponseCache> cache, Clock& clock, RetryPolicy retry,
                 double rate_limit)
    : chat_(std::move(chat)),
      embedder_(std::move(embedder)),
      cache_(cache ? std::move(cache) : std::make_shared<ResponseCache>()),
      clock_(clock),
      retry_(retry),
      limiter_(clock, rate_limit) {}

ChatResponse Gateway::chat(const ChatRequest& req) {
    req.validate();
    if (!chat_) {
        throw Error(ErrorKind::ProviderUnavailable, "no chat provider configured");
    }
    const auto digest = request_digest(req);
    if (auto hit = cache_->get(digest)) {
        auto j = json::parse(*hit, nullptr, false);
        if (!j.is_discarded() && j.contains("text") && j["text"].is_string()) {
            std::lock_guard lock(stats_mu_);
            ++stats_.chat_cache_hits;
            return ChatResponse{j["text"].get<std::string>(), j.value("meta", json::object())};
        }
    }
    auto response = with_retries(clock_, retry_, [&] {
        limiter_.acquire(chat_->host());
        {
            std::lock_guard lock(stats_mu_);
            ++stats_.chat_provider_calls;
        }
        auto r = chat_->complete(req);
        if (r.text.empty()) {
            throw TransientError(ErrorKind::ProviderUnavailable, "provider returned an empty completion");
        }
        return r;
    });
    cache_->put(digest, canonical_dump(json{{"text", response.text}, {"meta", response.provider_meta}}));
    return response;
}

std::vector<EmbeddingVector> Gateway::embed(const std::vector<std::string>& texts,
                                            const std::string& model_tag) {
    for (const auto& t : texts) {
        if (t.empty()) {
            throw Error(ErrorKind::EmptyText, "cannot embed an empty text");
        }
    }
    if (!embedder_) {
        throw Error(ErrorKind::ProviderUnavailable, "no embedding provider configured");
    }

    std::vector<std::optional<std::vector<double>>> found(texts.size());
    std::vector<std::string> missing;
    std::unordered_map<std::string, std::size_t> missing_index;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        if (missing_index.count(texts[i]) != 0) {
            continue;
        }
        if (auto hit = cache_->get(request_digest(texts[i], model_tag))) {
            auto j = json::parse(*hit, nullptr, false);
            if (!j.is_discarded() && j.contains("values") && j["values"].is_array()) {
                found[i] = j["values"].get<std::vector<double>>();
                ++hits;
                continue;
            }
        }
        missing_index.emplace(texts[i], missing.size());
        missing.push_back(texts[i]);
    }

    std::vector<std::vector<double>> fresh;
    if (!missing.empty()) {
        fresh = with_retries(clock_, retry_, [&] {
            limiter_.acquire(embedder_->host());
            {
                std::lock_guard lock(stats_mu_);
                ++stats_.embed_provider_calls;
                stats_.embedded_texts += missing.size();
            }
            return embedder_->embed(missing, model_tag);
        });
        if (fresh.size() != missing.size()) {
            throw Error(ErrorKind::ProviderUnavailable, "embedding provider returned " +
                                                            std::to_string(fresh.size()) + " vectors for " +
                                                            std::to_string(missing.size()) + " texts");
        }
        for (const auto& v : fresh) {
            if (v.empty()) {
                throw Error(ErrorKind::ProviderUnavailable, "embedding provider returned an empty vector");
            }
            for (double x : v) {
                if (!std::isfinite(x)) {
                    throw Error(ErrorKind::ProviderUnavailable, "embedding provider returned a non-finite value");
                }
            }
        }
        for (std::size_t m = 0; m < missing.size(); ++m) {
            cache_->put(request_digest(missing[m], model_tag), canonical_dump(json{{"values", fresh[m]}}));
        }
    }
    {
        std::lock_guard lock(stats_mu_);
        stats_.embed_cache_hits += hits;
    }

    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    std::size_t dim = 0;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        std::vector<double> values;
        if (found[i]) {
            values = *found[i];
        } else {
            values = fresh[missing_index.at(texts[i])];
        }
        if (dim == 0) {
            dim = values.size();
        } else if (values.size() != dim) {
            throw Error(ErrorKind::DimensionMismatch, "embedding dimensions differ within one model tag");
        }
        out.push_back(EmbeddingVector{std::move(values), model_tag});
    }
    return out;
}

GatewayStats Gateway::stats() const {
    std::lock_guard lock(stats_mu_);
    return stats_;
}

}  // namespace novelty
