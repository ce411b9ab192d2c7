#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>

#include "novelty/clock.hpp"
#include "novelty/domain.hpp"
#include "novelty/gateway.hpp"
#include "novelty/json_io.hpp"
#include "novelty/mock_providers.hpp"
#include "novelty/pipeline.hpp"
#include "novelty/scholar.hpp"

namespace novelty::testing {

inline std::string fixture_path(const std::string& rel) { return std::string(NOVELTY_FIXTURE_DIR) + "/" + rel; }

inline std::string read_text(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

inline json read_json(const std::string& path) { return json::parse(read_text(path)); }

inline Paper make_paper(std::string id, std::string title, std::string abstract) {
    Paper p;
    p.paper_id = std::move(id);
    p.title = std::move(title);
    p.abstract = std::move(abstract);
    return p;
}

/// Mock chat + embedder behind a gateway on a virtual clock.
struct MockStack {
    VirtualClock clock;
    std::shared_ptr<MockChatProvider> chat = std::make_shared<MockChatProvider>();
    std::shared_ptr<MockEmbeddingProvider> embedder = std::make_shared<MockEmbeddingProvider>();
    std::shared_ptr<ResponseCache> cache = std::make_shared<ResponseCache>();
    Gateway gateway{chat, embedder, cache, clock, RetryPolicy{3, 1.0}, 1.0};
};

/// Everything a pipeline run over one fixture directory needs.
struct FixtureStack {
    explicit FixtureStack(const std::string& dir) {
        const auto base = fixture_path(dir);
        scholar = std::make_unique<FixtureScholarClient>(read_json(base + "/corpus.json"));
        chat = MockChatProvider::from_json(read_json(base + "/chat.json"));
        if (std::filesystem::exists(base + "/embeddings.json")) {
            embedder = MockEmbeddingProvider::from_json(read_json(base + "/embeddings.json"));
        } else {
            embedder = std::make_shared<MockEmbeddingProvider>();
        }
        gateway = std::make_unique<Gateway>(chat, embedder, std::make_shared<ResponseCache>(), clock,
                                            RetryPolicy{3, 1.0}, 1.0);
        if (std::filesystem::exists(base + "/examples.jsonl")) {
            for (const auto& r : load_dataset(base + "/examples.jsonl")) examples.push_back(r.to_example());
        }
    }

    PipelineContext context() { return PipelineContext{*gateway, *scholar, examples}; }

    VirtualClock clock;
    std::unique_ptr<FixtureScholarClient> scholar;
    std::shared_ptr<MockChatProvider> chat;
    std::shared_ptr<MockEmbeddingProvider> embedder;
    std::unique_ptr<Gateway> gateway;
    std::vector<LabeledExample> examples;
};

}  // namespace novelty::testing
