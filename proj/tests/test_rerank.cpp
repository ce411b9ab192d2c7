#include <gtest/gtest.h>

#include <algorithm>
#include <chrono>
#include <random>

#include "novelty/prompts.hpp"
#include "novelty/rerank.hpp"
#include "support.hpp"

using namespace novelty;
using novelty::testing::make_paper;
using novelty::testing::MockStack;

namespace {

EmbeddingVector vec(std::vector<double> v) { return EmbeddingVector{std::move(v), "m"}; }

CandidatePool pool_of(const std::vector<std::string>& ids) {
    CandidatePool pool;
    pool.idea_id = "i";
    for (const auto& id : ids) {
        auto p = make_paper(id, "Title " + id, "Abstract of " + id);
        p.provenance = {Source::keyword};
        pool.papers.push_back(p);
    }
    return pool;
}

MockRule scripted(std::string script, std::vector<std::string> terms = {}) {
    MockRule r;
    r.name = script;
    r.contains = {"Ranking criteria"};
    r.script = std::move(script);
    r.terms = std::move(terms);
    return r;
}

}  // namespace

TEST(Cosine, BasicValues) {
    EXPECT_DOUBLE_EQ(cosine(vec({1, 0}), vec({1, 0})), 1.0);
    EXPECT_DOUBLE_EQ(cosine(vec({1, 0}), vec({0, 2})), 0.0);
    EXPECT_DOUBLE_EQ(cosine(vec({1, 0}), vec({-3, 0})), -1.0);
    EXPECT_NEAR(cosine(vec({1, 2, 3}), vec({4, 5, 6})), 32.0 / std::sqrt(14.0 * 77.0), 1e-15);
    auto c = cosine(vec({1e-200, 1e-200}), vec({1e-200, 1e-200}));
    EXPECT_LE(c, 1.0);
}

TEST(Cosine, ErrorsOnBadInput) {
    try {
        cosine(vec({1, 2}), vec({1, 2, 3}));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::DimensionMismatch);
    }
    try {
        cosine(vec({0, 0}), vec({1, 2}));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::ZeroVector);
    }
}

TEST(EmbedFilter, RanksByCosineTiesById) {
    MockStack s;
    auto idea = validate_idea("the idea", {}, {}, "i");
    auto pool = pool_of({"c", "b", "a", "d"});
    s.embedder->set_vector("the idea", {1, 0});
    s.embedder->set_vector(embedding_text(pool.papers[0]), {0, 1});   // c: 0
    s.embedder->set_vector(embedding_text(pool.papers[1]), {1, 1});   // b: 0.707
    s.embedder->set_vector(embedding_text(pool.papers[2]), {2, 2});   // a: 0.707, wins tie on id
    s.embedder->set_vector(embedding_text(pool.papers[3]), {1, 0});   // d: 1
    auto top = embed_filter(s.gateway, idea, pool, 3, "m");
    EXPECT_EQ(top.stage, Stage::embedding_topN);
    EXPECT_EQ(top.ids(), (std::vector<std::string>{"d", "a", "b"}));
    EXPECT_NO_THROW(check_invariants(top));
    EXPECT_EQ(embed_filter(s.gateway, idea, pool, 100, "m").size(), 4u);
}

TEST(EmbeddingText, JoinsTitleAndAbstract) {
    EXPECT_EQ(embedding_text(make_paper("x", " A  title ", "Some\nabstract")), "A title. Some abstract");
}

TEST(WindowSpans, TailToHead) {
    using Spans = std::vector<std::pair<std::size_t, std::size_t>>;
    EXPECT_EQ(window_spans(4, 2, 1), (Spans{{2, 4}, {1, 3}, {0, 2}}));
    EXPECT_EQ(window_spans(100, 20, 10),
              (Spans{{80, 100}, {70, 90}, {60, 80}, {50, 70}, {40, 60}, {30, 50}, {20, 40}, {10, 30}, {0, 20}}));
    EXPECT_EQ(window_spans(5, 20, 10), (Spans{{0, 5}}));
    EXPECT_TRUE(window_spans(1, 20, 10).empty());
}

TEST(ParsePermutation, LenientReading) {
    EXPECT_EQ(parse_permutation("[2] > [2] > [9]", 3).order, (std::vector<int>{2, 1, 3}));
    EXPECT_EQ(parse_permutation("[3] > [ 1 ] > [2]", 3).order, (std::vector<int>{3, 1, 2}));
    EXPECT_EQ(parse_permutation("I think [4] then [0] ...", 4).order, (std::vector<int>{4, 1, 2, 3}));
    EXPECT_THROW(parse_permutation("no ranking at all", 3), Error);
    try {
        parse_permutation("[0] > [7]", 3);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::UnparseableRanking);
    }
}

// Random corruptions of a ranking reply: duplicates, out-of-range indices,
// prose noise and partial lists. The reference result is computed from the
// tokens as they were generated.
TEST(ParsePermutation, PropertyOverCorruptedStrings) {
    std::mt19937_64 rng(20240531);
    const std::vector<std::string> noise = {"ranking:", "I", "think", "the", "order", "is", ">", ">>", "and", "3",
                                            "12", "[x]", "[]", "(2)", "{1}", "paper", "\n", "[-", "#5"};
    const auto t0 = std::chrono::steady_clock::now();
    int with_valid = 0;
    for (int trial = 0; trial < 10'000; ++trial) {
        const int w = std::uniform_int_distribution<int>(2, 20)(rng);
        const int tokens = std::uniform_int_distribution<int>(0, 30)(rng);
        std::string text;
        std::vector<int> expected;
        std::vector<bool> seen(static_cast<std::size_t>(w) + 1, false);
        for (int t = 0; t < tokens; ++t) {
            const int kind = std::uniform_int_distribution<int>(0, 9)(rng);
            std::string tok;
            if (kind <= 3) {
                const int n = std::uniform_int_distribution<int>(1, w)(rng);
                tok = (kind == 3 ? "[ " : "[") + std::to_string(n) + "]";
                if (!seen[static_cast<std::size_t>(n)]) {
                    seen[static_cast<std::size_t>(n)] = true;
                    expected.push_back(n);
                }
            } else if (kind <= 5) {
                const int n = kind == 4 ? 0 : w + std::uniform_int_distribution<int>(1, 1000)(rng);
                tok = "[" + std::to_string(n) + "]";
            } else {
                tok = noise[std::uniform_int_distribution<std::size_t>(0, noise.size() - 1)(rng)];
            }
            text += tok;
            text += ' ';
        }

        if (expected.empty()) {
            try {
                parse_permutation(text, w);
                FAIL() << "accepted: " << text;
            } catch (const Error& e) {
                ASSERT_EQ(e.kind(), ErrorKind::UnparseableRanking);
            }
            continue;
        }
        ++with_valid;
        for (int n = 1; n <= w; ++n) {
            if (!seen[static_cast<std::size_t>(n)]) expected.push_back(n);
        }
        const auto got = parse_permutation(text, w).order;
        ASSERT_EQ(got, expected) << text;
        auto sorted = got;
        std::sort(sorted.begin(), sorted.end());
        for (int n = 1; n <= w; ++n) ASSERT_EQ(sorted[static_cast<std::size_t>(n - 1)], n);
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    EXPECT_LT(secs, 5.0);
    EXPECT_GT(with_valid, 1000);
    EXPECT_LT(with_valid, 10'000);
}

TEST(RerankPrompt, FacetCriteriaCarryFourTiers) {
    auto facet = RerankCriteria::facet();
    EXPECT_EQ(facet.template_id, prompts::kRerankFacetTemplateId);
    for (const char* tier : {"match all key facets", "application domain and purpose",
                             "similarities in purpose, mechanism, or evaluation", "partially match"}) {
        EXPECT_NE(facet.text.find(tier), std::string::npos) << tier;
    }
    EXPECT_EQ(facet.output_stage(), Stage::facet_topK);
    EXPECT_EQ(RerankCriteria::relevance().output_stage(), Stage::relevance_topK);
    EXPECT_EQ(parse_rerank_mode("relevance"), RerankMode::relevance);
    EXPECT_THROW(parse_rerank_mode("other"), Error);
}

TEST(RerankPrompt, RendersNumberedWindow) {
    auto pool = pool_of({"a", "b"});
    auto idea = validate_idea("my idea", {}, {}, "i");
    std::vector<const Paper*> window{&pool.papers[0], &pool.papers[1]};
    auto req = build_rerank_prompt(idea, window, RerankCriteria::facet(), PipelineConfig{});
    ASSERT_EQ(req.messages.size(), 2u);
    const auto& user = req.messages[1].content;
    EXPECT_NE(user.find("[1] Title: Title a\nAbstract: Abstract of a"), std::string::npos);
    EXPECT_NE(user.find("[2] Title: Title b"), std::string::npos);
    EXPECT_NE(user.find("my idea"), std::string::npos);
    EXPECT_NE(user.find("Rank all 2 papers"), std::string::npos);
    std::vector<const Paper*> one{&pool.papers[0]};
    EXPECT_THROW(build_rerank_prompt(idea, one, RerankCriteria::facet(), PipelineConfig{}), Error);
}

TEST(FacetRerank, SlidingReverseExample) {
    MockStack s;
    s.chat->add_rule(scripted("reverse"));
    auto pool = pool_of({"p1", "p2", "p3", "p4"});
    auto filtered = make_ranked_list("i", Stage::embedding_topN, {"p1", "p2", "p3", "p4"});
    PipelineConfig cfg;
    cfg.window = 2;
    cfg.stride = 1;
    cfg.evidence_size = 4;
    RerankTrace trace;
    auto out = facet_rerank(s.gateway, validate_idea("x", {}, {}, "i"), filtered, pool, cfg, RerankCriteria::facet(),
                            &trace);
    EXPECT_EQ(out.ids(), (std::vector<std::string>{"p4", "p1", "p2", "p3"}));
    EXPECT_EQ(out.stage, Stage::facet_topK);
    EXPECT_EQ(trace.windows, 3u);
    EXPECT_EQ(trace.request_digests.size(), 3u);

    cfg.evidence_size = 2;
    EXPECT_EQ(facet_rerank(s.gateway, validate_idea("x", {}, {}, "i"), filtered, pool, cfg, RerankCriteria::facet())
                  .ids(),
              (std::vector<std::string>{"p4", "p1"}));
}

TEST(FacetRerank, IdentityKeepsOrderAndBubblesUp) {
    MockStack s;
    s.chat->add_rule(scripted("rank_by_terms", {"target"}));
    std::vector<std::string> ids;
    for (int i = 0; i < 30; ++i) ids.push_back("p" + std::to_string(i));
    auto pool = pool_of(ids);
    pool.papers[27].abstract = "the target paper";
    auto filtered = make_ranked_list("i", Stage::embedding_topN, ids);
    PipelineConfig cfg;
    cfg.evidence_size = 5;
    auto out = facet_rerank(s.gateway, validate_idea("x", {}, {}, "i"), filtered, pool, cfg, RerankCriteria::facet());
    EXPECT_EQ(out.ids(), (std::vector<std::string>{"p27", "p0", "p1", "p2", "p3"}));
}

TEST(FacetRerank, UnparseableWindowKeepsOrder) {
    MockStack s;
    MockRule r;
    r.name = "prose";
    r.contains = {"Ranking criteria"};
    r.responses = {"I cannot rank these."};
    s.chat->add_rule(r);
    auto pool = pool_of({"a", "b", "c"});
    auto filtered = make_ranked_list("i", Stage::embedding_topN, {"a", "b", "c"});
    RerankTrace trace;
    auto out = facet_rerank(s.gateway, validate_idea("x", {}, {}, "i"), filtered, pool, PipelineConfig{},
                            RerankCriteria::relevance(), &trace);
    EXPECT_EQ(out.ids(), (std::vector<std::string>{"a", "b", "c"}));
    EXPECT_EQ(trace.unparseable_windows, 1u);
}

TEST(FacetRerank, ProviderErrorsPropagate) {
    MockStack s;
    MockRule r;
    r.name = "auth";
    r.fail_with = ErrorKind::AuthError;
    s.chat->add_rule(r);
    auto pool = pool_of({"a", "b"});
    auto filtered = make_ranked_list("i", Stage::embedding_topN, {"a", "b"});
    EXPECT_THROW(facet_rerank(s.gateway, validate_idea("x", {}, {}, "i"), filtered, pool, PipelineConfig{},
                              RerankCriteria::facet()),
                 Error);
}

TEST(FacetRerank, SinglePaperNeedsNoModel) {
    MockStack s;
    auto pool = pool_of({"a"});
    auto out = facet_rerank(s.gateway, validate_idea("x", {}, {}, "i"),
                            make_ranked_list("i", Stage::embedding_topN, {"a"}), pool, PipelineConfig{},
                            RerankCriteria::facet());
    EXPECT_EQ(out.ids(), (std::vector<std::string>{"a"}));
    EXPECT_EQ(s.chat->calls(), 0u);
}
