#include <gtest/gtest.h>

#include <chrono>
#include <random>

#include "novelty/evaluation.hpp"
#include "support.hpp"

using namespace novelty;
using novelty::testing::fixture_path;
using novelty::testing::FixtureStack;

namespace {

// Reference metrics computed straight from the label pairs.
struct Oracle {
    double accuracy = 0;
    double p[2] = {0, 0};  // index 0: novel, 1: not_novel
    double r[2] = {0, 0};
    double f[2] = {0, 0};
    std::optional<double> kappa;
};

Oracle brute_force(const std::vector<std::string>& pred, const std::vector<std::string>& gold) {
    const std::string cls[2] = {"novel", "not_novel"};
    const double n = static_cast<double>(pred.size());
    Oracle o;
    double agree = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) agree += pred[i] == gold[i] ? 1 : 0;
    o.accuracy = agree / n;
    double pe = 0;
    for (int c = 0; c < 2; ++c) {
        double hit = 0, predicted = 0, actual = 0;
        for (std::size_t i = 0; i < pred.size(); ++i) {
            predicted += pred[i] == cls[c];
            actual += gold[i] == cls[c];
            hit += pred[i] == cls[c] && gold[i] == cls[c];
        }
        o.p[c] = predicted == 0 ? 0 : hit / predicted;
        o.r[c] = actual == 0 ? 0 : hit / actual;
        o.f[c] = o.p[c] + o.r[c] == 0 ? 0 : 2 * o.p[c] * o.r[c] / (o.p[c] + o.r[c]);
        pe += (predicted / n) * (actual / n);
    }
    if (pe < 1.0) o.kappa = (o.accuracy - pe) / (1.0 - pe);
    return o;
}

RankedList ranked(const std::vector<std::string>& ids) { return make_ranked_list("i", Stage::facet_topK, ids); }

ConfusionMatrix cm(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn) { return {tp, fp, fn, tn}; }

}  // namespace

TEST(Metrics, MatchBruteForceOracleOnRandomVectors) {
    std::mt19937_64 rng(7);
    const auto t0 = std::chrono::steady_clock::now();
    for (int trial = 0; trial < 1000; ++trial) {
        const auto n = std::uniform_int_distribution<std::size_t>(2, 200)(rng);
        // skewed rates so single-class and empty-denominator cases show up
        const double bias_p = std::uniform_real_distribution<double>(0, 1)(rng);
        const double bias_g = trial % 10 == 0 ? 1.0 : std::uniform_real_distribution<double>(0, 1)(rng);
        std::bernoulli_distribution dp(bias_p), dg(bias_g);
        std::vector<std::string> pred, gold;
        for (std::size_t i = 0; i < n; ++i) {
            pred.push_back(dp(rng) ? "novel" : "not_novel");
            gold.push_back(dg(rng) ? "novel" : "not_novel");
        }
        const auto o = brute_force(pred, gold);
        const auto m = compute_metrics(confusion(pred, gold));
        ASSERT_EQ(m.n, n);
        ASSERT_NEAR(m.accuracy, o.accuracy, 1e-12);
        const Label labels[2] = {Label::novel, Label::not_novel};
        for (int c = 0; c < 2; ++c) {
            const auto& pc = m.per_class.at(labels[c]);
            ASSERT_NEAR(pc.precision, o.p[c], 1e-12);
            ASSERT_NEAR(pc.recall, o.r[c], 1e-12);
            ASSERT_NEAR(pc.f1, o.f[c], 1e-12);
        }
        ASSERT_NEAR(m.precision, (o.p[0] + o.p[1]) / 2, 1e-12);
        ASSERT_NEAR(m.recall, (o.r[0] + o.r[1]) / 2, 1e-12);
        ASSERT_NEAR(m.f1, (o.f[0] + o.f[1]) / 2, 1e-12);
        ASSERT_EQ(m.kappa.has_value(), o.kappa.has_value());
        if (o.kappa) ASSERT_NEAR(*m.kappa, *o.kappa, 1e-12);
        const auto cmx = confusion(pred, gold);
        ASSERT_NEAR(precision(cmx, Averaging::positive_class), o.p[0], 1e-12);
        ASSERT_NEAR(recall(cmx, Averaging::positive_class), o.r[0], 1e-12);
        ASSERT_NEAR(f1(cmx, Averaging::positive_class), o.f[0], 1e-12);
    }
    EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), 5.0);
}

TEST(Metrics, ReferenceArithmetic) {
    EXPECT_NEAR(accuracy(cm(30, 3, 3, 22)), 0.8966, 1e-4);   // 52 of 58
    EXPECT_DOUBLE_EQ(accuracy(cm(12, 2, 4, 14)), 0.8125);   // 26 of 32
    const auto table = render_table(compute_metrics(cm(12, 2, 4, 14)), "expert");
    EXPECT_NE(table.find("    0.81"), std::string::npos) << table;
    EXPECT_EQ(cohen_kappa(cm(20, 5, 10, 15)), 0.4);
}

TEST(Metrics, DegenerateInputs) {
    EXPECT_EQ(cohen_kappa(cm(5, 0, 0, 0)), std::nullopt);
    EXPECT_EQ(class_metrics(cm(0, 0, 0, 4), Label::novel).precision, 0.0);
    EXPECT_DOUBLE_EQ(cohen_kappa(cm(3, 0, 0, 3)).value(), 1.0);
    try {
        confusion(std::vector<Label>{}, std::vector<Label>{});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::LengthMismatch);
    }
    EXPECT_THROW(confusion(std::vector<Label>{Label::novel}, std::vector<Label>{}), Error);
    try {
        confusion(std::vector<std::string>{"novel"}, std::vector<std::string>{"maybe"});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::UnknownClass);
    }
    const auto j = to_json(compute_metrics(cm(5, 0, 0, 0)));
    EXPECT_TRUE(j["kappa"].is_null());
    EXPECT_EQ(j["averaging"], "macro");
}

TEST(RankComparison, FixtureTrio) {
    EXPECT_EQ(rank_overlap(ranked({"A", "B", "C"}), ranked({"B", "A", "C"}), 10), 3u);
    EXPECT_DOUBLE_EQ(rank_shift(ranked({"A", "B", "C"}), ranked({"B", "A", "C"}), 10).value(), 2.0 / 3.0);

    std::vector<std::string> ten;
    for (int i = 0; i < 10; ++i) ten.push_back("p" + std::to_string(i));
    EXPECT_EQ(rank_overlap(ranked(ten), ranked(ten), 10), 10u);
    EXPECT_EQ(rank_shift(ranked(ten), ranked(ten), 10), 0.0);

    EXPECT_EQ(rank_overlap(ranked({"A", "B"}), ranked({"C", "D"}), 10), 0u);
    EXPECT_EQ(rank_shift(ranked({"A", "B"}), ranked({"C", "D"}), 10), std::nullopt);
}

TEST(RankComparison, TruncatesToKAndIsSymmetric) {
    const auto a = ranked({"A", "B", "C", "D"});
    const auto b = ranked({"C", "E", "A", "F"});
    EXPECT_EQ(rank_overlap(a, b, 4), 2u);
    EXPECT_EQ(rank_shift(a, b, 4), 2.0);
    EXPECT_EQ(rank_overlap(a, b, 2), 0u);
    std::mt19937_64 rng(3);
    for (int t = 0; t < 200; ++t) {
        std::vector<std::string> x, y;
        for (int i = 0; i < 12; ++i) {
            if (rng() % 2) x.push_back("p" + std::to_string(i));
            if (rng() % 2) y.push_back("p" + std::to_string(i));
        }
        std::shuffle(x.begin(), x.end(), rng);
        std::shuffle(y.begin(), y.end(), rng);
        const auto k = static_cast<std::size_t>(rng() % 12);
        ASSERT_EQ(rank_overlap(ranked(x), ranked(y), k), rank_overlap(ranked(y), ranked(x), k));
        ASSERT_EQ(rank_shift(ranked(x), ranked(y), k), rank_shift(ranked(y), ranked(x), k));
        ASSERT_LE(rank_overlap(ranked(x), ranked(y), k), k);
    }
}

TEST(Variants, NamesRoundTrip) {
    ASSERT_EQ(all_variants().size(), 5u);
    for (auto v : all_variants()) EXPECT_EQ(parse_variant(to_string(v)), v);
    EXPECT_THROW(parse_variant("nope"), Error);
}

class KillerAblation : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        FixtureStack fx("killer");
        auto ctx = fx.context();
        report_ = new AblationReport(
            run_ablation(ctx, load_dataset(fixture_path("killer/dataset.jsonl")), all_variants(), PipelineConfig{}));
    }
    static void TearDownTestSuite() {
        delete report_;
        report_ = nullptr;
    }
    static double acc(AblationVariant v) { return report_->find(v)->accuracy; }
    static AblationReport* report_;
};

AblationReport* KillerAblation::report_ = nullptr;

TEST_F(KillerAblation, AccuracyOrdering) {
    using V = AblationVariant;
    EXPECT_GT(acc(V::complete), acc(V::relevance_rankgpt));
    EXPECT_GT(acc(V::relevance_rankgpt), acc(V::embedding_only));
    EXPECT_GT(acc(V::embedding_only), acc(V::snippet_only));
    EXPECT_GE(acc(V::snippet_only), acc(V::keyword_only));
    EXPECT_GE(acc(V::complete), 0.9);
    EXPECT_LE(acc(V::keyword_only), 0.2);
}

TEST_F(KillerAblation, FiveRowsWithComparisonColumns) {
    ASSERT_EQ(report_->variants.size(), 5u);
    EXPECT_EQ(report_->k, 10u);
    for (const auto& s : report_->variants) {
        EXPECT_EQ(s.n, 20u);
        ASSERT_TRUE(s.overlap_vs_complete.has_value());
        EXPECT_LE(*s.overlap_vs_complete, 10.0);
        ASSERT_TRUE(s.metrics.has_value());
    }
    const auto* complete = report_->find(AblationVariant::complete);
    EXPECT_EQ(complete->overlap_vs_complete, 10.0);
    EXPECT_EQ(complete->rank_shift_vs_complete, 0.0);
    const auto table = render_table(*report_);
    EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 6);
    const auto j = to_json(*report_);
    EXPECT_EQ(j["per_variant"].size(), 5u);
    EXPECT_EQ(j["per_idea"].size(), 100u);
}

TEST_F(KillerAblation, EveryVariantConsumedTheSamePool) {
    ASSERT_EQ(report_->pool_digests.size(), 20u);
    for (const auto& [variant, runs] : report_->runs) {
        for (const auto& r : runs) {
            EXPECT_EQ(r.pool_digest, report_->pool_digests.at(r.idea_id)) << to_string(variant) << " " << r.idea_id;
        }
    }
}

TEST(Ablation, WithoutCompleteOmitsComparison) {
    FixtureStack fx("killer");
    auto ctx = fx.context();
    auto data = load_dataset(fixture_path("killer/dataset.jsonl"));
    data.resize(3);
    auto report = run_ablation(ctx, data, {AblationVariant::keyword_only, AblationVariant::snippet_only}, PipelineConfig{});
    ASSERT_EQ(report.variants.size(), 2u);
    EXPECT_FALSE(report.variants[0].overlap_vs_complete.has_value());
    EXPECT_EQ(render_table(report).find("overlap"), std::string::npos);
    EXPECT_FALSE(to_json(report)["per_variant"]["keyword_only"].contains("overlap_vs_complete"));
}

TEST(Ablation, ErrorsNameVariantAndIdea) {
    FixtureStack fx("killer");
    auto ctx = fx.context();
    auto data = load_dataset(fixture_path("killer/dataset.jsonl"));
    data.resize(1);
    PipelineConfig cfg;
    cfg.n_examples = 99;
    try {
        run_ablation(ctx, data, {AblationVariant::complete}, cfg);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::NotEnoughExamples);
        EXPECT_NE(std::string(e.what()).find("(complete, k-idea-00)"), std::string::npos) << e.what();
    }
}
