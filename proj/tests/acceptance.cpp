// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <set>

#include <spdlog/spdlog.h>

#include "novelty/evaluation.hpp"
#include "novelty/rerank.hpp"
#include "support.hpp"

using namespace novelty;
using namespace novelty::testing;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Check {
    bool ok = true;
    std::string detail;

    void expect(bool cond, const std::string& what) {
        if (!cond && ok) {
            ok = false;
            detail = what;
        }
    }
};

std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'') out += "'\\''";
        else out += c;
    }
    return out + "'";
}

int run_novelty(const std::vector<std::string>& args) {
    std::string cmd = shell_quote(NOVELTY_BIN);
    for (const auto& a : args) cmd += " " + shell_quote(a);
    cmd += " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch_dir() {
    auto dir = fs::temp_directory_path() / "novelty-acceptance";
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

// 1. metrics against a brute-force implementation
Check metric_oracle() {
    Check c;
    const auto t0 = Clock::now();
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 1000 && c.ok; ++trial) {
        const auto n = std::uniform_int_distribution<std::size_t>(2, 200)(rng);
        std::bernoulli_distribution dp(std::uniform_real_distribution<double>(0, 1)(rng));
        std::bernoulli_distribution dg(std::uniform_real_distribution<double>(0, 1)(rng));
        std::vector<Label> pred, gold;
        for (std::size_t i = 0; i < n; ++i) {
            pred.push_back(dp(rng) ? Label::novel : Label::not_novel);
            gold.push_back(dg(rng) ? Label::novel : Label::not_novel);
        }
        const auto m = compute_metrics(confusion(pred, gold));
        const double dn = static_cast<double>(n);
        double agree = 0;
        for (std::size_t i = 0; i < n; ++i) agree += pred[i] == gold[i];
        double pe = 0, macro_p = 0, macro_r = 0, macro_f = 0;
        for (Label cls : {Label::novel, Label::not_novel}) {
            double hit = 0, predicted = 0, actual = 0;
            for (std::size_t i = 0; i < n; ++i) {
                predicted += pred[i] == cls;
                actual += gold[i] == cls;
                hit += pred[i] == cls && gold[i] == cls;
            }
            const double p = predicted ? hit / predicted : 0;
            const double r = actual ? hit / actual : 0;
            const double f = p + r ? 2 * p * r / (p + r) : 0;
            const auto& got = m.per_class.at(cls);
            c.expect(std::abs(got.precision - p) <= 1e-12 && std::abs(got.recall - r) <= 1e-12 &&
                         std::abs(got.f1 - f) <= 1e-12,
                     "per-class metrics differ");
            macro_p += p / 2;
            macro_r += r / 2;
            macro_f += f / 2;
            pe += (predicted / dn) * (actual / dn);
        }
        const double po = agree / dn;
        c.expect(std::abs(m.accuracy - po) <= 1e-12, "accuracy differs");
        c.expect(std::abs(m.precision - macro_p) <= 1e-12 && std::abs(m.recall - macro_r) <= 1e-12 &&
                     std::abs(m.f1 - macro_f) <= 1e-12,
                 "macro metrics differ");
        if (pe < 1.0) {
            c.expect(m.kappa.has_value() && std::abs(*m.kappa - (po - pe) / (1 - pe)) <= 1e-12, "kappa differs");
        } else {
            c.expect(!m.kappa.has_value(), "kappa defined with p_e = 1");
        }
    }
    const double secs = seconds_since(t0);
    c.expect(secs < 5.0, "took " + std::to_string(secs) + " s");
    if (c.ok) c.detail = "1000 vectors, " + fmt::format("{:.3f}", secs) + " s";
    return c;
}

// 2. reference arithmetic
Check reference_arithmetic() {
    Check c;
    const auto a58 = accuracy({30, 3, 3, 22});
    const auto a32 = accuracy({12, 2, 4, 14});
    const auto kappa = cohen_kappa({20, 5, 10, 15});
    c.expect(std::abs(a58 - 0.8966) <= 1e-4, "52/58 = " + std::to_string(a58));
    c.expect(a32 == 0.8125, "26/32 = " + std::to_string(a32));
    c.expect(fmt::format("{:.2f}", a32) == "0.81", "26/32 renders as " + fmt::format("{:.2f}", a32));
    c.expect(kappa.has_value() && *kappa == 0.4, "kappa(20,5,10,15) = " + (kappa ? fmt::format("{:.17g}", *kappa) : "n/a"));
    if (c.ok) c.detail = fmt::format("{:.4f}, {:.4f}, kappa {}", a58, a32, *kappa);
    return c;
}

// 3. two CLI runs over the 200-paper corpus agree byte for byte
Check deterministic_end_to_end(const fs::path& tmp) {
    Check c;
    const auto dir = fixture_path("corpus200");
    const auto seed = trim(read_text(dir + "/seed.txt"));
    std::string reports[2];
    const auto t0 = Clock::now();
    for (int i = 0; i < 2; ++i) {
        const auto out = (tmp / ("c200-run" + std::to_string(i) + ".json")).string();
        const auto cache = (tmp / ("c200-cache" + std::to_string(i))).string();
        const int code = run_novelty({"--mock", dir, "--cache-dir", cache, "--set", "N=100", "--set", "k=10", "--set",
                                      "window=20", "--set", "stride=10", "--out", out, "check", "--idea",
                                      dir + "/idea.txt", "--seed", seed});
        c.expect(code == 0, "run " + std::to_string(i) + " exited " + std::to_string(code));
        if (!c.ok) return c;
        auto j = read_json(out);
        c.expect(j.contains("generated_at"), "report lacks generated_at");
        j.erase("generated_at");
        reports[i] = j.dump();
    }
    const double secs = seconds_since(t0);
    c.expect(reports[0] == reports[1], "reports differ");
    c.expect(secs < 10.0, "took " + std::to_string(secs) + " s");
    if (c.ok) c.detail = fmt::format("identical reports, {:.2f} s for both runs", secs);
    return c;
}

// 4. ablation accuracy ordering on the killer-paper suite
Check ablation_ordering() {
    Check c;
    FixtureStack fx("killer");
    auto ctx = fx.context();
    auto report =
        run_ablation(ctx, load_dataset(fixture_path("killer/dataset.jsonl")), all_variants(), PipelineConfig{});
    auto acc = [&](AblationVariant v) { return report.find(v)->accuracy; };
    using V = AblationVariant;
    const auto summary =
        fmt::format("complete {:.2f} > relevance {:.2f} > embedding {:.2f} > snippet {:.2f} >= keyword {:.2f}",
                    acc(V::complete), acc(V::relevance_rankgpt), acc(V::embedding_only), acc(V::snippet_only),
                    acc(V::keyword_only));
    c.expect(acc(V::complete) > acc(V::relevance_rankgpt) && acc(V::relevance_rankgpt) > acc(V::embedding_only) &&
                 acc(V::embedding_only) > acc(V::snippet_only) && acc(V::snippet_only) >= acc(V::keyword_only),
             "ordering broken: " + summary);
    c.expect(acc(V::complete) >= 0.9, "complete below 0.9: " + summary);
    c.expect(acc(V::keyword_only) <= 0.2, "keyword_only above 0.2: " + summary);
    if (c.ok) c.detail = summary;
    return c;
}

// 5. overlap and rank shift on the fixture trio
Check overlap_and_shift() {
    Check c;
    auto rl = [](std::vector<std::string> ids) { return make_ranked_list("i", Stage::facet_topK, ids); };
    c.expect(rank_overlap(rl({"A", "B", "C"}), rl({"B", "A", "C"}), 10) == 3, "swap overlap");
    const auto shift = rank_shift(rl({"A", "B", "C"}), rl({"B", "A", "C"}), 10);
    c.expect(shift && std::round(*shift * 1e4) / 1e4 == 0.6667 && *shift == 2.0 / 3.0, "swap shift");
    std::vector<std::string> ten;
    for (int i = 0; i < 10; ++i) ten.push_back("p" + std::to_string(i));
    c.expect(rank_overlap(rl(ten), rl(ten), 10) == 10 && rank_shift(rl(ten), rl(ten), 10) == 0.0, "identical");
    c.expect(rank_overlap(rl({"A", "B"}), rl({"C", "D"}), 10) == 0 && !rank_shift(rl({"A", "B"}), rl({"C", "D"}), 10),
             "disjoint");
    if (c.ok) c.detail = "(3, 0.6667), (10, 0), (0, undefined)";
    return c;
}

// 6. permutation parser over corrupted ranking strings
Check permutation_parser() {
    Check c;
    const auto t0 = Clock::now();
    std::mt19937_64 rng(99);
    const std::vector<std::string> noise = {"Ranking:", "the", "best", "is", ">", "then", "7", "[]", "[a]", "(3)", "\n"};
    int accepted = 0, rejected = 0;
    for (int trial = 0; trial < 10'000 && c.ok; ++trial) {
        const int w = std::uniform_int_distribution<int>(2, 20)(rng);
        const int tokens = std::uniform_int_distribution<int>(0, 25)(rng);
        std::string text;
        bool any_valid = false;
        for (int t = 0; t < tokens; ++t) {
            const int kind = std::uniform_int_distribution<int>(0, 5)(rng);
            if (kind <= 1) {
                text += "[" + std::to_string(std::uniform_int_distribution<int>(1, w)(rng)) + "]";
                any_valid = true;
            } else if (kind == 2) {
                text += "[" + std::to_string(w + std::uniform_int_distribution<int>(1, 50)(rng)) + "]";
            } else if (kind == 3) {
                text += "[0]";
            } else {
                text += noise[std::uniform_int_distribution<std::size_t>(0, noise.size() - 1)(rng)];
            }
            text += " > ";
        }
        try {
            const auto order = parse_permutation(text, w).order;
            ++accepted;
            c.expect(any_valid, "accepted a string without valid indices: " + text);
            std::set<int> distinct(order.begin(), order.end());
            c.expect(order.size() == static_cast<std::size_t>(w) && distinct.size() == order.size() &&
                         *distinct.begin() == 1 && *distinct.rbegin() == w,
                     "not a permutation for: " + text);
        } catch (const Error& e) {
            ++rejected;
            c.expect(e.kind() == ErrorKind::UnparseableRanking, "wrong error kind");
            c.expect(!any_valid, "rejected a string with a valid index: " + text);
        }
    }
    const double secs = seconds_since(t0);
    c.expect(secs < 5.0, "took " + std::to_string(secs) + " s");
    if (c.ok) c.detail = fmt::format("{} permutations, {} rejections, {:.3f} s", accepted, rejected, secs);
    return c;
}

// 7. an always-garbage judge never produces a verdict
Check no_default_verdict() {
    Check c;
    const std::vector<std::string> replies = {"novel", "Not novel.", "DECISION: perhaps\nRATIONALE: [1]",
                                              "DECISION: novel", "RATIONALE: like [1]", "{}"};
    int errors = 0;
    for (const std::string fixture : {"demo", "killer", "corpus200"}) {
        for (std::size_t g = 0; g < replies.size(); ++g) {
            FixtureStack fx(fixture);
            auto chat = std::make_shared<MockChatProvider>();
            MockRule garbage;
            garbage.name = "garbage";
            garbage.contains = {"## Idea to assess"};
            garbage.responses = {replies[g]};
            chat->add_rule(garbage);
            const auto table = read_json(fixture_path(fixture + "/chat.json"));
            for (const auto& r : table["rules"]) chat->add_rule(MockRule::from_json(r));
            Gateway gateway(chat, fx.embedder, nullptr, fx.clock, RetryPolicy{3, 1.0}, 1.0);
            PipelineContext ctx{gateway, *fx.scholar, fx.examples};
            PipelineConfig cfg;
            cfg.n_examples = std::min<int>(2, static_cast<int>(fx.examples.size()));
            cfg.judge_repair_attempts = static_cast<int>(g % 3);
            Idea idea;
            if (fixture == "killer") {
                const auto r = load_dataset(fixture_path("killer/dataset.jsonl")).front();
                idea = validate_idea(r.idea_text, r.seed_paper_ids, {}, r.id);
            } else {
                idea = validate_idea(read_text(fixture_path(fixture + "/idea.txt")), {}, {});
            }
            try {
                check_novelty(ctx, idea, cfg);
                c.expect(false, fixture + ": verdict produced from '" + replies[g] + "'");
            } catch (const Error& e) {
                ++errors;
                c.expect(e.kind() == ErrorKind::UnparseableVerdict && e.stage() == "judge",
                         fixture + ": unexpected error " + e.describe());
            }
        }
    }
    if (c.ok) c.detail = std::to_string(errors) + " garbage judgments, all raised UnparseableVerdict";
    return c;
}

// 8. retrieve + rerank + check --ranked equals check
Check stage_composition(const fs::path& tmp) {
    Check c;
    const auto dir = fixture_path("corpus200");
    const auto seed = trim(read_text(dir + "/seed.txt"));
    auto path = [&](const std::string& name) { return (tmp / name).string(); };
    const std::vector<std::string> base{"--mock", dir, "--no-cache"};
    auto run = [&](std::vector<std::string> tail) {
        auto args = base;
        args.insert(args.end(), tail.begin(), tail.end());
        return run_novelty(args);
    };
    c.expect(run({"--out", path("direct.json"), "check", "--idea", dir + "/idea.txt", "--seed", seed}) == 0, "check");
    c.expect(run({"--out", path("pool.json"), "retrieve", "--idea", dir + "/idea.txt", "--seed", seed}) == 0,
             "retrieve");
    c.expect(run({"--out", path("ranked.json"), "rerank", "--pool", path("pool.json")}) == 0, "rerank");
    c.expect(run({"--out", path("composed.json"), "check", "--ranked", path("ranked.json")}) == 0, "check --ranked");
    if (!c.ok) return c;
    const auto direct = read_json(path("direct.json"))["trace_digest"].get<std::string>();
    const auto composed = read_json(path("composed.json"))["trace_digest"].get<std::string>();
    c.expect(direct == composed, "trace digests differ: " + direct + " vs " + composed);
    if (c.ok) c.detail = "trace digest " + direct.substr(0, 16);
    return c;
}

}  // namespace

int main() {
    spdlog::set_level(spdlog::level::off);
    const auto tmp = scratch_dir();
    const std::vector<std::pair<std::string, std::function<Check()>>> criteria = {
        {"metric oracle equivalence", metric_oracle},
        {"reference arithmetic", reference_arithmetic},
        {"deterministic end-to-end", [&] { return deterministic_end_to_end(tmp); }},
        {"ablation ordering", ablation_ordering},
        {"overlap / rank shift", overlap_and_shift},
        {"permutation parser robustness", permutation_parser},
        {"no default verdict", no_default_verdict},
        {"stage composition equality", [&] { return stage_composition(tmp); }},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Check result;
        try {
            result = criteria[i].second();
        } catch (const std::exception& e) {
            result.ok = false;
            result.detail = std::string("exception: ") + e.what();
        }
        failed += result.ok ? 0 : 1;
        std::cout << (result.ok ? "PASS" : "FAIL") << " " << (i + 1) << " " << criteria[i].first << ": "
                  << result.detail << "\n";
    }
    fs::remove_all(tmp);
    return failed == 0 ? 0 : 1;
}
