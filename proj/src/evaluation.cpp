#include "novelty/evaluation.hpp"

#include <cmath>
#include <sstream>
#include <unordered_map>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "novelty/digest.hpp"
#include "novelty/json_io.hpp"

namespace novelty {

ConfusionMatrix confusion(const std::vector<Label>& preds, const std::vector<Label>& labels) {
    if (preds.size() != labels.size() || preds.empty()) {
        throw Error(ErrorKind::LengthMismatch, "confusion needs equal, non-empty vectors (got " +
                                                   std::to_string(preds.size()) + " predictions and " +
                                                   std::to_string(labels.size()) + " labels)");
    }
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const bool p = preds[i] == Label::novel;
        const bool g = labels[i] == Label::novel;
        if (p && g) ++cm.tp;
        else if (p) ++cm.fp;
        else if (g) ++cm.fn;
        else ++cm.tn;
    }
    return cm;
}

ConfusionMatrix confusion(const std::vector<std::string>& preds, const std::vector<std::string>& labels) {
    auto convert = [](const std::vector<std::string>& in) {
        std::vector<Label> out;
        out.reserve(in.size());
        for (const auto& s : in) {
            if (s == "novel") out.push_back(Label::novel);
            else if (s == "not_novel") out.push_back(Label::not_novel);
            else throw Error(ErrorKind::UnknownClass, "unknown class '" + s + "'");
        }
        return out;
    };
    return confusion(convert(preds), convert(labels));
}

namespace {

double ratio(std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

double harmonic(double p, double r) { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); }

}  // namespace

double accuracy(const ConfusionMatrix& cm) { return ratio(cm.tp + cm.tn, cm.total()); }

ClassMetrics class_metrics(const ConfusionMatrix& cm, Label cls) {
    ClassMetrics m;
    if (cls == Label::novel) {
        m.precision = ratio(cm.tp, cm.tp + cm.fp);
        m.recall = ratio(cm.tp, cm.tp + cm.fn);
    } else {
        m.precision = ratio(cm.tn, cm.tn + cm.fn);
        m.recall = ratio(cm.tn, cm.tn + cm.fp);
    }
    m.f1 = harmonic(m.precision, m.recall);
    return m;
}

double precision(const ConfusionMatrix& cm, Averaging averaging) {
    auto pos = class_metrics(cm, Label::novel);
    if (averaging == Averaging::positive_class) return pos.precision;
    return (pos.precision + class_metrics(cm, Label::not_novel).precision) / 2.0;
}

double recall(const ConfusionMatrix& cm, Averaging averaging) {
    auto pos = class_metrics(cm, Label::novel);
    if (averaging == Averaging::positive_class) return pos.recall;
    return (pos.recall + class_metrics(cm, Label::not_novel).recall) / 2.0;
}

double f1(const ConfusionMatrix& cm, Averaging averaging) {
    auto pos = class_metrics(cm, Label::novel);
    if (averaging == Averaging::positive_class) return pos.f1;
    return (pos.f1 + class_metrics(cm, Label::not_novel).f1) / 2.0;
}

std::optional<double> cohen_kappa(const ConfusionMatrix& cm) {
    // (p_o - p_e) / (1 - p_e) multiplied through by n^2, so the counts stay
    // integral until the single final division
    const double n = static_cast<double>(cm.total());
    if (n == 0.0) return std::nullopt;
    const double tp = static_cast<double>(cm.tp);
    const double fp = static_cast<double>(cm.fp);
    const double fn = static_cast<double>(cm.fn);
    const double tn = static_cast<double>(cm.tn);
    const double chance = (tp + fp) * (tp + fn) + (tn + fp) * (tn + fn);
    const double denom = n * n - chance;
    if (denom <= 0.0) return std::nullopt;
    return (n * (tp + tn) - chance) / denom;
}

MetricsReport compute_metrics(const ConfusionMatrix& cm) {
    MetricsReport r;
    r.cm = cm;
    r.n = cm.total();
    r.accuracy = accuracy(cm);
    r.precision = precision(cm);
    r.recall = recall(cm);
    r.f1 = f1(cm);
    r.kappa = cohen_kappa(cm);
    r.per_class[Label::novel] = class_metrics(cm, Label::novel);
    r.per_class[Label::not_novel] = class_metrics(cm, Label::not_novel);
    return r;
}

json to_json(const MetricsReport& r) {
    json per_class = json::object();
    for (const auto& [cls, m] : r.per_class) {
        per_class[std::string(to_string(cls))] = {{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}};
    }
    return json{{"n", r.n},
                {"accuracy", r.accuracy},
                {"precision", r.precision},
                {"recall", r.recall},
                {"f1", r.f1},
                {"averaging", "macro"},
                {"zero_division", 0},
                {"kappa", r.kappa ? json(*r.kappa) : json(nullptr)},
                {"per_class", per_class},
                {"confusion", {{"tp", r.cm.tp}, {"fp", r.cm.fp}, {"fn", r.cm.fn}, {"tn", r.cm.tn}}},
                {"positive_class", "novel"}};
}

namespace {

std::unordered_map<std::string, std::size_t> positions(const RankedList& list, std::size_t k) {
    std::unordered_map<std::string, std::size_t> pos;
    for (std::size_t i = 0; i < list.entries.size() && i < k; ++i) {
        pos.emplace(list.entries[i].paper_id, i + 1);
    }
    return pos;
}

}  // namespace

std::size_t rank_overlap(const RankedList& a, const RankedList& b, std::size_t k) {
    auto pb = positions(b, k);
    std::size_t n = 0;
    for (const auto& [id, _] : positions(a, k)) n += pb.count(id);
    return n;
}

std::optional<double> rank_shift(const RankedList& a, const RankedList& b, std::size_t k) {
    auto pa = positions(a, k);
    auto pb = positions(b, k);
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < a.entries.size() && i < k; ++i) {
        auto it = pb.find(a.entries[i].paper_id);
        if (it == pb.end()) continue;
        sum += std::fabs(static_cast<double>(pa.at(a.entries[i].paper_id)) - static_cast<double>(it->second));
        ++n;
    }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
}

std::string_view to_string(AblationVariant variant) noexcept {
    switch (variant) {
        case AblationVariant::complete: return "complete";
        case AblationVariant::relevance_rankgpt: return "relevance_rankgpt";
        case AblationVariant::embedding_only: return "embedding_only";
        case AblationVariant::snippet_only: return "snippet_only";
        case AblationVariant::keyword_only: return "keyword_only";
    }
    return "?";
}

std::string_view describe(AblationVariant variant) noexcept {
    switch (variant) {
        case AblationVariant::complete: return "embedding filter + facet rerank";
        case AblationVariant::relevance_rankgpt: return "embedding filter + relevance-only rerank";
        case AblationVariant::embedding_only: return "embedding filter, no LLM rerank";
        case AblationVariant::snippet_only: return "snippet search, provider order";
        case AblationVariant::keyword_only: return "keyword search, provider order";
    }
    return "?";
}

AblationVariant parse_variant(std::string_view text) {
    for (auto v : all_variants()) {
        if (to_string(v) == text) return v;
    }
    throw Error(ErrorKind::InvalidConfig, "unknown ablation variant '" + std::string(text) + "'");
}

std::vector<AblationVariant> all_variants() {
    return {AblationVariant::complete, AblationVariant::relevance_rankgpt, AblationVariant::embedding_only,
            AblationVariant::snippet_only, AblationVariant::keyword_only};
}

const VariantSummary* AblationReport::find(AblationVariant variant) const {
    for (const auto& v : variants) {
        if (v.variant == variant) return &v;
    }
    return nullptr;
}

namespace {

RankedList first_k(const std::string& idea_id, const std::vector<std::string>& ids, std::size_t k) {
    std::vector<std::string> top(ids.begin(), ids.begin() + static_cast<long>(std::min(k, ids.size())));
    return make_ranked_list(idea_id, Stage::raw_source, top);
}

AblationRun run_variant(PipelineContext& ctx, AblationVariant variant, const Idea& idea, const RetrieveStage& retrieved,
                        const RankedList& filtered, const PipelineConfig& cfg) {
    const auto& pool = retrieved.retrieval.pool;
    const auto k = static_cast<std::size_t>(cfg.evidence_size);
    RerankStage stage;
    stage.idea = idea;
    stage.pool = pool;
    stage.filtered = filtered;
    stage.trace = retrieved.trace;

    switch (variant) {
        case AblationVariant::complete:
        case AblationVariant::relevance_rankgpt: {
            auto criteria = variant == AblationVariant::complete ? RerankCriteria::facet() : RerankCriteria::relevance();
            stage.evidence = facet_rerank(ctx.gateway, idea, filtered, pool, cfg, criteria, &stage.rerank);
            break;
        }
        case AblationVariant::embedding_only:
            stage.evidence = first_k(idea.id, filtered.ids(), k);
            stage.evidence.stage = Stage::embedding_topN;
            break;
        case AblationVariant::snippet_only:
            stage.evidence = first_k(idea.id, retrieved.retrieval.raw_ranking(Source::snippet), k);
            break;
        case AblationVariant::keyword_only:
            stage.evidence = first_k(idea.id, retrieved.retrieval.raw_ranking(Source::keyword), k);
            break;
    }
    if (stage.evidence.empty()) {
        throw Error(ErrorKind::EmptyPool, "variant produced no evidence papers");
    }
    auto report = run_judge(ctx, stage, cfg);

    AblationRun run;
    run.idea_id = idea.id;
    run.prediction = report.verdict.decision;
    run.evidence = stage.evidence;
    run.pool_digest = sha256_hex(canonical_dump(to_json(pool)));
    return run;
}

}  // namespace

AblationReport run_ablation(PipelineContext& ctx, const std::vector<DatasetRecord>& dataset,
                            const std::vector<AblationVariant>& variants, const PipelineConfig& cfg) {
    if (dataset.empty()) {
        throw Error(ErrorKind::DatasetParse, "ablation needs a non-empty dataset");
    }
    if (variants.empty()) {
        throw Error(ErrorKind::InvalidConfig, "ablation needs at least one variant");
    }
    cfg.validate();
    AblationReport report;
    report.k = static_cast<std::size_t>(cfg.evidence_size);

    for (const auto& record : dataset) {
        const std::string context_id = record.id.empty() ? "line " + std::to_string(record.line) : record.id;
        auto annotated = [&](std::string_view what, const Error& e) {
            return Error(e.kind(), "(" + std::string(what) + ", " + context_id + "): " + e.what(), e.stage());
        };
        Idea idea;
        RetrieveStage retrieved;
        try {
            idea = validate_idea(record.idea_text, record.seed_paper_ids, {}, record.id);
            retrieved = run_retrieve(ctx, idea, cfg);
        } catch (const Error& e) {
            throw annotated("retrieval", e);
        }
        report.pool_digests[idea.id] = sha256_hex(canonical_dump(to_json(retrieved.retrieval.pool)));

        std::optional<RankedList> filtered;
        for (auto variant : variants) {
            try {
                if (!filtered && variant != AblationVariant::snippet_only && variant != AblationVariant::keyword_only) {
                    filtered = embed_filter(ctx.gateway, idea, retrieved.retrieval.pool, cfg.filter_size,
                                            cfg.embedding_model_id);
                }
                auto run = run_variant(ctx, variant, idea, retrieved, filtered.value_or(RankedList{}), cfg);
                run.gold = record.label;
                report.runs[variant].push_back(std::move(run));
            } catch (const Error& e) {
                throw annotated(to_string(variant), e);
            }
        }
    }

    const auto* complete_runs =
        report.runs.count(AblationVariant::complete) ? &report.runs.at(AblationVariant::complete) : nullptr;
    if (complete_runs == nullptr) {
        spdlog::warn("complete variant not selected; overlap and rank shift columns are omitted");
    }
    for (auto variant : variants) {
        const auto& runs = report.runs[variant];
        VariantSummary s;
        s.variant = variant;
        std::vector<Label> preds;
        std::vector<Label> gold;
        for (const auto& r : runs) {
            if (!r.gold) continue;
            preds.push_back(r.prediction);
            gold.push_back(*r.gold);
        }
        s.n = gold.size();
        if (!gold.empty()) {
            auto cm = confusion(preds, gold);
            s.accuracy = accuracy(cm);
            if (gold.size() == runs.size()) s.metrics = compute_metrics(cm);
        }
        if (complete_runs != nullptr) {
            double overlap_sum = 0.0;
            double shift_sum = 0.0;
            std::size_t shift_n = 0;
            for (std::size_t i = 0; i < runs.size(); ++i) {
                const auto& base = (*complete_runs)[i].evidence;
                overlap_sum += static_cast<double>(rank_overlap(runs[i].evidence, base, report.k));
                if (auto shift = rank_shift(runs[i].evidence, base, report.k)) {
                    shift_sum += *shift;
                    ++shift_n;
                }
            }
            if (!runs.empty()) s.overlap_vs_complete = overlap_sum / static_cast<double>(runs.size());
            if (shift_n > 0) s.rank_shift_vs_complete = shift_sum / static_cast<double>(shift_n);
        }
        report.variants.push_back(std::move(s));
    }
    return report;
}

json to_json(const AblationReport& report) {
    auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
    json per_variant = json::object();
    for (const auto& s : report.variants) {
        json entry{{"description", std::string(describe(s.variant))},
                   {"n", s.n},
                   {"accuracy", s.accuracy},
                   {"metrics", s.metrics ? to_json(*s.metrics) : json(nullptr)}};
        if (report.runs.count(AblationVariant::complete) != 0) {
            entry["overlap_vs_complete"] = opt(s.overlap_vs_complete);
            entry["rank_shift_vs_complete"] = opt(s.rank_shift_vs_complete);
        }
        per_variant[std::string(to_string(s.variant))] = entry;
    }
    json per_idea = json::array();
    for (const auto& s : report.variants) {
        for (const auto& r : report.runs.at(s.variant)) {
            per_idea.push_back({{"variant", std::string(to_string(s.variant))},
                                {"idea_id", r.idea_id},
                                {"gold", r.gold ? json(std::string(to_string(*r.gold))) : json(nullptr)},
                                {"prediction", std::string(to_string(r.prediction))},
                                {"top_k", r.evidence.ids()},
                                {"pool_digest", r.pool_digest}});
        }
    }
    return json{{"k", report.k}, {"per_variant", per_variant}, {"per_idea", per_idea},
                {"pool_digests", report.pool_digests}};
}

std::string render_table(const AblationReport& report) {
    const bool compare = report.runs.count(AblationVariant::complete) != 0;
    std::ostringstream out;
    out << fmt::format("{:<20} {:>5} {:>9}", "variant", "n", "accuracy");
    if (compare) out << fmt::format(" {:>8} {:>11}", "overlap", "rank shift");
    out << "\n";
    for (const auto& s : report.variants) {
        out << fmt::format("{:<20} {:>5} {:>8.2f}%", to_string(s.variant), s.n, 100.0 * s.accuracy);
        if (compare) {
            out << (s.overlap_vs_complete ? fmt::format(" {:>8.2f}", *s.overlap_vs_complete) : fmt::format(" {:>8}", "-"));
            out << (s.rank_shift_vs_complete ? fmt::format(" {:>11.2f}", *s.rank_shift_vs_complete)
                                             : fmt::format(" {:>11}", "-"));
        }
        out << "\n";
    }
    return out.str();
}

std::string render_table(const MetricsReport& r, std::string_view title) {
    std::ostringstream out;
    out << fmt::format("{:<24} {:>8} {:>9} {:>6} {:>6} {:>6}\n", "", "Accuracy", "Precision", "Recall", "F1", "Kappa");
    out << fmt::format("{:<24} {:>8.2f} {:>9.2f} {:>6.2f} {:>6.2f} {:>6}\n", title, r.accuracy, r.precision, r.recall,
                       r.f1, r.kappa ? fmt::format("{:.2f}", *r.kappa) : std::string("n/a"));
    for (const auto& [cls, m] : r.per_class) {
        out << fmt::format("  {:<22} {:>8} {:>9.2f} {:>6.2f} {:>6.2f}\n", display_name(cls), "", m.precision, m.recall,
                           m.f1);
    }
    out << fmt::format("n = {}; precision/recall/F1 are macro averages; empty classes count as 0\n", r.n);
    return out.str();
}

}  // namespace novelty
