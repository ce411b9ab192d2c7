#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "novelty/domain.hpp"
#include "novelty/pipeline.hpp"

namespace novelty {

/// Binary confusion counts with "novel" as the positive class.
struct ConfusionMatrix {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    std::size_t tn = 0;

    std::size_t total() const noexcept { return tp + fp + fn + tn; }
    bool operator==(const ConfusionMatrix&) const = default;
};

/// Throws LengthMismatch (including both empty).
ConfusionMatrix confusion(const std::vector<Label>& preds, const std::vector<Label>& labels);
/// String form; classes other than novel / not_novel raise UnknownClass.
ConfusionMatrix confusion(const std::vector<std::string>& preds, const std::vector<std::string>& labels);

enum class Averaging { macro, positive_class };

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

double accuracy(const ConfusionMatrix& cm);
/// Per-class metrics treating `cls` as positive. Empty denominators give 0.
ClassMetrics class_metrics(const ConfusionMatrix& cm, Label cls);
double precision(const ConfusionMatrix& cm, Averaging averaging = Averaging::macro);
double recall(const ConfusionMatrix& cm, Averaging averaging = Averaging::macro);
/// Macro f1 is the mean of per-class f1 scores.
double f1(const ConfusionMatrix& cm, Averaging averaging = Averaging::macro);
/// nullopt when chance agreement is 1.
std::optional<double> cohen_kappa(const ConfusionMatrix& cm);

struct MetricsReport {
    std::size_t n = 0;
    double accuracy = 0.0;
    double precision = 0.0;  // macro
    double recall = 0.0;
    double f1 = 0.0;
    std::optional<double> kappa;
    std::map<Label, ClassMetrics> per_class;
    ConfusionMatrix cm;
};

MetricsReport compute_metrics(const ConfusionMatrix& cm);
nlohmann::json to_json(const MetricsReport& report);

/// |top-k(a) ∩ top-k(b)|.
std::size_t rank_overlap(const RankedList& a, const RankedList& b, std::size_t k);
/// Mean |rank_a - rank_b| over the shared top-k ids; nullopt without overlap.
std::optional<double> rank_shift(const RankedList& a, const RankedList& b, std::size_t k);

enum class AblationVariant { complete, relevance_rankgpt, embedding_only, snippet_only, keyword_only };

std::string_view to_string(AblationVariant variant) noexcept;
std::string_view describe(AblationVariant variant) noexcept;
AblationVariant parse_variant(std::string_view text);
std::vector<AblationVariant> all_variants();

struct AblationRun {
    std::string idea_id;
    std::optional<Label> gold;
    Label prediction = Label::novel;
    RankedList evidence;
    std::string pool_digest;  // of the pool the variant's evidence came from
};

struct VariantSummary {
    AblationVariant variant = AblationVariant::complete;
    std::size_t n = 0;
    double accuracy = 0.0;
    std::optional<MetricsReport> metrics;  // when every idea is labeled
    std::optional<double> overlap_vs_complete;
    std::optional<double> rank_shift_vs_complete;
};

struct AblationReport {
    std::vector<VariantSummary> variants;
    std::map<AblationVariant, std::vector<AblationRun>> runs;
    /// Pool digest per idea; every variant consumed the same pool.
    std::map<std::string, std::string> pool_digests;
    std::size_t k = 0;

    const VariantSummary* find(AblationVariant variant) const;
};

/// Runs each variant over the dataset. Retrieval runs once per idea and is
/// shared by every variant. Raw snippet / keyword variants take the provider
/// order as rank. Errors carry "(variant, idea)" context.
AblationReport run_ablation(PipelineContext& ctx, const std::vector<DatasetRecord>& dataset,
                            const std::vector<AblationVariant>& variants, const PipelineConfig& cfg);

nlohmann::json to_json(const AblationReport& report);
/// Plain-text table: accuracy per variant, then overlap and rank shift
/// against the complete system when it was run.
std::string render_table(const AblationReport& report);
std::string render_table(const MetricsReport& report, std::string_view title);

}  // namespace novelty
