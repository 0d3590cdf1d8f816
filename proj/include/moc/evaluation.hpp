#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "moc/aggregation.hpp"
#include "moc/dataset.hpp"
#include "moc/metrics.hpp"
#include "moc/splits.hpp"

namespace moc {

struct SlidePrediction {
    std::string slide_id;
    Vector logits;
    Vector probabilities;
    std::size_t predicted_class = 0; ///< argmax, lowest index on ties
};

SlidePrediction make_prediction(std::string slide_id, Vector logits);

/// Top-K pooling straight over the cosine-similarity table: no nomination, no meta-learner.
SlidePrediction zero_shot_predict(const SlideBag& bag, const PromptSet& prompts, std::size_t k);

SlidePrediction moc_predict(const ScoredSlide& slide, const MetaLearner* meta, const TrainConfig& config);
SlidePrediction moc_predict(const SlideBag& bag, const PromptSet& prompts, const MetaLearner* meta,
                            const TrainConfig& config);

FoldMetrics fold_metrics(int fold_index, const std::vector<SlidePrediction>& predictions,
                         const std::vector<int>& labels);

/// Zero-shot metrics on the fold's test slides.
FoldMetrics evaluate_zero_shot(const SlideSource& source, const FewShotSplit& split, const TrainConfig& config);

/// MOC metrics on the fold's test slides. `meta` may be null for Fusion::Sum.
FoldMetrics evaluate_moc(const SlideSource& source, const FewShotSplit& split, const MetaLearner* meta,
                         const TrainConfig& config);

/// CSV, one row per patch ordered by index: index, x, y, ranking score per classifier,
/// nominated flag per classifier, Lambda per classifier (meta only), mixed logit per class.
/// Without a meta-learner the mixed logits use unit weights.
std::string format_patch_scores(const SlideBag& bag, const PromptSet& prompts, const MetaLearner* meta,
                                const TrainConfig& config);
void export_patch_scores(const SlideBag& bag, const PromptSet& prompts, const MetaLearner* meta,
                         const TrainConfig& config, const std::filesystem::path& path);

struct AblationRow {
    std::vector<ClassifierId> subset;
    Fusion fusion = Fusion::Meta;
    std::vector<FoldMetrics> folds;
    MetricSummary summary;
};

/// Every non-empty subset of `bank`, ordered by size then lexicographically by bank position.
std::vector<std::vector<ClassifierId>> all_subsets(const std::vector<ClassifierId>& bank);

/// Trains and evaluates meta fusion for each subset and evaluates fixed-sum fusion alongside.
/// Per-(subset, fold) jobs run in parallel; results do not depend on the thread count.
std::vector<AblationRow> run_ablation(const SlideSource& source, const std::vector<FewShotSplit>& splits,
                                      const TrainConfig& config,
                                      const std::vector<std::vector<ClassifierId>>& subsets);

/// Mean AUC over all rows of a given fusion whose subset has `size` classifiers.
std::optional<double> mean_auc_for_size(const std::vector<AblationRow>& rows, Fusion fusion, std::size_t size);

} // namespace moc
