#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "moc/classifier_bank.hpp"
#include "moc/meta_learner.hpp"
#include "moc/nomination.hpp"

namespace moc {

enum class Fusion {
    Meta, ///< per-patch weights from the meta-learner
    Sum,  ///< fixed unit weight for every classifier
};

std::string_view to_string(Fusion fusion);

/// Pipeline and optimization settings. Defaults follow the reference configuration
/// (q = 1000, K = 150, learning rate 1e-3).
struct TrainConfig {
    std::size_t q = 1000;
    std::size_t top_k = 150;
    double lr = 1e-3;
    int epochs = 100;
    int patience = 20;
    std::size_t hidden = 128;
    std::uint64_t seed = 7;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;

    std::vector<ClassifierId> bank{std::begin(kAllClassifiers), std::end(kAllClassifiers)};
    Fusion fusion = Fusion::Meta;
    WeightHead head = WeightHead::Softmax;
    bool nomination = true;
    BankOptions bank_options;
    std::size_t threads = 1;
};

void validate_config(const TrainConfig& config);

/// Slide-wide per-class top-K mean and the rows it selected.
struct PoolResult {
    Vector values;                                ///< C
    std::vector<std::vector<std::size_t>> selected; ///< per class, row indices into the pooled matrix
    std::size_t k_eff = 0;
};

/// out[c] = mean of the min(K, rows) largest entries of column c (lowest row wins ties).
PoolResult topk_pool(const Matrix& patch_logits, std::size_t k);

struct CeResult {
    double loss = 0.0;
    Vector grad; ///< softmax(logits) - onehot(label)
};

CeResult ce_loss(std::span<const double> logits, int label);

/// Everything about a slide that does not depend on trainable parameters:
/// score tables, the nominated patch set and the nominated embeddings.
struct ScoredSlide {
    std::string slide_id;
    int label = -1;
    std::size_t num_classes = 0;
    std::vector<ScoreTable> tables;   ///< bank order, all n patches
    NominatedBag nominated;
    Matrix nominated_embeddings;      ///< row r is patch nominated.indices[r]
};

ScoredSlide score_slide(const SlideBag& bag, const PromptSet& prompts, const TrainConfig& config);

struct SlideForward {
    Vector logits;                    ///< pooled, C
    Matrix patch_logits;              ///< |nominated| x C
    std::vector<ForwardCache> caches; ///< per nominated patch (meta fusion only)
    PoolResult pool;
};

/// Mixing weights per nominated patch, mixed logits, then top-K pooling.
/// `meta` is required for Fusion::Meta and ignored for Fusion::Sum.
SlideForward slide_forward(const ScoredSlide& slide, const MetaLearner* meta, const TrainConfig& config);
SlideForward slide_forward(const SlideBag& bag, const PromptSet& prompts, const MetaLearner* meta,
                           const TrainConfig& config);

/// Routes dL/dlogits through pooling and mixing into meta-learner gradients.
void slide_backward(const MetaLearner& meta, const ScoredSlide& slide, const SlideForward& forward,
                    std::span<const double> upstream, MetaParameters& grads);

} // namespace moc
