#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "moc/embedding_store.hpp"
#include "moc/linalg.hpp"

namespace moc {

/// The four non-parametric patch scorers.
enum class ClassifierId {
    ConfidencePeak,        ///< cosine similarity to each class prompt
    NormalizedCertainty,   ///< softmax over class similarities
    DivergenceExtremum,    ///< gap between the two highest class similarities
    BackgroundSuppression, ///< negative summed similarity to background prompts
};

inline constexpr ClassifierId kAllClassifiers[] = {
    ClassifierId::ConfidencePeak,
    ClassifierId::NormalizedCertainty,
    ClassifierId::DivergenceExtremum,
    ClassifierId::BackgroundSuppression,
};

std::string_view to_string(ClassifierId id);
std::optional<ClassifierId> parse_classifier_id(std::string_view name);
/// Comma-separated list of classifier ids; throws Usage on unknown or repeated names.
std::vector<ClassifierId> parse_bank(std::string_view list);
std::string format_bank(const std::vector<ClassifierId>& bank);

enum class ScoreKind {
    VectorPerClass, ///< n x C
    ScalarPerPatch, ///< n x 1, broadcast to every class when mixed
};

ScoreKind kind_of(ClassifierId id);

struct ScoreTable {
    ClassifierId id = ClassifierId::ConfidencePeak;
    ScoreKind kind = ScoreKind::VectorPerClass;
    Matrix scores;

    std::size_t num_patches() const noexcept { return scores.rows(); }
    /// Score of `patch` for class `cls`; scalar tables ignore `cls`.
    double at(std::size_t patch, std::size_t cls) const
    {
        return kind == ScoreKind::ScalarPerPatch ? scores(patch, 0) : scores(patch, cls);
    }
};

struct BankOptions {
    /// Logit divisor inside the normalized-certainty softmax.
    double temperature = 1.0;
    /// Per-slide z-scoring of each table (off by default).
    bool standardize = false;
};

ScoreTable score_confidence_peak(const SlideBag& bag, const PromptSet& prompts);
ScoreTable score_normalized_certainty(const SlideBag& bag, const PromptSet& prompts, double temperature = 1.0);
ScoreTable score_divergence_extremum(const SlideBag& bag, const PromptSet& prompts);
ScoreTable score_background_suppression(const SlideBag& bag, const PromptSet& prompts);

/// Scores one slide with every classifier in `bank`, in bank order. Similarities are computed once.
std::vector<ScoreTable> score_bank(const SlideBag& bag, const PromptSet& prompts,
                                   const std::vector<ClassifierId>& bank, const BankOptions& options = {});

/// Label-free per-patch ranking used for nomination: row max for per-class tables,
/// the scores themselves for scalar tables.
Vector ranking_score(const ScoreTable& table);

} // namespace moc
