#pragma once

#include <span>
#include <vector>

#include "moc/linalg.hpp"

namespace moc {

/// Binary AUC of `scores` for (labels == positive_class), by rank sums (Mann-Whitney U)
/// with ties contributing one half.
double auc_binary(std::span<const double> scores, std::span<const int> labels, int positive_class);

/// Macro average over classes of the one-vs-rest AUC of column c against (label == c).
/// Throws DegenerateLabels when a class is absent or N < 2.
double auc_macro_ovr(const Matrix& scores, std::span<const int> labels);

/// Fraction of predictions equal to the label. Throws LengthMismatch.
double accuracy(std::span<const std::size_t> predictions, std::span<const int> labels);

struct FoldMetrics {
    int fold_index = 0;
    double auc = 0.0;
    double acc = 0.0;
    std::size_t n_test = 0;
};

struct MeanStd {
    double mean = 0.0;
    double std = 0.0; ///< population standard deviation
};

struct MetricSummary {
    MeanStd auc;
    MeanStd acc;
};

MeanStd mean_std(std::span<const double> values);
MetricSummary aggregate_folds(std::span<const FoldMetrics> folds);

} // namespace moc
