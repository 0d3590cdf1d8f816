#include "moc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "moc/error.hpp"

namespace moc {

double auc_binary(std::span<const double> scores, std::span<const int> labels, int positive_class)
{
    if (scores.size() != labels.size()) {
        throw Error(ErrorKind::LengthMismatch, "scores and labels differ in length");
    }
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // average 1-based ranks over tie groups
    double positive_rank_sum = 0.0;
    std::size_t n_pos = 0;
    for (std::size_t start = 0; start < n;) {
        std::size_t end = start + 1;
        while (end < n && scores[order[end]] == scores[order[start]]) {
            ++end;
        }
        const double rank = 0.5 * static_cast<double>(start + 1 + end);
        for (std::size_t i = start; i < end; ++i) {
            if (labels[order[i]] == positive_class) {
                positive_rank_sum += rank;
                ++n_pos;
            }
        }
        start = end;
    }
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) {
        throw Error(ErrorKind::DegenerateLabels, "AUC needs both positive and negative examples");
    }
    const double pos = static_cast<double>(n_pos);
    return (positive_rank_sum - pos * (pos + 1.0) / 2.0) / (pos * static_cast<double>(n_neg));
}

double auc_macro_ovr(const Matrix& scores, std::span<const int> labels)
{
    if (scores.rows() != labels.size()) {
        throw Error(ErrorKind::LengthMismatch, "score rows and labels differ in length");
    }
    if (labels.size() < 2) {
        throw Error(ErrorKind::DegenerateLabels, "AUC needs at least two samples");
    }
    const std::size_t num_classes = scores.cols();
    double total = 0.0;
    for (std::size_t c = 0; c < num_classes; ++c) {
        if (std::find(labels.begin(), labels.end(), static_cast<int>(c)) == labels.end()) {
            throw Error(ErrorKind::DegenerateLabels, "class " + std::to_string(c) + " absent from labels");
        }
        total += auc_binary(scores.column(c), labels, static_cast<int>(c));
    }
    return total / static_cast<double>(num_classes);
}

double accuracy(std::span<const std::size_t> predictions, std::span<const int> labels)
{
    if (predictions.size() != labels.size() || predictions.empty()) {
        throw Error(ErrorKind::LengthMismatch, "accuracy needs equal, non-empty prediction and label lists");
    }
    std::size_t hits = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        hits += static_cast<int>(predictions[i]) == labels[i] ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

MeanStd mean_std(std::span<const double> values)
{
    MeanStd out;
    if (values.empty()) {
        return out;
    }
    // Offsets from the first value keep identical folds at exactly zero spread.
    const double origin = values[0];
    const auto n = static_cast<double>(values.size());
    double shift = 0.0;
    for (double v : values) {
        shift += v - origin;
    }
    shift /= n;
    double var = 0.0;
    for (double v : values) {
        const double dev = (v - origin) - shift;
        var += dev * dev;
    }
    out.mean = origin + shift;
    out.std = std::sqrt(var / n);
    return out;
}

MetricSummary aggregate_folds(std::span<const FoldMetrics> folds)
{
    std::vector<double> aucs;
    std::vector<double> accs;
    for (const auto& f : folds) {
        aucs.push_back(f.auc);
        accs.push_back(f.acc);
    }
    return {mean_std(aucs), mean_std(accs)};
}

} // namespace moc
