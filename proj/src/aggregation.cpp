#include "moc/aggregation.hpp"

#include <cmath>

#include "moc/error.hpp"

namespace moc {

std::string_view to_string(Fusion fusion)
{
    return fusion == Fusion::Meta ? "meta" : "sum";
}

void validate_config(const TrainConfig& config)
{
    auto fail = [](const std::string& why) { throw Error(ErrorKind::Usage, why); };
    if (config.q == 0 || config.top_k == 0 || config.hidden == 0) {
        fail("q, topk and hidden must be positive");
    }
    if (!(config.lr > 0.0) || config.epochs < 1 || config.patience < 1) {
        fail("lr, epochs and patience must be positive");
    }
    if (config.patience > config.epochs) {
        fail("patience must not exceed epochs");
    }
    if (config.bank.empty()) {
        throw Error(ErrorKind::EmptySubset, "classifier bank is empty");
    }
    if (!(config.bank_options.temperature > 0.0)) {
        fail("temperature must be positive");
    }
}

PoolResult topk_pool(const Matrix& patch_logits, std::size_t k)
{
    if (patch_logits.rows() == 0) {
        throw Error(ErrorKind::DimensionMismatch, "top-K pooling over an empty bag");
    }
    if (k == 0) {
        throw Error(ErrorKind::Usage, "top-K pooling needs K >= 1");
    }
    PoolResult out;
    out.k_eff = std::min(k, patch_logits.rows());
    out.values.assign(patch_logits.cols(), 0.0);
    out.selected.resize(patch_logits.cols());
    for (std::size_t c = 0; c < patch_logits.cols(); ++c) {
        const Vector column = patch_logits.column(c);
        out.selected[c] = top_k_indices(column, out.k_eff);
        double total = 0.0;
        for (std::size_t r : out.selected[c]) {
            total += column[r];
        }
        out.values[c] = total / static_cast<double>(out.k_eff);
    }
    return out;
}

CeResult ce_loss(std::span<const double> logits, int label)
{
    if (label < 0 || static_cast<std::size_t>(label) >= logits.size()) {
        throw Error(ErrorKind::LabelOutOfRange,
                    "label " + std::to_string(label) + " for " + std::to_string(logits.size()) + " classes");
    }
    double peak = logits[0];
    for (double v : logits) {
        peak = std::max(peak, v);
    }
    double total = 0.0;
    for (double v : logits) {
        total += std::exp(v - peak);
    }
    const double log_norm = peak + std::log(total);
    CeResult out;
    out.loss = log_norm - logits[static_cast<std::size_t>(label)];
    out.grad.resize(logits.size());
    for (std::size_t c = 0; c < logits.size(); ++c) {
        out.grad[c] = std::exp(logits[c] - log_norm);
    }
    out.grad[static_cast<std::size_t>(label)] -= 1.0;
    return out;
}

ScoredSlide score_slide(const SlideBag& bag, const PromptSet& prompts, const TrainConfig& config)
{
    ScoredSlide out;
    out.slide_id = bag.slide_id;
    out.label = bag.label.value_or(-1);
    out.num_classes = prompts.num_classes();
    out.tables = score_bank(bag, prompts, config.bank, config.bank_options);
    out.nominated = config.nomination ? nominate_from_tables(bag.slide_id, out.tables, config.q)
                                      : nominate_all(bag.slide_id, bag.size());
    out.nominated_embeddings = Matrix(out.nominated.indices.size(), bag.dim());
    for (std::size_t r = 0; r < out.nominated.indices.size(); ++r) {
        const auto src = bag.patches.row(out.nominated.indices[r]);
        std::copy(src.begin(), src.end(), out.nominated_embeddings.row(r).begin());
    }
    return out;
}

SlideForward slide_forward(const ScoredSlide& slide, const MetaLearner* meta, const TrainConfig& config)
{
    const std::size_t m = slide.nominated.indices.size();
    const std::size_t num_weights = slide.tables.size();
    SlideForward out;
    out.patch_logits = Matrix(m, slide.num_classes);
    Vector fixed_weights;
    if (config.fusion == Fusion::Sum) {
        fixed_weights.assign(num_weights, 1.0);
    } else {
        if (meta == nullptr) {
            throw Error(ErrorKind::Usage, "meta fusion requires a meta-learner");
        }
        if (meta->num_weights() != num_weights) {
            throw Error(ErrorKind::DimensionMismatch, "meta-learner emits " + std::to_string(meta->num_weights()) +
                                                          " weights for a bank of " + std::to_string(num_weights));
        }
        out.caches.resize(m);
    }
    for (std::size_t r = 0; r < m; ++r) {
        const std::size_t patch = slide.nominated.indices[r];
        const Vector weights = config.fusion == Fusion::Sum
                                   ? fixed_weights
                                   : forward_weights(*meta, slide.nominated_embeddings.row(r), out.caches[r]);
        const Vector logits = mix_scores(weights, slide.tables, patch, slide.num_classes);
        std::copy(logits.begin(), logits.end(), out.patch_logits.row(r).begin());
    }
    out.pool = topk_pool(out.patch_logits, config.top_k);
    out.logits = out.pool.values;
    return out;
}

SlideForward slide_forward(const SlideBag& bag, const PromptSet& prompts, const MetaLearner* meta,
                           const TrainConfig& config)
{
    return slide_forward(score_slide(bag, prompts, config), meta, config);
}

void slide_backward(const MetaLearner& meta, const ScoredSlide& slide, const SlideForward& forward,
                    std::span<const double> upstream, MetaParameters& grads)
{
    const std::size_t m = slide.nominated.indices.size();
    const double share = 1.0 / static_cast<double>(forward.pool.k_eff);
    Matrix d_patch(m, slide.num_classes);
    std::vector<bool> touched(m, false);
    for (std::size_t c = 0; c < slide.num_classes; ++c) {
        for (std::size_t r : forward.pool.selected[c]) {
            d_patch(r, c) += upstream[c] * share;
            touched[r] = true;
        }
    }
    for (std::size_t r = 0; r < m; ++r) {
        if (!touched[r]) {
            continue;
        }
        backward(meta, slide.nominated_embeddings.row(r), forward.caches[r], d_patch.row(r), slide.tables,
                 slide.nominated.indices[r], grads);
    }
}

} // namespace moc
