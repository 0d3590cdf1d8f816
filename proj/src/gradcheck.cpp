#include "moc/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "moc/aggregation.hpp"
#include "moc/rng.hpp"

namespace moc {

namespace {

constexpr double kStep = 1e-5;
// Perturbations move activations by at most ~kStep; instances closer than this to a
// non-differentiable point are resampled.
constexpr double kKinkMargin = 1e-3;

Vector random_unit(Rng& rng, std::size_t d)
{
    Vector v(d);
    for (double& x : v) {
        x = rng.normal();
    }
    return l2_normalize(v);
}

MetaLearner random_meta(Rng& rng, std::size_t d, std::size_t hidden, std::size_t num_weights)
{
    MetaLearner meta;
    meta.params = MetaParameters::zeros(d, hidden, num_weights);
    for (auto tensor : meta.params.tensors()) {
        for (double& v : tensor) {
            v = rng.uniform(-1.0, 1.0);
        }
    }
    return meta;
}

bool near_relu_kink(const MetaLearner& meta, std::span<const double> u)
{
    ForwardCache cache;
    forward_weights(meta, u, cache);
    return std::any_of(cache.pre_activation.begin(), cache.pre_activation.end(),
                       [](double z) { return std::abs(z) < kKinkMargin; });
}

void compare(const MetaParameters& analytic, const MetaParameters& numeric, GradCheckResult& result)
{
    const auto a = analytic.tensors();
    const auto n = numeric.tensors();
    for (std::size_t t = 0; t < a.size(); ++t) {
        for (std::size_t i = 0; i < a[t].size(); ++i) {
            result.max_relative_error = std::max(result.max_relative_error, relative_error(a[t][i], n[t][i]));
            ++result.parameters_checked;
        }
    }
}

} // namespace

double relative_error(double analytic, double numeric, double floor)
{
    const double scale = std::max({std::abs(analytic), std::abs(numeric), floor});
    return std::abs(analytic - numeric) / scale;
}

MetaParameters numeric_gradient(MetaLearner& meta, const std::function<double(const MetaLearner&)>& loss, double step)
{
    MetaParameters out = meta.params.zeros_like();
    auto params = meta.params.tensors();
    auto grads = out.tensors();
    for (std::size_t t = 0; t < params.size(); ++t) {
        for (std::size_t i = 0; i < params[t].size(); ++i) {
            const double saved = params[t][i];
            params[t][i] = saved + step;
            const double up = loss(meta);
            params[t][i] = saved - step;
            const double down = loss(meta);
            params[t][i] = saved;
            grads[t][i] = (up - down) / (2.0 * step);
        }
    }
    return out;
}

GradCheckResult check_meta_gradients(std::uint64_t seed, std::size_t instances)
{
    constexpr std::size_t d = 5;
    constexpr std::size_t hidden = 3;
    constexpr std::size_t num_classes = 3;
    Rng rng(derive_seed(seed, "gradcheck-meta"));
    GradCheckResult result;
    while (result.instances < instances) {
        MetaLearner meta = random_meta(rng, d, hidden, std::size(kAllClassifiers));
        meta.head = rng.uniform() < 0.8 ? WeightHead::Softmax : WeightHead::Linear;
        const Vector u = random_unit(rng, d);
        if (near_relu_kink(meta, u)) {
            ++result.rejected;
            continue;
        }
        std::vector<ScoreTable> tables;
        for (ClassifierId id : kAllClassifiers) {
            const ScoreKind kind = kind_of(id);
            Matrix scores(1, kind == ScoreKind::VectorPerClass ? num_classes : 1);
            for (double& v : scores.values()) {
                v = rng.uniform(-1.0, 1.0);
            }
            tables.push_back({id, kind, std::move(scores)});
        }
        Vector upstream(num_classes);
        for (double& g : upstream) {
            g = rng.uniform(-1.0, 1.0);
        }
        auto loss = [&](const MetaLearner& m) {
            return dot(upstream, mix_scores(forward_weights(m, u), tables, 0, num_classes));
        };

        ForwardCache cache;
        forward_weights(meta, u, cache);
        MetaParameters analytic = meta.params.zeros_like();
        backward(meta, u, cache, upstream, tables, 0, analytic);
        compare(analytic, numeric_gradient(meta, loss, kStep), result);
        ++result.instances;
    }
    return result;
}

GradCheckResult check_end_to_end_gradients(std::uint64_t seed, std::size_t instances)
{
    constexpr std::size_t d = 6;
    constexpr std::size_t hidden = 4;
    constexpr std::size_t num_classes = 3;
    constexpr std::size_t num_background = 2;
    constexpr std::size_t num_patches = 12;
    Rng rng(derive_seed(seed, "gradcheck-end-to-end"));
    GradCheckResult result;
    while (result.instances < instances) {
        PromptSet prompts;
        prompts.class_names = {"a", "b", "c"};
        prompts.background_names = {"x", "y"};
        prompts.class_embeddings = Matrix(num_classes, d);
        prompts.background_embeddings = Matrix(num_background, d);
        for (std::size_t c = 0; c < num_classes; ++c) {
            const Vector w = random_unit(rng, d);
            std::copy(w.begin(), w.end(), prompts.class_embeddings.row(c).begin());
        }
        for (std::size_t b = 0; b < num_background; ++b) {
            const Vector w = random_unit(rng, d);
            std::copy(w.begin(), w.end(), prompts.background_embeddings.row(b).begin());
        }
        SlideBag bag;
        bag.slide_id = "gradcheck";
        bag.label = static_cast<int>(rng.index(num_classes));
        bag.patches = Matrix(num_patches, d);
        for (std::size_t i = 0; i < num_patches; ++i) {
            const Vector u = random_unit(rng, d);
            std::copy(u.begin(), u.end(), bag.patches.row(i).begin());
        }

        TrainConfig config;
        config.q = 3;
        config.top_k = 2 + rng.index(3);
        config.hidden = hidden;
        config.head = rng.uniform() < 0.8 ? WeightHead::Softmax : WeightHead::Linear;
        const ScoredSlide slide = score_slide(bag, prompts, config);
        MetaLearner meta = random_meta(rng, d, hidden, config.bank.size());
        meta.head = config.head;

        bool reject = false;
        for (std::size_t r = 0; r < slide.nominated_embeddings.rows() && !reject; ++r) {
            reject = near_relu_kink(meta, slide.nominated_embeddings.row(r));
        }
        const SlideForward forward = slide_forward(slide, &meta, config);
        // K-th vs (K+1)-th largest per class must be well separated
        if (!reject && forward.pool.k_eff < forward.patch_logits.rows()) {
            for (std::size_t c = 0; c < num_classes && !reject; ++c) {
                Vector column = forward.patch_logits.column(c);
                std::sort(column.begin(), column.end(), std::greater<>());
                reject = column[forward.pool.k_eff - 1] - column[forward.pool.k_eff] < kKinkMargin;
            }
        }
        if (reject) {
            ++result.rejected;
            continue;
        }

        const CeResult ce = ce_loss(forward.logits, *bag.label);
        MetaParameters analytic = meta.params.zeros_like();
        slide_backward(meta, slide, forward, ce.grad, analytic);
        auto loss = [&](const MetaLearner& m) { return ce_loss(slide_forward(slide, &m, config).logits, *bag.label).loss; };
        compare(analytic, numeric_gradient(meta, loss, kStep), result);
        ++result.instances;
    }
    return result;
}

} // namespace moc
