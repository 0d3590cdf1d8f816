#include "moc/training.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "moc/error.hpp"
#include "moc/metrics.hpp"
#include "moc/parallel.hpp"
#include "moc/rng.hpp"

namespace moc {

namespace {

bool validation_usable(const std::vector<ScoredSlide>& val_slides)
{
    if (val_slides.size() < 2) {
        return false;
    }
    std::set<int> seen;
    for (const auto& s : val_slides) {
        if (s.label < 0) {
            return false;
        }
        seen.insert(s.label);
    }
    return seen.size() == val_slides.front().num_classes;
}

double validation_auc(const std::vector<ScoredSlide>& val_slides, const MetaLearner& meta, const TrainConfig& config)
{
    const std::size_t num_classes = val_slides.front().num_classes;
    Matrix probabilities(val_slides.size(), num_classes);
    std::vector<int> labels(val_slides.size());
    parallel_for(val_slides.size(), config.threads, [&](std::size_t i) {
        const Vector probs = softmax(slide_forward(val_slides[i], &meta, config).logits);
        std::copy(probs.begin(), probs.end(), probabilities.row(i).begin());
        labels[i] = val_slides[i].label;
    });
    return auc_macro_ovr(probabilities, labels);
}

void zero(MetaParameters& grads)
{
    for (auto tensor : grads.tensors()) {
        std::fill(tensor.begin(), tensor.end(), 0.0);
    }
}

} // namespace

Adam::Adam(const MetaParameters& shape, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), first_(shape.zeros_like()), second_(shape.zeros_like())
{
}

void Adam::step(MetaParameters& params, const MetaParameters& grads)
{
    ++t_;
    const double correction1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double correction2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    auto p = params.tensors();
    const auto g = grads.tensors();
    auto m = first_.tensors();
    auto v = second_.tensors();
    for (std::size_t t = 0; t < p.size(); ++t) {
        for (std::size_t i = 0; i < p[t].size(); ++i) {
            m[t][i] = beta1_ * m[t][i] + (1.0 - beta1_) * g[t][i];
            v[t][i] = beta2_ * v[t][i] + (1.0 - beta2_) * g[t][i] * g[t][i];
            const double m_hat = m[t][i] / correction1;
            const double v_hat = v[t][i] / correction2;
            p[t][i] -= lr_ * m_hat / (std::sqrt(v_hat) + eps_);
        }
    }
}

TrainResult train(const std::vector<ScoredSlide>& train_slides, const std::vector<ScoredSlide>& val_slides,
                  std::size_t embedding_dim, const TrainConfig& config)
{
    validate_config(config);
    if (train_slides.empty()) {
        throw Error(ErrorKind::EmptyTrainingSet, "no training slides");
    }
    for (const auto& s : train_slides) {
        if (s.label < 0) {
            throw Error(ErrorKind::EmptyTrainingSet, "training slide '" + s.slide_id + "' is unlabeled");
        }
    }

    MetaLearner meta = init_meta(embedding_dim, config.hidden, config.bank.size(), config.seed, config.head);
    Adam optimizer(meta.params, config.lr, config.adam_beta1, config.adam_beta2, config.adam_eps);
    MetaParameters grads = meta.params.zeros_like();
    Rng order_rng(derive_seed(config.seed, "epoch-order"));
    std::vector<std::size_t> order(train_slides.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    const bool use_validation = validation_usable(val_slides);
    TrainResult result;
    TrainReport& report = result.report;
    MetaLearner best = meta;
    double best_auc = -std::numeric_limits<double>::infinity();

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        order_rng.shuffle(std::span<std::size_t>(order));
        double loss_sum = 0.0;
        for (std::size_t idx : order) {
            const ScoredSlide& slide = train_slides[idx];
            const SlideForward forward = slide_forward(slide, &meta, config);
            const CeResult ce = ce_loss(forward.logits, slide.label);
            if (!std::isfinite(ce.loss)) {
                throw Error(ErrorKind::NonFiniteLoss,
                            "loss is " + std::to_string(ce.loss) + " on slide '" + slide.slide_id + "' at epoch " +
                                std::to_string(epoch));
            }
            loss_sum += ce.loss;
            zero(grads);
            slide_backward(meta, slide, forward, ce.grad, grads);
            optimizer.step(meta.params, grads);
        }
        report.epoch_loss.push_back(loss_sum / static_cast<double>(train_slides.size()));

        if (!use_validation) {
            report.val_auc.push_back(std::numeric_limits<double>::quiet_NaN());
            report.selected_epoch = epoch;
            best = meta;
            continue;
        }
        const double auc = validation_auc(val_slides, meta, config);
        report.val_auc.push_back(auc);
        if (auc > best_auc) {
            best_auc = auc;
            report.selected_epoch = epoch;
            best = meta;
        } else if (epoch - report.selected_epoch >= config.patience) {
            break;
        }
    }
    result.meta = std::move(best);
    report.checksum = parameter_checksum(result.meta);
    return result;
}

TrainResult train(const SlideSource& source, const FewShotSplit& split, const TrainConfig& config)
{
    validate_config(config);
    if (split.train_ids.empty()) {
        throw Error(ErrorKind::EmptyTrainingSet, "fold " + std::to_string(split.fold_index) + " has no training slides");
    }
    const auto train_slides = score_slides(source, split.train_ids, config);
    const auto val_slides = score_slides(source, split.val_ids, config);
    return train(train_slides, val_slides, source.manifest().embedding_dim, config);
}

std::string format_train_log(const TrainReport& report)
{
    std::ostringstream out;
    char buffer[96];
    out << "# selected_epoch\t" << report.selected_epoch << '\n';
    out << "# checksum\t" << hex64(report.checksum) << '\n';
    out << "epoch\tloss\tval_auc\n";
    for (std::size_t e = 0; e < report.epoch_loss.size(); ++e) {
        std::snprintf(buffer, sizeof(buffer), "%zu\t%.12f\t%.12f\n", e, report.epoch_loss[e], report.val_auc[e]);
        out << buffer;
    }
    return out.str();
}

} // namespace moc
