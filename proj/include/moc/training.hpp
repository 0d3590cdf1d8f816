#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "moc/aggregation.hpp"
#include "moc/dataset.hpp"
#include "moc/meta_learner.hpp"
#include "moc/splits.hpp"

namespace moc {

/// Adam with bias correction, one moment pair per parameter.
class Adam {
public:
    Adam(const MetaParameters& shape, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

    void step(MetaParameters& params, const MetaParameters& grads);
    long steps() const noexcept { return t_; }

private:
    double lr_;
    double beta1_;
    double beta2_;
    double eps_;
    long t_ = 0;
    MetaParameters first_;
    MetaParameters second_;
};

struct TrainReport {
    std::vector<double> epoch_loss; ///< mean training loss per epoch
    std::vector<double> val_auc;    ///< NaN when the validation set cannot be scored
    int selected_epoch = 0;         ///< argmax validation AUC, earliest on ties
    std::uint64_t checksum = 0;     ///< parameter_checksum of the returned model
};

struct TrainResult {
    MetaLearner meta;
    TrainReport report;
};

/// Per-slide Adam updates over `train_slides` in a seeded per-epoch order, early stopping on
/// validation AUC. Returns the parameters of the selected epoch.
TrainResult train(const std::vector<ScoredSlide>& train_slides, const std::vector<ScoredSlide>& val_slides,
                  std::size_t embedding_dim, const TrainConfig& config);

TrainResult train(const SlideSource& source, const FewShotSplit& split, const TrainConfig& config);

/// "epoch<TAB>loss<TAB>val_auc" lines after a commented summary header.
std::string format_train_log(const TrainReport& report);

} // namespace moc
