#include "doctest.h"

#include <cmath>
#include <limits>

#include "expect_error.hpp"
#include "moc/dataset.hpp"
#include "moc/evaluation.hpp"
#include "moc/training.hpp"

using namespace moc;

namespace {

const MemorySource& default_source()
{
    static const MemorySource source(generate_synthetic(default_synthetic_spec(), 7));
    return source;
}

std::vector<FewShotSplit> default_splits(int shots)
{
    return sample_few_shot_splits(default_source().manifest(), shots, 5, 4, 16, 7);
}

} // namespace

TEST_CASE("first Adam step moves each parameter by the learning rate against the gradient sign")
{
    MetaParameters p = MetaParameters::zeros(2, 2, 2);
    MetaParameters g = p.zeros_like();
    g.w1(0, 0) = 3.0;
    g.w1(1, 1) = -1e-3;
    g.b2[1] = 0.5;
    Adam adam(p, 0.01);
    adam.step(p, g);
    CHECK(adam.steps() == 1);
    CHECK(p.w1(0, 0) == doctest::Approx(-0.01).epsilon(1e-6));
    CHECK(p.w1(1, 1) == doctest::Approx(0.01).epsilon(1e-4));
    CHECK(p.b2[1] == doctest::Approx(-0.01).epsilon(1e-6));
    CHECK(p.w1(0, 1) == 0.0);
}

TEST_CASE("Adam matches a scalar recurrence")
{
    MetaParameters p = MetaParameters::zeros(1, 1, 1);
    MetaParameters g = p.zeros_like();
    Adam adam(p, 0.1, 0.9, 0.999, 1e-8);
    double x = 0.0;
    double m = 0.0;
    double v = 0.0;
    for (int t = 1; t <= 20; ++t) {
        const double grad = 2.0 * (x - 1.0) + 0.1 * t;
        g.w1(0, 0) = grad;
        adam.step(p, g);
        m = 0.9 * m + 0.1 * grad;
        v = 0.999 * v + 0.001 * grad * grad;
        x -= 0.1 * (m / (1 - std::pow(0.9, t))) / (std::sqrt(v / (1 - std::pow(0.999, t))) + 1e-8);
        CHECK(p.w1(0, 0) == doctest::Approx(x).epsilon(1e-14));
    }
}

TEST_CASE("training is deterministic in the seed")
{
    const auto split = default_splits(1)[0];
    TrainConfig config;
    config.epochs = 8;
    config.patience = 8;
    const TrainResult a = train(default_source(), split, config);
    const TrainResult b = train(default_source(), split, config);
    CHECK(a.meta.params == b.meta.params);
    CHECK(a.report.checksum == b.report.checksum);
    CHECK(format_train_log(a.report) == format_train_log(b.report));

    config.threads = 3;
    CHECK(train(default_source(), split, config).meta.params == a.meta.params);

    config.threads = 1;
    config.seed = 8;
    CHECK(train(default_source(), split, config).report.checksum != a.report.checksum);
}

TEST_CASE("training loss falls and validation separates the default data")
{
    const auto split = default_splits(1)[0];
    const TrainResult r = train(default_source(), split, TrainConfig{});
    REQUIRE(r.report.epoch_loss.size() > 5);
    CHECK(r.report.epoch_loss[5] < r.report.epoch_loss[0]);
    const auto selected = static_cast<std::size_t>(r.report.selected_epoch);
    CHECK(r.report.val_auc[selected] >= 0.95);
    for (std::size_t e = 0; e < selected; ++e) {
        CHECK(r.report.val_auc[e] < r.report.val_auc[selected]);
    }
    for (std::size_t e = selected; e < r.report.val_auc.size(); ++e) {
        CHECK(r.report.val_auc[e] <= r.report.val_auc[selected]);
    }
    CHECK(r.report.epoch_loss.size() <= static_cast<std::size_t>(r.report.selected_epoch + TrainConfig{}.patience + 1));
    CHECK(r.report.checksum == parameter_checksum(r.meta));
}

TEST_CASE("training without usable validation keeps the last epoch")
{
    const auto split = default_splits(1)[0];
    TrainConfig config;
    config.epochs = 3;
    config.patience = 3;
    const auto slides = score_slides(default_source(), split.train_ids, config);
    const TrainResult r = train(slides, {}, 64, config);
    CHECK(r.report.selected_epoch == 2);
    CHECK(std::isnan(r.report.val_auc[0]));
}

TEST_CASE("training errors")
{
    TrainConfig config;
    CHECK_ERROR_KIND(train(std::vector<ScoredSlide>{}, {}, 64, config), ErrorKind::EmptyTrainingSet);

    const auto split = default_splits(1)[0];
    auto slides = score_slides(default_source(), split.train_ids, config);
    slides[0].label = -1;
    CHECK_ERROR_KIND(train(slides, {}, 64, config), ErrorKind::EmptyTrainingSet);

    slides = score_slides(default_source(), split.train_ids, config);
    for (auto& t : slides[1].tables) {
        for (double& v : t.scores.values()) {
            v = std::numeric_limits<double>::infinity();
        }
    }
    CHECK_ERROR_KIND(train(slides, {}, 64, config), ErrorKind::NonFiniteLoss);
}

TEST_CASE("train log layout")
{
    TrainReport report;
    report.epoch_loss = {0.5, 0.25};
    report.val_auc = {0.75, 1.0};
    report.selected_epoch = 1;
    report.checksum = 0x1234;
    CHECK(format_train_log(report) ==
          "# selected_epoch\t1\n# checksum\t0000000000001234\nepoch\tloss\tval_auc\n"
          "0\t0.500000000000\t0.750000000000\n1\t0.250000000000\t1.000000000000\n");
}
