#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <sstream>

#include "expect_error.hpp"
#include "moc/byte_io.hpp"
#include "moc/dataset.hpp"
#include "moc/evaluation.hpp"
#include "oracles.hpp"

using namespace moc;

namespace {

SyntheticDataset noise_free(std::size_t slides_per_class)
{
    SyntheticSpec spec = default_synthetic_spec();
    spec.noise = 0.0;
    spec.slides_per_class = slides_per_class;
    spec.patches_per_slide = 60;
    return generate_synthetic(spec, 3);
}

std::vector<std::string> split_csv(const std::string& line)
{
    std::vector<std::string> out;
    std::stringstream in(line);
    std::string cell;
    while (std::getline(in, cell, ',')) {
        out.push_back(cell);
    }
    return out;
}

} // namespace

TEST_CASE("prediction argmax prefers the lowest index on ties")
{
    const SlidePrediction p = make_prediction("s", Vector{0.2, 0.7, 0.7});
    CHECK(p.predicted_class == 1);
    CHECK(p.probabilities[1] == doctest::Approx(p.probabilities[2]));
    double total = 0.0;
    for (double v : p.probabilities) {
        total += v;
    }
    CHECK(total == doctest::Approx(1.0));
}

TEST_CASE("zero-shot pools raw similarities")
{
    Rng rng(41);
    for (int trial = 0; trial < 50; ++trial) {
        const auto inst = oracle::random_instance(rng, 1 + rng.index(30), 8, 3, 2);
        const std::size_t k = 1 + rng.index(10);
        const SlidePrediction p = zero_shot_predict(inst.bag, inst.prompts, k);
        const auto sims = oracle::similarities(inst);
        Matrix m(sims.size(), 3);
        for (std::size_t i = 0; i < sims.size(); ++i) {
            std::copy(sims[i].begin(), sims[i].end(), m.row(i).begin());
        }
        const auto expect = oracle::sorted_topk_mean(m, k);
        for (std::size_t c = 0; c < 3; ++c) {
            CHECK(std::abs(p.logits[c] - expect[c]) < 1e-12);
        }
    }
}

TEST_CASE("noise-free slides are predicted correctly by an untrained model")
{
    const SyntheticDataset ds = noise_free(3);
    const MetaLearner meta = init_meta(64, 16, 4, 1);
    TrainConfig config;
    config.top_k = 6;
    for (const auto& bag : ds.bags) {
        const SlidePrediction p = moc_predict(bag, ds.prompts, &meta, config);
        const auto label = static_cast<std::size_t>(*bag.label);
        for (std::size_t c = 0; c < p.probabilities.size(); ++c) {
            CHECK(p.probabilities[label] >= p.probabilities[c]);
        }
        CHECK(moc_predict(bag, ds.prompts, &meta, config).logits == p.logits);
    }
}

TEST_CASE("fold metrics from predictions")
{
    std::vector<SlidePrediction> preds{make_prediction("a", Vector{1.0, 0.0}), make_prediction("b", Vector{0.0, 1.0}),
                                       make_prediction("c", Vector{0.6, 0.4}), make_prediction("d", Vector{0.3, 0.7})};
    const FoldMetrics m = fold_metrics(2, preds, {0, 1, 1, 0});
    CHECK(m.fold_index == 2);
    CHECK(m.n_test == 4);
    CHECK(m.acc == 0.5);
    CHECK(m.auc == doctest::Approx(0.75));
}

TEST_CASE("patch score export")
{
    const SyntheticDataset ds = noise_free(1);
    const SlideBag& bag = ds.bags[0];
    TrainConfig config;
    config.q = 6;
    const MetaLearner meta = init_meta(64, 8, 4, 2);
    const std::string csv = format_patch_scores(bag, ds.prompts, &meta, config);

    std::stringstream in(csv);
    std::string line;
    std::getline(in, line);
    const auto header = split_csv(line);
    CHECK(header.size() == 3 + 4 + 4 + 4 + 2);
    CHECK(header[3] == "score_confidence_peak");
    CHECK(header[7] == "nominated_confidence_peak");
    CHECK(header[11] == "lambda_confidence_peak");
    CHECK(header[15] == "logit_0");

    const auto w = ds.prompts.class_embeddings.row(static_cast<std::size_t>(*bag.label));
    std::size_t rows = 0;
    double best_other = -1e9;
    double min_tumor = 1e9;
    while (std::getline(in, line)) {
        const auto cells = split_csv(line);
        REQUIRE(cells.size() == header.size());
        CHECK(std::stoul(cells[0]) == rows);
        CHECK(std::stoi(cells[1]) == (*bag.coords)[rows][0]);
        const double peak = std::stod(cells[3]);
        if (dot(bag.patches.row(rows), w) > 1.0 - 1e-6) {
            min_tumor = std::min(min_tumor, peak);
            CHECK(cells[7] == "1");
        } else {
            best_other = std::max(best_other, peak);
        }
        ++rows;
    }
    CHECK(rows == bag.size());
    CHECK(min_tumor > best_other);

    const auto path = std::filesystem::temp_directory_path() / "moc_unit_export.csv";
    export_patch_scores(bag, ds.prompts, &meta, config, path);
    const std::string first = read_text_file(path);
    export_patch_scores(bag, ds.prompts, &meta, config, path);
    CHECK(read_text_file(path) == first);
    CHECK(first == csv);
    std::filesystem::remove(path);

    const std::string plain = format_patch_scores(bag, ds.prompts, nullptr, config);
    CHECK(split_csv(plain.substr(0, plain.find('\n'))).size() == 13);
    SlideBag bare = bag;
    bare.coords.reset();
    CHECK_ERROR_KIND(format_patch_scores(bare, ds.prompts, nullptr, config), ErrorKind::MissingCoords);
}

TEST_CASE("subsets are ordered by size then bank position")
{
    const auto subsets = all_subsets({std::begin(kAllClassifiers), std::end(kAllClassifiers)});
    REQUIRE(subsets.size() == 15);
    std::size_t pairs = 0;
    for (const auto& s : subsets) {
        pairs += s.size() == 2 ? 1 : 0;
    }
    CHECK(pairs == 6);
    CHECK(subsets[0] == std::vector<ClassifierId>{ClassifierId::ConfidencePeak});
    CHECK(subsets[4] == std::vector<ClassifierId>{ClassifierId::ConfidencePeak, ClassifierId::NormalizedCertainty});
    CHECK(subsets[9] ==
          std::vector<ClassifierId>{ClassifierId::DivergenceExtremum, ClassifierId::BackgroundSuppression});
    CHECK(subsets[14].size() == 4);
}

TEST_CASE("ablation rows, sum fusion of the peak alone, and empty subsets")
{
    SyntheticSpec spec = default_synthetic_spec();
    spec.slides_per_class = 8;
    spec.patches_per_slide = 80;
    const MemorySource source(generate_synthetic(spec, 9));
    const auto splits = sample_few_shot_splits(source.manifest(), 1, 2, 2, 8, 9);
    TrainConfig config;
    config.epochs = 3;
    config.patience = 2;
    config.top_k = 10;
    config.nomination = false;
    const std::vector<std::vector<ClassifierId>> subsets{
        {ClassifierId::ConfidencePeak}, {ClassifierId::ConfidencePeak, ClassifierId::DivergenceExtremum}};
    const auto rows = run_ablation(source, splits, config, subsets);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].fusion == Fusion::Meta);
    CHECK(rows[2].fusion == Fusion::Sum);
    CHECK(rows[3].subset.size() == 2);
    CHECK(rows[0].folds.size() == 2);

    for (std::size_t f = 0; f < splits.size(); ++f) {
        const FoldMetrics zs = evaluate_zero_shot(source, splits[f], config);
        CHECK(rows[2].folds[f].auc == zs.auc);
        CHECK(rows[2].folds[f].acc == zs.acc);
    }
    CHECK(mean_auc_for_size(rows, Fusion::Sum, 1) == rows[2].summary.auc.mean);
    CHECK_FALSE(mean_auc_for_size(rows, Fusion::Sum, 3).has_value());

    config.threads = 4;
    const auto threaded = run_ablation(source, splits, config, subsets);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        CHECK(threaded[r].summary.auc.mean == rows[r].summary.auc.mean);
    }
    CHECK_ERROR_KIND(run_ablation(source, splits, config, {{}}), ErrorKind::EmptySubset);
}
