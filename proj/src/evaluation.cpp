#include "moc/evaluation.hpp"

#include <algorithm>
#include <sstream>

#include "moc/byte_io.hpp"
#include "moc/error.hpp"
#include "moc/parallel.hpp"
#include "moc/training.hpp"

namespace moc {

namespace {

std::string format_double(double v)
{
    char buffer[40];
    std::snprintf(buffer, sizeof(buffer), "%.9g", v);
    return buffer;
}

std::vector<int> labels_of(const SlideSource& source, const std::vector<std::string>& ids)
{
    std::vector<int> labels;
    for (const auto& id : ids) {
        labels.push_back(source.manifest().find(id).label);
    }
    return labels;
}

} // namespace

SlidePrediction make_prediction(std::string slide_id, Vector logits)
{
    SlidePrediction out;
    out.slide_id = std::move(slide_id);
    out.probabilities = softmax(logits);
    out.predicted_class = static_cast<std::size_t>(
        std::distance(logits.begin(), std::max_element(logits.begin(), logits.end())));
    out.logits = std::move(logits);
    return out;
}

SlidePrediction zero_shot_predict(const SlideBag& bag, const PromptSet& prompts, std::size_t k)
{
    const ScoreTable peak = score_confidence_peak(bag, prompts);
    return make_prediction(bag.slide_id, topk_pool(peak.scores, k).values);
}

SlidePrediction moc_predict(const ScoredSlide& slide, const MetaLearner* meta, const TrainConfig& config)
{
    return make_prediction(slide.slide_id, slide_forward(slide, meta, config).logits);
}

SlidePrediction moc_predict(const SlideBag& bag, const PromptSet& prompts, const MetaLearner* meta,
                            const TrainConfig& config)
{
    return moc_predict(score_slide(bag, prompts, config), meta, config);
}

FoldMetrics fold_metrics(int fold_index, const std::vector<SlidePrediction>& predictions,
                         const std::vector<int>& labels)
{
    if (predictions.size() != labels.size() || predictions.empty()) {
        throw Error(ErrorKind::LengthMismatch, "predictions and labels differ in length");
    }
    Matrix probabilities(predictions.size(), predictions.front().probabilities.size());
    std::vector<std::size_t> predicted;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        std::copy(predictions[i].probabilities.begin(), predictions[i].probabilities.end(),
                  probabilities.row(i).begin());
        predicted.push_back(predictions[i].predicted_class);
    }
    FoldMetrics out;
    out.fold_index = fold_index;
    out.auc = auc_macro_ovr(probabilities, labels);
    out.acc = accuracy(predicted, labels);
    out.n_test = predictions.size();
    return out;
}

FoldMetrics evaluate_zero_shot(const SlideSource& source, const FewShotSplit& split, const TrainConfig& config)
{
    std::vector<SlidePrediction> predictions(split.test_ids.size());
    parallel_for(split.test_ids.size(), config.threads, [&](std::size_t i) {
        predictions[i] = zero_shot_predict(source.load(split.test_ids[i]), source.prompts(), config.top_k);
    });
    return fold_metrics(split.fold_index, predictions, labels_of(source, split.test_ids));
}

FoldMetrics evaluate_moc(const SlideSource& source, const FewShotSplit& split, const MetaLearner* meta,
                         const TrainConfig& config)
{
    std::vector<SlidePrediction> predictions(split.test_ids.size());
    parallel_for(split.test_ids.size(), config.threads, [&](std::size_t i) {
        predictions[i] = moc_predict(source.load(split.test_ids[i]), source.prompts(), meta, config);
    });
    return fold_metrics(split.fold_index, predictions, labels_of(source, split.test_ids));
}

std::string format_patch_scores(const SlideBag& bag, const PromptSet& prompts, const MetaLearner* meta,
                                const TrainConfig& config)
{
    if (!bag.coords) {
        throw Error(ErrorKind::MissingCoords, "slide '" + bag.slide_id + "' has no patch coordinates");
    }
    const ScoredSlide scored = score_slide(bag, prompts, config);
    const std::size_t num_classes = prompts.num_classes();
    const std::size_t num_weights = scored.tables.size();
    if (meta != nullptr && meta->num_weights() != num_weights) {
        throw Error(ErrorKind::DimensionMismatch, "meta-learner does not match the classifier bank");
    }
    std::vector<Vector> rankings;
    for (const auto& table : scored.tables) {
        rankings.push_back(ranking_score(table));
    }
    std::vector<std::vector<bool>> elected(num_weights, std::vector<bool>(bag.size(), false));
    for (std::size_t h = 0; h < scored.nominated.per_classifier.size(); ++h) {
        for (std::size_t idx : scored.nominated.per_classifier[h].second) {
            elected[h][idx] = true;
        }
    }
    if (!config.nomination) {
        for (auto& flags : elected) {
            std::fill(flags.begin(), flags.end(), true);
        }
    }

    std::ostringstream out;
    out << "index,x,y";
    for (ClassifierId id : config.bank) {
        out << ",score_" << to_string(id);
    }
    for (ClassifierId id : config.bank) {
        out << ",nominated_" << to_string(id);
    }
    if (meta != nullptr) {
        for (ClassifierId id : config.bank) {
            out << ",lambda_" << to_string(id);
        }
    }
    for (std::size_t c = 0; c < num_classes; ++c) {
        out << ",logit_" << c;
    }
    out << '\n';

    const Vector unit_weights(num_weights, 1.0);
    for (std::size_t i = 0; i < bag.size(); ++i) {
        out << i << ',' << (*bag.coords)[i][0] << ',' << (*bag.coords)[i][1];
        for (std::size_t h = 0; h < num_weights; ++h) {
            out << ',' << format_double(rankings[h][i]);
        }
        for (std::size_t h = 0; h < num_weights; ++h) {
            out << ',' << (elected[h][i] ? 1 : 0);
        }
        Vector weights = unit_weights;
        if (meta != nullptr) {
            weights = forward_weights(*meta, bag.patches.row(i));
            for (double w : weights) {
                out << ',' << format_double(w);
            }
        }
        for (double logit : mix_scores(weights, scored.tables, i, num_classes)) {
            out << ',' << format_double(logit);
        }
        out << '\n';
    }
    return out.str();
}

void export_patch_scores(const SlideBag& bag, const PromptSet& prompts, const MetaLearner* meta,
                         const TrainConfig& config, const std::filesystem::path& path)
{
    write_text_file(path, format_patch_scores(bag, prompts, meta, config));
}

std::vector<std::vector<ClassifierId>> all_subsets(const std::vector<ClassifierId>& bank)
{
    std::vector<std::vector<ClassifierId>> out;
    const std::size_t n = bank.size();
    for (std::size_t size = 1; size <= n; ++size) {
        // lexicographic combinations of bank positions
        std::vector<std::size_t> pick(size);
        for (std::size_t i = 0; i < size; ++i) {
            pick[i] = i;
        }
        for (;;) {
            std::vector<ClassifierId> subset;
            for (std::size_t p : pick) {
                subset.push_back(bank[p]);
            }
            out.push_back(std::move(subset));
            std::size_t i = size;
            while (i > 0 && pick[i - 1] == n - size + i - 1) {
                --i;
            }
            if (i == 0) {
                break;
            }
            ++pick[i - 1];
            for (std::size_t j = i; j < size; ++j) {
                pick[j] = pick[j - 1] + 1;
            }
        }
    }
    return out;
}

std::vector<AblationRow> run_ablation(const SlideSource& source, const std::vector<FewShotSplit>& splits,
                                      const TrainConfig& config,
                                      const std::vector<std::vector<ClassifierId>>& subsets)
{
    for (const auto& subset : subsets) {
        if (subset.empty()) {
            throw Error(ErrorKind::EmptySubset, "ablation subset is empty");
        }
    }
    struct Job {
        std::size_t subset;
        std::size_t fold;
    };
    std::vector<Job> jobs;
    for (std::size_t s = 0; s < subsets.size(); ++s) {
        for (std::size_t f = 0; f < splits.size(); ++f) {
            jobs.push_back({s, f});
        }
    }
    std::vector<FoldMetrics> meta_results(jobs.size());
    std::vector<FoldMetrics> sum_results(jobs.size());
    parallel_for(jobs.size(), config.threads, [&](std::size_t j) {
        TrainConfig job_config = config;
        job_config.bank = subsets[jobs[j].subset];
        job_config.threads = 1;
        const FewShotSplit& split = splits[jobs[j].fold];

        job_config.fusion = Fusion::Meta;
        const TrainResult trained = train(source, split, job_config);
        meta_results[j] = evaluate_moc(source, split, &trained.meta, job_config);

        job_config.fusion = Fusion::Sum;
        sum_results[j] = evaluate_moc(source, split, nullptr, job_config);
    });

    std::vector<AblationRow> rows;
    for (Fusion fusion : {Fusion::Meta, Fusion::Sum}) {
        const auto& results = fusion == Fusion::Meta ? meta_results : sum_results;
        for (std::size_t s = 0; s < subsets.size(); ++s) {
            AblationRow row;
            row.subset = subsets[s];
            row.fusion = fusion;
            for (std::size_t j = 0; j < jobs.size(); ++j) {
                if (jobs[j].subset == s) {
                    row.folds.push_back(results[j]);
                }
            }
            row.summary = aggregate_folds(row.folds);
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

std::optional<double> mean_auc_for_size(const std::vector<AblationRow>& rows, Fusion fusion, std::size_t size)
{
    double total = 0.0;
    std::size_t count = 0;
    for (const auto& row : rows) {
        if (row.fusion == fusion && row.subset.size() == size) {
            total += row.summary.auc.mean;
            ++count;
        }
    }
    if (count == 0) {
        return std::nullopt;
    }
    return total / static_cast<double>(count);
}

} // namespace moc
