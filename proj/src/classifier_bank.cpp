#include "moc/classifier_bank.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "moc/error.hpp"

namespace moc {

namespace {

Matrix similarities(const SlideBag& bag, const Matrix& prompt_rows)
{
    if (bag.dim() != prompt_rows.cols() && prompt_rows.rows() > 0) {
        throw Error(ErrorKind::DimensionMismatch, "bag d=" + std::to_string(bag.dim()) + " but prompts d=" +
                                                      std::to_string(prompt_rows.cols()));
    }
    if (prompt_rows.rows() == 0) {
        return Matrix(bag.size(), 0);
    }
    return matmul_transposed(bag.patches, prompt_rows);
}

void require_dims(const SlideBag& bag, const PromptSet& prompts)
{
    if (bag.dim() != prompts.dim()) {
        throw Error(ErrorKind::DimensionMismatch,
                    "bag d=" + std::to_string(bag.dim()) + " but prompts d=" + std::to_string(prompts.dim()));
    }
}

ScoreTable peak_from(const Matrix& sims)
{
    return {ClassifierId::ConfidencePeak, ScoreKind::VectorPerClass, sims};
}

ScoreTable certainty_from(const Matrix& sims, double temperature)
{
    if (!(temperature > 0.0)) {
        throw Error(ErrorKind::Usage, "softmax temperature must be positive");
    }
    Matrix out(sims.rows(), sims.cols());
    Vector scaled(sims.cols());
    for (std::size_t i = 0; i < sims.rows(); ++i) {
        for (std::size_t c = 0; c < sims.cols(); ++c) {
            scaled[c] = sims(i, c) / temperature;
        }
        const Vector probs = softmax(scaled);
        std::copy(probs.begin(), probs.end(), out.row(i).begin());
    }
    return {ClassifierId::NormalizedCertainty, ScoreKind::VectorPerClass, std::move(out)};
}

ScoreTable divergence_from(const Matrix& sims)
{
    if (sims.cols() < 2) {
        throw Error(ErrorKind::NeedAtLeastTwoClasses, "divergence extremum needs at least two class prompts");
    }
    Matrix out(sims.rows(), 1);
    for (std::size_t i = 0; i < sims.rows(); ++i) {
        double first = -INFINITY;
        double second = -INFINITY;
        for (double s : sims.row(i)) {
            if (s > first) {
                second = first;
                first = s;
            } else if (s > second) {
                second = s;
            }
        }
        out(i, 0) = first - second;
    }
    return {ClassifierId::DivergenceExtremum, ScoreKind::ScalarPerPatch, std::move(out)};
}

ScoreTable suppression_from(const Matrix& background_sims)
{
    if (background_sims.cols() == 0) {
        throw Error(ErrorKind::NoBackgroundPrompts, "background suppression needs at least one background prompt");
    }
    Matrix out(background_sims.rows(), 1);
    for (std::size_t i = 0; i < background_sims.rows(); ++i) {
        double total = 0.0;
        for (double s : background_sims.row(i)) {
            total += s;
        }
        out(i, 0) = -total;
    }
    return {ClassifierId::BackgroundSuppression, ScoreKind::ScalarPerPatch, std::move(out)};
}

void standardize(ScoreTable& table)
{
    auto values = table.scores.values();
    if (values.empty()) {
        return;
    }
    double mean = 0.0;
    for (double v : values) {
        mean += v;
    }
    mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) {
        var += (v - mean) * (v - mean);
    }
    const double sd = std::sqrt(var / static_cast<double>(values.size()));
    for (double& v : values) {
        v = sd > 0.0 ? (v - mean) / sd : v - mean;
    }
}

} // namespace

std::string_view to_string(ClassifierId id)
{
    switch (id) {
    case ClassifierId::ConfidencePeak: return "confidence_peak";
    case ClassifierId::NormalizedCertainty: return "normalized_certainty";
    case ClassifierId::DivergenceExtremum: return "divergence_extremum";
    case ClassifierId::BackgroundSuppression: return "background_suppression";
    }
    return "unknown";
}

std::optional<ClassifierId> parse_classifier_id(std::string_view name)
{
    for (ClassifierId id : kAllClassifiers) {
        if (to_string(id) == name) {
            return id;
        }
    }
    return std::nullopt;
}

std::vector<ClassifierId> parse_bank(std::string_view list)
{
    std::vector<ClassifierId> bank;
    std::set<ClassifierId> seen;
    std::size_t start = 0;
    while (start <= list.size()) {
        const auto comma = list.find(',', start);
        const auto name = list.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
        const auto id = parse_classifier_id(name);
        if (!id) {
            throw Error(ErrorKind::Usage, "unknown classifier '" + std::string(name) + "'");
        }
        if (!seen.insert(*id).second) {
            throw Error(ErrorKind::Usage, "classifier '" + std::string(name) + "' listed twice");
        }
        bank.push_back(*id);
        if (comma == std::string_view::npos) {
            break;
        }
        start = comma + 1;
    }
    return bank;
}

std::string format_bank(const std::vector<ClassifierId>& bank)
{
    std::string out;
    for (std::size_t i = 0; i < bank.size(); ++i) {
        if (i > 0) {
            out += ',';
        }
        out += to_string(bank[i]);
    }
    return out;
}

ScoreKind kind_of(ClassifierId id)
{
    return (id == ClassifierId::ConfidencePeak || id == ClassifierId::NormalizedCertainty) ? ScoreKind::VectorPerClass
                                                                                            : ScoreKind::ScalarPerPatch;
}

ScoreTable score_confidence_peak(const SlideBag& bag, const PromptSet& prompts)
{
    require_dims(bag, prompts);
    return peak_from(similarities(bag, prompts.class_embeddings));
}

ScoreTable score_normalized_certainty(const SlideBag& bag, const PromptSet& prompts, double temperature)
{
    require_dims(bag, prompts);
    return certainty_from(similarities(bag, prompts.class_embeddings), temperature);
}

ScoreTable score_divergence_extremum(const SlideBag& bag, const PromptSet& prompts)
{
    require_dims(bag, prompts);
    return divergence_from(similarities(bag, prompts.class_embeddings));
}

ScoreTable score_background_suppression(const SlideBag& bag, const PromptSet& prompts)
{
    require_dims(bag, prompts);
    return suppression_from(similarities(bag, prompts.background_embeddings));
}

std::vector<ScoreTable> score_bank(const SlideBag& bag, const PromptSet& prompts,
                                   const std::vector<ClassifierId>& bank, const BankOptions& options)
{
    require_dims(bag, prompts);
    const Matrix sims = similarities(bag, prompts.class_embeddings);
    std::optional<Matrix> background_sims;
    std::vector<ScoreTable> tables;
    tables.reserve(bank.size());
    for (ClassifierId id : bank) {
        switch (id) {
        case ClassifierId::ConfidencePeak:
            tables.push_back(peak_from(sims));
            break;
        case ClassifierId::NormalizedCertainty:
            tables.push_back(certainty_from(sims, options.temperature));
            break;
        case ClassifierId::DivergenceExtremum:
            tables.push_back(divergence_from(sims));
            break;
        case ClassifierId::BackgroundSuppression:
            if (!background_sims) {
                background_sims = similarities(bag, prompts.background_embeddings);
            }
            tables.push_back(suppression_from(*background_sims));
            break;
        }
        if (options.standardize) {
            standardize(tables.back());
        }
    }
    return tables;
}

Vector ranking_score(const ScoreTable& table)
{
    Vector out(table.num_patches());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const auto row = table.scores.row(i);
        out[i] = *std::max_element(row.begin(), row.end());
    }
    return out;
}

} // namespace moc
