#pragma once

#include <string>
#include <utility>
#include <vector>

#include "moc/classifier_bank.hpp"

namespace moc {

using Election = std::pair<ClassifierId, std::vector<std::size_t>>;

/// Union of every classifier's top-q patches for one slide.
struct NominatedBag {
    std::string slide_id;
    std::vector<std::size_t> indices;     ///< ascending, deduplicated
    std::vector<Election> per_classifier; ///< each list ascending

    bool contains(std::size_t patch) const;
};

/// The min(q, n) highest-ranked patch indices (lowest index wins ties), returned ascending.
std::vector<std::size_t> elect_bag(std::span<const double> ranking, std::size_t q);

/// Throws IndexOutOfRange when an election names a patch >= num_patches.
NominatedBag union_bags(std::string slide_id, std::vector<Election> elections, std::size_t num_patches);

NominatedBag nominate_from_tables(const std::string& slide_id, const std::vector<ScoreTable>& tables, std::size_t q);

/// Scores the slide with `bank`, elects top-q per classifier and takes the union.
NominatedBag nominate(const SlideBag& bag, const PromptSet& prompts, std::size_t q,
                      const std::vector<ClassifierId>& bank = {std::begin(kAllClassifiers), std::end(kAllClassifiers)},
                      const BankOptions& options = {});

/// Every patch, as used when nomination is switched off.
NominatedBag nominate_all(const std::string& slide_id, std::size_t num_patches);

} // namespace moc
