#include "moc/nomination.hpp"

#include <algorithm>
#include <numeric>

#include "moc/error.hpp"

namespace moc {

bool NominatedBag::contains(std::size_t patch) const
{
    return std::binary_search(indices.begin(), indices.end(), patch);
}

std::vector<std::size_t> elect_bag(std::span<const double> ranking, std::size_t q)
{
    auto chosen = top_k_indices(ranking, q);
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

NominatedBag union_bags(std::string slide_id, std::vector<Election> elections, std::size_t num_patches)
{
    if (elections.empty()) {
        throw Error(ErrorKind::EmptySubset, "union of zero elections");
    }
    NominatedBag out;
    out.slide_id = std::move(slide_id);
    for (auto& [id, list] : elections) {
        for (std::size_t idx : list) {
            if (idx >= num_patches) {
                throw Error(ErrorKind::IndexOutOfRange, "patch " + std::to_string(idx) + " elected by " +
                                                            std::string(to_string(id)) + " but slide has " +
                                                            std::to_string(num_patches));
            }
        }
        std::sort(list.begin(), list.end());
        list.erase(std::unique(list.begin(), list.end()), list.end());
        out.indices.insert(out.indices.end(), list.begin(), list.end());
    }
    std::sort(out.indices.begin(), out.indices.end());
    out.indices.erase(std::unique(out.indices.begin(), out.indices.end()), out.indices.end());
    out.per_classifier = std::move(elections);
    return out;
}

NominatedBag nominate_from_tables(const std::string& slide_id, const std::vector<ScoreTable>& tables, std::size_t q)
{
    if (tables.empty()) {
        throw Error(ErrorKind::EmptySubset, "nomination needs at least one classifier");
    }
    std::vector<Election> elections;
    for (const auto& table : tables) {
        elections.emplace_back(table.id, elect_bag(ranking_score(table), q));
    }
    return union_bags(slide_id, std::move(elections), tables.front().num_patches());
}

NominatedBag nominate(const SlideBag& bag, const PromptSet& prompts, std::size_t q,
                      const std::vector<ClassifierId>& bank, const BankOptions& options)
{
    return nominate_from_tables(bag.slide_id, score_bank(bag, prompts, bank, options), q);
}

NominatedBag nominate_all(const std::string& slide_id, std::size_t num_patches)
{
    NominatedBag out;
    out.slide_id = slide_id;
    out.indices.resize(num_patches);
    std::iota(out.indices.begin(), out.indices.end(), std::size_t{0});
    return out;
}

} // namespace moc
