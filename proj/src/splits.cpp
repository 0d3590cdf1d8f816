#include "moc/splits.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include <json.hpp>

#include "moc/byte_io.hpp"
#include "moc/error.hpp"
#include "moc/rng.hpp"

namespace moc {

namespace {

// Largest-remainder apportionment of `total` across groups proportional to `sizes`;
// remainder ties go to the lower group index.
std::vector<std::size_t> apportion(std::size_t total, const std::vector<std::size_t>& sizes)
{
    const std::size_t population = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
    std::vector<std::size_t> out(sizes.size(), 0);
    if (population == 0) {
        return out;
    }
    std::vector<std::pair<std::size_t, std::size_t>> remainders; // (remainder numerator, group)
    std::size_t assigned = 0;
    for (std::size_t g = 0; g < sizes.size(); ++g) {
        out[g] = total * sizes[g] / population;
        assigned += out[g];
        remainders.emplace_back(total * sizes[g] % population, g);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t i = 0; assigned < total && i < remainders.size(); ++i, ++assigned) {
        ++out[remainders[i].second];
    }
    return out;
}

} // namespace

std::vector<FewShotSplit> sample_few_shot_splits(const DatasetManifest& manifest, int shots, int n_folds,
                                                 std::size_t val_size, std::size_t test_size, std::uint64_t seed)
{
    if (shots < 1 || n_folds < 1) {
        throw Error(ErrorKind::Usage, "shots and folds must be positive");
    }
    const std::size_t num_classes = manifest.class_names.size();
    std::vector<std::vector<std::string>> by_class(num_classes);
    for (const auto& entry : manifest.slides) {
        by_class[static_cast<std::size_t>(entry.label)].push_back(entry.slide_id);
    }
    std::vector<std::size_t> class_sizes;
    for (const auto& ids : by_class) {
        class_sizes.push_back(ids.size());
    }
    if (val_size + test_size > manifest.slides.size()) {
        throw Error(ErrorKind::InsufficientSlides, "validation plus test size exceeds dataset size");
    }
    const auto test_counts = apportion(test_size, class_sizes);
    const auto val_counts = apportion(val_size, class_sizes);

    std::vector<FewShotSplit> splits;
    for (int fold = 0; fold < n_folds; ++fold) {
        FewShotSplit split;
        split.fold_index = fold;
        split.shots = shots;
        split.seed = seed;
        Rng partition_rng(derive_seed(seed, "partition/" + std::to_string(fold)));
        Rng shot_rng(derive_seed(seed, "shots/" + std::to_string(fold)));
        for (std::size_t c = 0; c < num_classes; ++c) {
            std::vector<std::string> ids = by_class[c];
            partition_rng.shuffle(std::span<std::string>(ids));
            const std::size_t n_test = test_counts[c];
            const std::size_t n_val = val_counts[c];
            const std::size_t pool_size = ids.size() - std::min(ids.size(), n_test + n_val);
            if (pool_size < static_cast<std::size_t>(shots)) {
                throw Error(ErrorKind::InsufficientSlides,
                            "class '" + manifest.class_names[c] + "' has " + std::to_string(pool_size) +
                                " training candidates, needs " + std::to_string(shots));
            }
            split.test_ids.insert(split.test_ids.end(), ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_test));
            split.val_ids.insert(split.val_ids.end(), ids.begin() + static_cast<std::ptrdiff_t>(n_test),
                                 ids.begin() + static_cast<std::ptrdiff_t>(n_test + n_val));
            std::vector<std::string> pool(ids.begin() + static_cast<std::ptrdiff_t>(n_test + n_val), ids.end());
            shot_rng.shuffle(std::span<std::string>(pool));
            split.train_ids.insert(split.train_ids.end(), pool.begin(), pool.begin() + shots);
        }
        splits.push_back(std::move(split));
    }
    return splits;
}

std::string format_splits(const std::vector<FewShotSplit>& splits)
{
    nlohmann::ordered_json doc;
    doc["format"] = "moc-splits";
    doc["version"] = 1;
    doc["folds"] = nlohmann::ordered_json::array();
    for (const auto& s : splits) {
        nlohmann::ordered_json fold;
        fold["fold"] = s.fold_index;
        fold["shots"] = s.shots;
        fold["seed"] = s.seed;
        fold["train"] = s.train_ids;
        fold["val"] = s.val_ids;
        fold["test"] = s.test_ids;
        doc["folds"].push_back(std::move(fold));
    }
    return doc.dump(1) + "\n";
}

std::vector<FewShotSplit> parse_splits(std::string_view text)
{
    std::vector<FewShotSplit> splits;
    try {
        const auto doc = nlohmann::json::parse(text);
        if (doc.at("format") != "moc-splits" || doc.at("version") != 1) {
            throw Error(ErrorKind::FormatViolation, "split file: unsupported header");
        }
        for (const auto& fold : doc.at("folds")) {
            FewShotSplit s;
            s.fold_index = fold.at("fold").get<int>();
            s.shots = fold.at("shots").get<int>();
            s.seed = fold.at("seed").get<std::uint64_t>();
            s.train_ids = fold.at("train").get<std::vector<std::string>>();
            s.val_ids = fold.at("val").get<std::vector<std::string>>();
            s.test_ids = fold.at("test").get<std::vector<std::string>>();
            std::set<std::string> seen;
            for (const auto* list : {&s.train_ids, &s.val_ids, &s.test_ids}) {
                for (const auto& id : *list) {
                    if (!seen.insert(id).second) {
                        throw Error(ErrorKind::FormatViolation, "split file: slide '" + id + "' appears twice in a fold");
                    }
                }
            }
            splits.push_back(std::move(s));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::FormatViolation, std::string("split file: ") + e.what());
    }
    return splits;
}

void write_splits(const std::vector<FewShotSplit>& splits, const std::filesystem::path& path)
{
    write_text_file(path, format_splits(splits));
}

std::vector<FewShotSplit> read_splits(const std::filesystem::path& path)
{
    return parse_splits(read_text_file(path));
}

} // namespace moc
