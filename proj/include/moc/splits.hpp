#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "moc/embedding_store.hpp"

namespace moc {

struct FewShotSplit {
    int fold_index = 0;
    int shots = 0;
    std::vector<std::string> train_ids;
    std::vector<std::string> val_ids;
    std::vector<std::string> test_ids;
    std::uint64_t seed = 0;
};

/// Stratified random partition per fold, then `shots` training slides per class drawn without
/// replacement from the fold's training partition.
///
/// The train/val/test partition of a fold depends only on (seed, fold), and the per-class shot
/// order is a fixed permutation of that partition, so larger shot counts extend smaller ones and
/// every shot setting sees the same validation and test slides.
std::vector<FewShotSplit> sample_few_shot_splits(const DatasetManifest& manifest, int shots, int n_folds,
                                                 std::size_t val_size, std::size_t test_size, std::uint64_t seed);

std::string format_splits(const std::vector<FewShotSplit>& splits);
std::vector<FewShotSplit> parse_splits(std::string_view text);
void write_splits(const std::vector<FewShotSplit>& splits, const std::filesystem::path& path);
std::vector<FewShotSplit> read_splits(const std::filesystem::path& path);

} // namespace moc
