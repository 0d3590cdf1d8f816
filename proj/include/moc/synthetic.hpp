#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "moc/embedding_store.hpp"

namespace moc {

/// Parameters of the synthetic slide generator.
///
/// Prompt directions (C foreground + C_beta background) form a random orthonormal set.
/// Each slide of class c holds three kinds of patches at shuffled positions:
///  - tumor:      normalize(w_c + noise)
///  - background: normalize(w_beta_b + noise), b uniform over background prompts
///  - distractor: normalize(-strength * mean_beta + lean * w_c' + noise), c' uniform over classes
/// where noise ~ N(0, noise^2 / d * I) so its expected norm is about `noise`.
/// Distractors sit far from every background prompt, which inflates the background-suppression
/// score relative to the other classifiers while carrying no label information.
struct SyntheticSpec {
    std::string name = "default";
    std::size_t classes = 2;
    std::size_t background_classes = 4;
    std::size_t dim = 64;
    std::size_t slides_per_class = 20;
    std::size_t patches_per_slide = 500;
    double tumor_fraction = 0.10;
    double noise = 0.35;
    double distractor_fraction = 0.0;
    double distractor_strength = 0.0;
    double distractor_lean = 0.0;
};

SyntheticSpec default_synthetic_spec();
/// Background-suppression scores dominate the raw score scale on this spec.
SyntheticSpec scale_mismatch_synthetic_spec();

/// Flat key=value text, '#' comments. Unknown keys raise SpecInvalid.
SyntheticSpec parse_synthetic_spec(std::string_view text);
std::string format_synthetic_spec(const SyntheticSpec& spec);

struct SyntheticDataset {
    DatasetManifest manifest;
    PromptSet prompts;
    std::vector<SlideBag> bags; ///< manifest order
};

/// Deterministic given (spec, seed). Values are rounded to single precision so the in-memory
/// dataset equals what a reader gets back from disk.
SyntheticDataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

/// FNV-1a over the manifest text, the encoded prompt file and every encoded bag.
std::uint64_t dataset_checksum(const SyntheticDataset& dataset);

/// Writes manifest.tsv, prompts.mocp and bags/<slide>.mocb under `out_dir`.
void write_synthetic(const SyntheticDataset& dataset, const std::filesystem::path& out_dir);

} // namespace moc
