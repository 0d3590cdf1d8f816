#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "moc/linalg.hpp"

namespace moc {

using PatchCoord = std::array<std::int32_t, 2>;

/// One whole-slide image as a bag of unit-norm patch embeddings.
struct SlideBag {
    std::string slide_id;
    std::optional<int> label;
    Matrix patches;                                ///< n x d, unit-norm rows
    std::optional<std::vector<PatchCoord>> coords; ///< pixel origin per patch

    std::size_t size() const noexcept { return patches.rows(); }
    std::size_t dim() const noexcept { return patches.cols(); }
};

inline constexpr double kUnitNormTolerance = 1e-6;

/// Foreground class prompts W and background tissue prompts W_beta.
struct PromptSet {
    std::vector<std::string> class_names;
    Matrix class_embeddings; ///< C x d
    std::vector<std::string> background_names;
    Matrix background_embeddings; ///< C_beta x d (may have zero rows)
    std::string prompt_template = "A pathology image of {}";

    std::size_t num_classes() const noexcept { return class_embeddings.rows(); }
    std::size_t num_background() const noexcept { return background_embeddings.rows(); }
    std::size_t dim() const noexcept { return class_embeddings.cols(); }
};

std::vector<std::string> default_background_names();

/// Substitutes the class name for "{}" in the template.
std::string render_prompt(std::string_view prompt_template, std::string_view class_name);

/// l2-normalized mean of per-template prompt embeddings for one class.
Vector ensemble_prompts(std::span<const Vector> variants);

void validate_bag(const SlideBag& bag);
void validate_prompts(const PromptSet& prompts);

// Bag file: "MOCB", u16 version=1, u16 flags (bit0 coords), u32 d, u32 n, n*d f32,
// [n*2 i32 coords], i32 label (-1 unlabeled), u16-prefixed UTF-8 slide id. Little-endian.
std::vector<std::uint8_t> encode_bag(const SlideBag& bag);
SlideBag decode_bag(std::span<const std::uint8_t> bytes);
void write_bag(const SlideBag& bag, const std::filesystem::path& path);
SlideBag read_bag(const std::filesystem::path& path);

// Prompt file: "MOCP", u16 version=1, u16 flags=0, u32 d, u32 C, u32 C_beta, C*d f32,
// C_beta*d f32, C class names, C_beta background names, template (all u16-prefixed UTF-8).
std::vector<std::uint8_t> encode_prompts(const PromptSet& prompts);
PromptSet decode_prompts(std::span<const std::uint8_t> bytes);
void write_prompts(const PromptSet& prompts, const std::filesystem::path& path);
PromptSet read_prompts(const std::filesystem::path& path);

/// Rounds every entry to the nearest single-precision value, matching what storage keeps.
void round_to_stored_precision(Matrix& m);

struct ManifestEntry {
    std::string slide_id;
    std::string path; ///< relative to the manifest directory unless absolute
    int label = -1;
    std::size_t patch_count = 0;
};

struct DatasetManifest {
    std::string dataset_id;
    std::size_t embedding_dim = 0;
    std::vector<std::string> class_names;
    std::string prompts_path;
    std::vector<ManifestEntry> slides;
    std::filesystem::path base_dir;

    std::filesystem::path resolve(const std::string& relative) const;
    const ManifestEntry& find(const std::string& slide_id) const;
};

void validate_manifest(const DatasetManifest& manifest);

// Manifest text: one JSON header line, then "slide_id<TAB>path<TAB>label<TAB>n" per slide.
std::string format_manifest(const DatasetManifest& manifest);
DatasetManifest parse_manifest(std::string_view text, const std::filesystem::path& base_dir);
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);
DatasetManifest read_manifest(const std::filesystem::path& path);

/// Loads a slide and checks it against its manifest entry.
SlideBag load_slide(const DatasetManifest& manifest, const ManifestEntry& entry);
PromptSet load_prompts(const DatasetManifest& manifest);

} // namespace moc
