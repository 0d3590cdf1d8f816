#pragma once

#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "moc/aggregation.hpp"
#include "moc/embedding_store.hpp"
#include "moc/synthetic.hpp"

namespace moc {

/// Access to a dataset's prompts and slides by id.
class SlideSource {
public:
    virtual ~SlideSource() = default;
    virtual const DatasetManifest& manifest() const = 0;
    virtual const PromptSet& prompts() const = 0;
    virtual SlideBag load(const std::string& slide_id) const = 0;
};

/// Reads bags from disk on demand.
class ManifestSource final : public SlideSource {
public:
    explicit ManifestSource(const std::filesystem::path& manifest_path);

    const DatasetManifest& manifest() const override { return manifest_; }
    const PromptSet& prompts() const override { return prompts_; }
    SlideBag load(const std::string& slide_id) const override;

private:
    DatasetManifest manifest_;
    PromptSet prompts_;
};

/// Serves a generated dataset from memory.
class MemorySource final : public SlideSource {
public:
    explicit MemorySource(SyntheticDataset dataset);

    const DatasetManifest& manifest() const override { return dataset_.manifest; }
    const PromptSet& prompts() const override { return dataset_.prompts; }
    SlideBag load(const std::string& slide_id) const override;

private:
    SyntheticDataset dataset_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// Loads and scores each listed slide (in list order, parallel over slides).
std::vector<ScoredSlide> score_slides(const SlideSource& source, const std::vector<std::string>& ids,
                                      const TrainConfig& config);

} // namespace moc
