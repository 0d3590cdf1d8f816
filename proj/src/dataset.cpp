#include "moc/dataset.hpp"

#include "moc/error.hpp"
#include "moc/parallel.hpp"

namespace moc {

ManifestSource::ManifestSource(const std::filesystem::path& manifest_path)
    : manifest_(read_manifest(manifest_path)), prompts_(load_prompts(manifest_))
{
}

SlideBag ManifestSource::load(const std::string& slide_id) const
{
    return load_slide(manifest_, manifest_.find(slide_id));
}

MemorySource::MemorySource(SyntheticDataset dataset) : dataset_(std::move(dataset))
{
    for (std::size_t i = 0; i < dataset_.bags.size(); ++i) {
        index_.emplace(dataset_.bags[i].slide_id, i);
    }
}

SlideBag MemorySource::load(const std::string& slide_id) const
{
    const auto it = index_.find(slide_id);
    if (it == index_.end()) {
        throw Error(ErrorKind::FormatViolation, "slide '" + slide_id + "' not in dataset");
    }
    return dataset_.bags[it->second];
}

std::vector<ScoredSlide> score_slides(const SlideSource& source, const std::vector<std::string>& ids,
                                      const TrainConfig& config)
{
    std::vector<ScoredSlide> out(ids.size());
    parallel_for(ids.size(), config.threads,
                 [&](std::size_t i) { out[i] = score_slide(source.load(ids[i]), source.prompts(), config); });
    return out;
}

} // namespace moc
