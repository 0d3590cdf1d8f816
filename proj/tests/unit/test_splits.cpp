#include "doctest.h"

#include <algorithm>
#include <map>
#include <set>

#include "expect_error.hpp"
#include "moc/splits.hpp"
#include "moc/synthetic.hpp"

using namespace moc;

namespace {

DatasetManifest labeled_manifest(std::size_t per_class, std::size_t classes)
{
    DatasetManifest m;
    m.dataset_id = "toy";
    m.embedding_dim = 4;
    for (std::size_t c = 0; c < classes; ++c) {
        m.class_names.push_back("c" + std::to_string(c));
        for (std::size_t i = 0; i < per_class; ++i) {
            const std::string id = "s" + std::to_string(c) + "_" + std::to_string(i);
            m.slides.push_back({id, id + ".mocb", static_cast<int>(c), 10});
        }
    }
    return m;
}

std::map<int, std::size_t> class_counts(const DatasetManifest& m, const std::vector<std::string>& ids)
{
    std::map<int, std::size_t> counts;
    for (const auto& id : ids) {
        ++counts[m.find(id).label];
    }
    return counts;
}

} // namespace

TEST_CASE("folds are disjoint, stratified and sized")
{
    const DatasetManifest m = labeled_manifest(20, 2);
    const auto splits = sample_few_shot_splits(m, 4, 5, 4, 16, 7);
    REQUIRE(splits.size() == 5);
    for (const auto& s : splits) {
        CHECK(s.shots == 4);
        CHECK(s.train_ids.size() == 8);
        CHECK(s.val_ids.size() == 4);
        CHECK(s.test_ids.size() == 16);
        std::set<std::string> all(s.train_ids.begin(), s.train_ids.end());
        all.insert(s.val_ids.begin(), s.val_ids.end());
        all.insert(s.test_ids.begin(), s.test_ids.end());
        CHECK(all.size() == 28);
        CHECK(class_counts(m, s.train_ids) == std::map<int, std::size_t>{{0, 4}, {1, 4}});
        CHECK(class_counts(m, s.val_ids) == std::map<int, std::size_t>{{0, 2}, {1, 2}});
        CHECK(class_counts(m, s.test_ids) == std::map<int, std::size_t>{{0, 8}, {1, 8}});
    }
    CHECK(splits[0].test_ids != splits[1].test_ids);
}

TEST_CASE("larger shot counts extend smaller ones over the same held-out slides")
{
    const DatasetManifest m = labeled_manifest(20, 3);
    const auto one = sample_few_shot_splits(m, 1, 5, 6, 12, 11);
    const auto eight = sample_few_shot_splits(m, 8, 5, 6, 12, 11);
    for (std::size_t f = 0; f < one.size(); ++f) {
        CHECK(one[f].val_ids == eight[f].val_ids);
        CHECK(one[f].test_ids == eight[f].test_ids);
        for (const auto& id : one[f].train_ids) {
            CHECK(std::find(eight[f].train_ids.begin(), eight[f].train_ids.end(), id) != eight[f].train_ids.end());
        }
    }
}

TEST_CASE("splits are deterministic in the seed")
{
    const DatasetManifest m = labeled_manifest(10, 2);
    CHECK(format_splits(sample_few_shot_splits(m, 2, 3, 2, 4, 5)) ==
          format_splits(sample_few_shot_splits(m, 2, 3, 2, 4, 5)));
    CHECK(format_splits(sample_few_shot_splits(m, 2, 3, 2, 4, 5)) !=
          format_splits(sample_few_shot_splits(m, 2, 3, 2, 4, 6)));
}

TEST_CASE("too few slides per class")
{
    const DatasetManifest m = labeled_manifest(5, 2);
    CHECK_ERROR_KIND(sample_few_shot_splits(m, 8, 5, 2, 4, 7), ErrorKind::InsufficientSlides);
    CHECK_ERROR_KIND(sample_few_shot_splits(m, 1, 5, 6, 6, 7), ErrorKind::InsufficientSlides);
}

TEST_CASE("split file round-trip")
{
    const DatasetManifest m = labeled_manifest(10, 2);
    const auto splits = sample_few_shot_splits(m, 2, 3, 2, 4, 5);
    const std::string text = format_splits(splits);
    const auto back = parse_splits(text);
    REQUIRE(back.size() == splits.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        CHECK(back[i].fold_index == splits[i].fold_index);
        CHECK(back[i].shots == splits[i].shots);
        CHECK(back[i].seed == splits[i].seed);
        CHECK(back[i].train_ids == splits[i].train_ids);
        CHECK(back[i].val_ids == splits[i].val_ids);
        CHECK(back[i].test_ids == splits[i].test_ids);
    }
    CHECK(format_splits(back) == text);
}

TEST_CASE("split file rejects bad documents")
{
    CHECK_ERROR_KIND(parse_splits("not json"), ErrorKind::FormatViolation);
    CHECK_ERROR_KIND(parse_splits(R"({"format":"other","version":1,"folds":[]})"), ErrorKind::FormatViolation);
    const char* twice = R"({"format":"moc-splits","version":1,"folds":[{"fold":0,"shots":1,"seed":1,
        "train":["a"],"val":["b"],"test":["a"]}]})";
    CHECK_ERROR_KIND(parse_splits(twice), ErrorKind::FormatViolation);
}
