#include "moc/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "moc/byte_io.hpp"
#include "moc/error.hpp"
#include "moc/rng.hpp"

namespace moc {

namespace {

constexpr std::int32_t kPatchPixels = 224;

Vector gaussian_vector(Rng& rng, std::size_t d, double sd)
{
    Vector v(d);
    for (double& x : v) {
        x = sd * rng.normal();
    }
    return v;
}

Matrix random_orthonormal(Rng& rng, std::size_t count, std::size_t d)
{
    Matrix basis(count, d);
    for (std::size_t i = 0; i < count; ++i) {
        Vector v = gaussian_vector(rng, d, 1.0);
        // modified Gram-Schmidt, two passes
        for (int pass = 0; pass < 2; ++pass) {
            for (std::size_t j = 0; j < i; ++j) {
                const double proj = dot(v, basis.row(j));
                for (std::size_t k = 0; k < d; ++k) {
                    v[k] -= proj * basis(j, k);
                }
            }
        }
        const Vector unit = l2_normalize(v);
        std::copy(unit.begin(), unit.end(), basis.row(i).begin());
    }
    return basis;
}

void check_spec(const SyntheticSpec& spec)
{
    auto fail = [](const std::string& why) { throw Error(ErrorKind::SpecInvalid, why); };
    if (spec.classes < 2) {
        fail("classes must be at least 2");
    }
    if (spec.dim < spec.classes + spec.background_classes) {
        fail("dim " + std::to_string(spec.dim) + " < classes + background_classes; no orthonormal prompt set");
    }
    if (spec.slides_per_class == 0 || spec.patches_per_slide == 0) {
        fail("slides_per_class and patches_per_slide must be positive");
    }
    if (spec.tumor_fraction < 0 || spec.tumor_fraction > 1 || spec.distractor_fraction < 0 ||
        spec.tumor_fraction + spec.distractor_fraction > 1) {
        fail("patch fractions must lie in [0, 1] and sum to at most 1");
    }
    if (spec.noise < 0 || spec.distractor_strength < 0 || spec.distractor_lean < 0) {
        fail("noise and distractor parameters must be non-negative");
    }
    if (spec.distractor_fraction > 0 && spec.background_classes == 0) {
        fail("distractors need at least one background prompt");
    }
}

std::vector<std::string> synthetic_class_names(std::size_t count)
{
    std::vector<std::string> names;
    for (std::size_t c = 0; c < count; ++c) {
        names.push_back("synthetic subtype " + std::to_string(c));
    }
    return names;
}

std::vector<std::string> synthetic_background_names(std::size_t count)
{
    auto names = default_background_names();
    names.resize(std::min(count, names.size()));
    for (std::size_t b = names.size(); b < count; ++b) {
        names.push_back("background tissue " + std::to_string(b));
    }
    return names;
}

} // namespace

SyntheticSpec default_synthetic_spec()
{
    return SyntheticSpec{};
}

SyntheticSpec scale_mismatch_synthetic_spec()
{
    SyntheticSpec spec;
    spec.name = "scale-mismatch";
    spec.patches_per_slide = 300;
    spec.tumor_fraction = 0.02;
    spec.noise = 0.35;
    spec.distractor_fraction = 0.50;
    spec.distractor_strength = 1.0;
    spec.distractor_lean = 0.5;
    return spec;
}

SyntheticSpec parse_synthetic_spec(std::string_view text)
{
    SyntheticSpec spec;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line.erase(hash);
        }
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw Error(ErrorKind::SpecInvalid, "expected key=value, got '" + line + "'");
        }
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            const auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        try {
            if (key == "name") {
                spec.name = value;
            } else if (key == "classes") {
                spec.classes = std::stoul(value);
            } else if (key == "background_classes") {
                spec.background_classes = std::stoul(value);
            } else if (key == "dim") {
                spec.dim = std::stoul(value);
            } else if (key == "slides_per_class") {
                spec.slides_per_class = std::stoul(value);
            } else if (key == "patches_per_slide") {
                spec.patches_per_slide = std::stoul(value);
            } else if (key == "tumor_fraction") {
                spec.tumor_fraction = std::stod(value);
            } else if (key == "noise") {
                spec.noise = std::stod(value);
            } else if (key == "distractor_fraction") {
                spec.distractor_fraction = std::stod(value);
            } else if (key == "distractor_strength") {
                spec.distractor_strength = std::stod(value);
            } else if (key == "distractor_lean") {
                spec.distractor_lean = std::stod(value);
            } else {
                throw Error(ErrorKind::SpecInvalid, "unknown key '" + key + "'");
            }
        } catch (const std::logic_error&) {
            throw Error(ErrorKind::SpecInvalid, "bad value for '" + key + "': '" + value + "'");
        }
    }
    check_spec(spec);
    return spec;
}

std::string format_synthetic_spec(const SyntheticSpec& spec)
{
    std::ostringstream out;
    out.precision(17);
    out << "name=" << spec.name << '\n'
        << "classes=" << spec.classes << '\n'
        << "background_classes=" << spec.background_classes << '\n'
        << "dim=" << spec.dim << '\n'
        << "slides_per_class=" << spec.slides_per_class << '\n'
        << "patches_per_slide=" << spec.patches_per_slide << '\n'
        << "tumor_fraction=" << spec.tumor_fraction << '\n'
        << "noise=" << spec.noise << '\n'
        << "distractor_fraction=" << spec.distractor_fraction << '\n'
        << "distractor_strength=" << spec.distractor_strength << '\n'
        << "distractor_lean=" << spec.distractor_lean << '\n';
    return out.str();
}

SyntheticDataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed)
{
    check_spec(spec);
    const std::size_t d = spec.dim;
    const std::size_t num_classes = spec.classes;
    const std::size_t num_background = spec.background_classes;

    Rng prompt_rng(derive_seed(seed, "prompts"));
    const Matrix directions = random_orthonormal(prompt_rng, num_classes + num_background, d);

    SyntheticDataset ds;
    ds.prompts.class_names = synthetic_class_names(num_classes);
    ds.prompts.background_names = synthetic_background_names(num_background);
    ds.prompts.class_embeddings = Matrix(num_classes, d);
    ds.prompts.background_embeddings = Matrix(num_background, d);
    for (std::size_t c = 0; c < num_classes; ++c) {
        std::copy_n(directions.row(c).begin(), d, ds.prompts.class_embeddings.row(c).begin());
    }
    for (std::size_t b = 0; b < num_background; ++b) {
        std::copy_n(directions.row(num_classes + b).begin(), d, ds.prompts.background_embeddings.row(b).begin());
    }
    round_to_stored_precision(ds.prompts.class_embeddings);
    round_to_stored_precision(ds.prompts.background_embeddings);

    Vector anti_background(d, 0.0);
    if (num_background > 0) {
        for (std::size_t b = 0; b < num_background; ++b) {
            for (std::size_t k = 0; k < d; ++k) {
                anti_background[k] -= directions(num_classes + b, k);
            }
        }
        anti_background = l2_normalize(anti_background);
    }

    const std::size_t n = spec.patches_per_slide;
    const auto n_tumor = static_cast<std::size_t>(std::llround(spec.tumor_fraction * static_cast<double>(n)));
    const auto n_distractor = std::min(
        n - n_tumor, static_cast<std::size_t>(std::llround(spec.distractor_fraction * static_cast<double>(n))));
    const double noise_sd = spec.noise / std::sqrt(static_cast<double>(d));
    const auto grid_cols = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));

    enum class Kind { Tumor, Distractor, Background };

    ds.manifest.dataset_id = "synthetic-" + spec.name + "-seed" + std::to_string(seed);
    ds.manifest.embedding_dim = d;
    ds.manifest.class_names = ds.prompts.class_names;
    ds.manifest.prompts_path = "prompts.mocp";

    for (std::size_t c = 0; c < num_classes; ++c) {
        for (std::size_t s = 0; s < spec.slides_per_class; ++s) {
            char id[64];
            std::snprintf(id, sizeof(id), "synth_c%zu_%03zu", c, s);
            Rng rng(derive_seed(seed, std::string("slide/") + id));

            std::vector<Kind> kinds(n, Kind::Background);
            std::fill_n(kinds.begin(), n_tumor, Kind::Tumor);
            std::fill_n(kinds.begin() + static_cast<std::ptrdiff_t>(n_tumor), n_distractor, Kind::Distractor);
            rng.shuffle(std::span<Kind>(kinds));

            SlideBag bag;
            bag.slide_id = id;
            bag.label = static_cast<int>(c);
            bag.patches = Matrix(n, d);
            std::vector<PatchCoord> coords(n);
            for (std::size_t j = 0; j < n; ++j) {
                Vector v = gaussian_vector(rng, d, noise_sd);
                switch (kinds[j]) {
                case Kind::Tumor:
                    for (std::size_t k = 0; k < d; ++k) {
                        v[k] += directions(c, k);
                    }
                    break;
                case Kind::Background:
                    if (num_background > 0) {
                        const std::size_t b = rng.index(num_background);
                        for (std::size_t k = 0; k < d; ++k) {
                            v[k] += directions(num_classes + b, k);
                        }
                    }
                    break;
                case Kind::Distractor: {
                    const std::size_t lean_class = rng.index(num_classes);
                    for (std::size_t k = 0; k < d; ++k) {
                        v[k] += spec.distractor_strength * anti_background[k] +
                                spec.distractor_lean * directions(lean_class, k);
                    }
                    break;
                }
                }
                if (l2_norm(v) < kNormEpsilon) {
                    // zero-noise background patch with no background prompts
                    v = gaussian_vector(rng, d, 1.0);
                }
                const Vector unit = l2_normalize(v);
                std::copy(unit.begin(), unit.end(), bag.patches.row(j).begin());
                coords[j] = {static_cast<std::int32_t>(j % grid_cols) * kPatchPixels,
                             static_cast<std::int32_t>(j / grid_cols) * kPatchPixels};
            }
            round_to_stored_precision(bag.patches);
            bag.coords = std::move(coords);

            ds.manifest.slides.push_back({bag.slide_id, "bags/" + bag.slide_id + ".mocb", static_cast<int>(c), n});
            ds.bags.push_back(std::move(bag));
        }
    }
    return ds;
}

std::uint64_t dataset_checksum(const SyntheticDataset& dataset)
{
    Fnv1a hash;
    hash.update(format_manifest(dataset.manifest));
    hash.update(encode_prompts(dataset.prompts));
    for (const auto& bag : dataset.bags) {
        hash.update(encode_bag(bag));
    }
    return hash.digest();
}

void write_synthetic(const SyntheticDataset& dataset, const std::filesystem::path& out_dir)
{
    std::error_code ec;
    std::filesystem::create_directories(out_dir / "bags", ec);
    if (ec) {
        throw Error(ErrorKind::IoFailure, "cannot create " + (out_dir / "bags").string() + ": " + ec.message());
    }
    write_prompts(dataset.prompts, out_dir / dataset.manifest.prompts_path);
    for (std::size_t i = 0; i < dataset.bags.size(); ++i) {
        write_bag(dataset.bags[i], out_dir / dataset.manifest.slides[i].path);
    }
    write_manifest(dataset.manifest, out_dir / "manifest.tsv");
}

} // namespace moc
