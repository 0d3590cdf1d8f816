#include "moc/embedding_store.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include <json.hpp>

#include "moc/byte_io.hpp"
#include "moc/error.hpp"

namespace moc {

namespace {

constexpr std::string_view kBagMagic = "MOCB";
constexpr std::string_view kPromptMagic = "MOCP";
constexpr std::uint16_t kFormatVersion = 1;
constexpr std::uint16_t kBagFlagCoords = 0x1;

void check_rows(const Matrix& m, const std::string& what)
{
    if (!all_finite(m.values())) {
        throw Error(ErrorKind::NonFiniteValue, what + " contains NaN or Inf");
    }
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const double norm = l2_norm(m.row(r));
        if (std::abs(norm - 1.0) > kUnitNormTolerance) {
            throw Error(ErrorKind::FormatViolation,
                        what + " row " + std::to_string(r) + " has norm " + std::to_string(norm));
        }
    }
}

void put_matrix_f32(ByteWriter& out, const Matrix& m)
{
    for (double v : m.values()) {
        out.put_f32(static_cast<float>(v));
    }
}

Matrix get_matrix_f32(ByteReader& in, std::size_t rows, std::size_t cols)
{
    std::vector<double> values(rows * cols);
    for (double& v : values) {
        v = static_cast<double>(in.get_f32());
    }
    return Matrix(rows, cols, std::move(values));
}

void expect_magic(ByteReader& in, std::string_view magic, std::string_view what)
{
    if (in.remaining() < magic.size() || in.get_bytes(magic.size()) != magic) {
        throw Error(ErrorKind::FormatViolation, std::string(what) + ": bad magic");
    }
    const std::uint16_t version = in.get_u16();
    if (version != kFormatVersion) {
        throw Error(ErrorKind::FormatViolation,
                    std::string(what) + ": unsupported version " + std::to_string(version));
    }
}

void expect_consumed(const ByteReader& in, std::string_view what)
{
    if (in.remaining() != 0) {
        throw Error(ErrorKind::FormatViolation,
                    std::string(what) + ": " + std::to_string(in.remaining()) + " trailing bytes");
    }
}

} // namespace

std::vector<std::string> default_background_names()
{
    return {"stromal tissue", "inflammatory tissue", "vascular tissue", "necrotic tissue"};
}

std::string render_prompt(std::string_view prompt_template, std::string_view class_name)
{
    std::string out(prompt_template);
    const auto at = out.find("{}");
    if (at == std::string::npos) {
        return out + " " + std::string(class_name);
    }
    out.replace(at, 2, class_name);
    return out;
}

Vector ensemble_prompts(std::span<const Vector> variants)
{
    if (variants.empty()) {
        throw Error(ErrorKind::DimensionMismatch, "prompt ensemble needs at least one variant");
    }
    Vector mean(variants.front().size(), 0.0);
    for (const Vector& v : variants) {
        if (v.size() != mean.size()) {
            throw Error(ErrorKind::DimensionMismatch, "prompt variants differ in dimension");
        }
        for (std::size_t k = 0; k < v.size(); ++k) {
            mean[k] += v[k];
        }
    }
    for (double& x : mean) {
        x /= static_cast<double>(variants.size());
    }
    return l2_normalize(mean);
}

void validate_bag(const SlideBag& bag)
{
    if (bag.size() == 0 || bag.dim() == 0) {
        throw Error(ErrorKind::FormatViolation, "bag '" + bag.slide_id + "' has no patches");
    }
    check_rows(bag.patches, "bag '" + bag.slide_id + "'");
    if (bag.coords && bag.coords->size() != bag.size()) {
        throw Error(ErrorKind::FormatViolation, "bag '" + bag.slide_id + "' coords length differs from patch count");
    }
}

void validate_prompts(const PromptSet& prompts)
{
    if (prompts.num_classes() < 2) {
        throw Error(ErrorKind::NeedAtLeastTwoClasses, "prompt set has fewer than two classes");
    }
    if (prompts.class_names.size() != prompts.num_classes() ||
        prompts.background_names.size() != prompts.num_background()) {
        throw Error(ErrorKind::FormatViolation, "prompt names do not match embedding rows");
    }
    if (prompts.num_background() > 0 && prompts.background_embeddings.cols() != prompts.dim()) {
        throw Error(ErrorKind::DimensionMismatch, "background prompts differ in dimension");
    }
    check_rows(prompts.class_embeddings, "class prompts");
    check_rows(prompts.background_embeddings, "background prompts");
}

std::vector<std::uint8_t> encode_bag(const SlideBag& bag)
{
    validate_bag(bag);
    ByteWriter out;
    out.put_bytes(kBagMagic);
    out.put_u16(kFormatVersion);
    out.put_u16(bag.coords ? kBagFlagCoords : 0);
    out.put_u32(static_cast<std::uint32_t>(bag.dim()));
    out.put_u32(static_cast<std::uint32_t>(bag.size()));
    put_matrix_f32(out, bag.patches);
    if (bag.coords) {
        for (const PatchCoord& xy : *bag.coords) {
            out.put_i32(xy[0]);
            out.put_i32(xy[1]);
        }
    }
    out.put_i32(bag.label ? *bag.label : -1);
    out.put_string16(bag.slide_id);
    return out.take();
}

SlideBag decode_bag(std::span<const std::uint8_t> bytes)
{
    ByteReader in(bytes);
    expect_magic(in, kBagMagic, "bag");
    const std::uint16_t flags = in.get_u16();
    if ((flags & ~kBagFlagCoords) != 0) {
        throw Error(ErrorKind::FormatViolation, "bag: unknown flag bits");
    }
    const std::uint32_t d = in.get_u32();
    const std::uint32_t n = in.get_u32();
    if (d == 0 || n == 0) {
        throw Error(ErrorKind::FormatViolation, "bag: zero dimension or patch count");
    }
    if (static_cast<std::uint64_t>(n) * d * 4 > in.remaining()) {
        throw Error(ErrorKind::FormatViolation, "bag: payload shorter than n*d values");
    }
    SlideBag bag;
    bag.patches = get_matrix_f32(in, n, d);
    if (flags & kBagFlagCoords) {
        std::vector<PatchCoord> coords(n);
        for (PatchCoord& xy : coords) {
            xy[0] = in.get_i32();
            xy[1] = in.get_i32();
        }
        bag.coords = std::move(coords);
    }
    const std::int32_t label = in.get_i32();
    if (label < -1) {
        throw Error(ErrorKind::FormatViolation, "bag: negative label " + std::to_string(label));
    }
    if (label >= 0) {
        bag.label = label;
    }
    bag.slide_id = in.get_string16();
    expect_consumed(in, "bag");
    validate_bag(bag);
    return bag;
}

void write_bag(const SlideBag& bag, const std::filesystem::path& path)
{
    write_file_bytes(path, encode_bag(bag));
}

SlideBag read_bag(const std::filesystem::path& path)
{
    return decode_bag(read_file_bytes(path));
}

std::vector<std::uint8_t> encode_prompts(const PromptSet& prompts)
{
    validate_prompts(prompts);
    ByteWriter out;
    out.put_bytes(kPromptMagic);
    out.put_u16(kFormatVersion);
    out.put_u16(0);
    out.put_u32(static_cast<std::uint32_t>(prompts.dim()));
    out.put_u32(static_cast<std::uint32_t>(prompts.num_classes()));
    out.put_u32(static_cast<std::uint32_t>(prompts.num_background()));
    put_matrix_f32(out, prompts.class_embeddings);
    put_matrix_f32(out, prompts.background_embeddings);
    for (const auto& name : prompts.class_names) {
        out.put_string16(name);
    }
    for (const auto& name : prompts.background_names) {
        out.put_string16(name);
    }
    out.put_string16(prompts.prompt_template);
    return out.take();
}

PromptSet decode_prompts(std::span<const std::uint8_t> bytes)
{
    ByteReader in(bytes);
    expect_magic(in, kPromptMagic, "prompts");
    if (in.get_u16() != 0) {
        throw Error(ErrorKind::FormatViolation, "prompts: unknown flag bits");
    }
    const std::uint32_t d = in.get_u32();
    const std::uint32_t c = in.get_u32();
    const std::uint32_t cb = in.get_u32();
    if (d == 0) {
        throw Error(ErrorKind::FormatViolation, "prompts: zero dimension");
    }
    if ((static_cast<std::uint64_t>(c) + cb) * d * 4 > in.remaining()) {
        throw Error(ErrorKind::FormatViolation, "prompts: payload shorter than declared");
    }
    PromptSet prompts;
    prompts.class_embeddings = get_matrix_f32(in, c, d);
    prompts.background_embeddings = get_matrix_f32(in, cb, d);
    for (std::uint32_t i = 0; i < c; ++i) {
        prompts.class_names.push_back(in.get_string16());
    }
    for (std::uint32_t i = 0; i < cb; ++i) {
        prompts.background_names.push_back(in.get_string16());
    }
    prompts.prompt_template = in.get_string16();
    expect_consumed(in, "prompts");
    validate_prompts(prompts);
    return prompts;
}

void write_prompts(const PromptSet& prompts, const std::filesystem::path& path)
{
    write_file_bytes(path, encode_prompts(prompts));
}

PromptSet read_prompts(const std::filesystem::path& path)
{
    return decode_prompts(read_file_bytes(path));
}

void round_to_stored_precision(Matrix& m)
{
    for (double& v : m.values()) {
        v = static_cast<double>(static_cast<float>(v));
    }
}

std::filesystem::path DatasetManifest::resolve(const std::string& relative) const
{
    const std::filesystem::path p(relative);
    return p.is_absolute() ? p : base_dir / p;
}

const ManifestEntry& DatasetManifest::find(const std::string& slide_id) const
{
    for (const auto& entry : slides) {
        if (entry.slide_id == slide_id) {
            return entry;
        }
    }
    throw Error(ErrorKind::FormatViolation, "slide '" + slide_id + "' not in manifest");
}

void validate_manifest(const DatasetManifest& manifest)
{
    if (manifest.embedding_dim == 0) {
        throw Error(ErrorKind::FormatViolation, "manifest: embedding_dim must be positive");
    }
    if (manifest.class_names.size() < 2) {
        throw Error(ErrorKind::NeedAtLeastTwoClasses, "manifest: fewer than two classes");
    }
    std::set<std::string> seen;
    for (const auto& entry : manifest.slides) {
        if (!seen.insert(entry.slide_id).second) {
            throw Error(ErrorKind::FormatViolation, "manifest: duplicate slide id '" + entry.slide_id + "'");
        }
        if (entry.label < 0 || static_cast<std::size_t>(entry.label) >= manifest.class_names.size()) {
            throw Error(ErrorKind::LabelOutOfRange,
                        "manifest: slide '" + entry.slide_id + "' label " + std::to_string(entry.label));
        }
        if (entry.slide_id.find_first_of("\t\n") != std::string::npos ||
            entry.path.find_first_of("\t\n") != std::string::npos) {
            throw Error(ErrorKind::FormatViolation, "manifest: tab or newline inside a field");
        }
    }
}

std::string format_manifest(const DatasetManifest& manifest)
{
    validate_manifest(manifest);
    nlohmann::ordered_json header;
    header["format"] = "moc-manifest";
    header["version"] = 1;
    header["dataset_id"] = manifest.dataset_id;
    header["embedding_dim"] = manifest.embedding_dim;
    header["class_names"] = manifest.class_names;
    header["prompts"] = manifest.prompts_path;
    std::ostringstream out;
    out << header.dump() << '\n';
    for (const auto& e : manifest.slides) {
        out << e.slide_id << '\t' << e.path << '\t' << e.label << '\t' << e.patch_count << '\n';
    }
    return out.str();
}

DatasetManifest parse_manifest(std::string_view text, const std::filesystem::path& base_dir)
{
    std::istringstream in{std::string(text)};
    std::string line;
    if (!std::getline(in, line)) {
        throw Error(ErrorKind::FormatViolation, "manifest: empty file");
    }
    DatasetManifest manifest;
    manifest.base_dir = base_dir;
    try {
        const auto header = nlohmann::json::parse(line);
        if (header.at("format") != "moc-manifest" || header.at("version") != 1) {
            throw Error(ErrorKind::FormatViolation, "manifest: unsupported header");
        }
        manifest.dataset_id = header.at("dataset_id").get<std::string>();
        manifest.embedding_dim = header.at("embedding_dim").get<std::size_t>();
        manifest.class_names = header.at("class_names").get<std::vector<std::string>>();
        manifest.prompts_path = header.value("prompts", std::string("prompts.mocp"));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::FormatViolation, std::string("manifest header: ") + e.what());
    }
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        std::vector<std::string> fields;
        std::size_t start = 0;
        for (;;) {
            const auto tab = line.find('\t', start);
            fields.push_back(line.substr(start, tab - start));
            if (tab == std::string::npos) {
                break;
            }
            start = tab + 1;
        }
        if (fields.size() != 4) {
            throw Error(ErrorKind::FormatViolation, "manifest line " + std::to_string(line_no) + ": expected 4 fields");
        }
        ManifestEntry entry;
        entry.slide_id = fields[0];
        entry.path = fields[1];
        try {
            std::size_t used = 0;
            entry.label = std::stoi(fields[2], &used);
            if (used != fields[2].size()) {
                throw std::invalid_argument("label");
            }
            const long long count = std::stoll(fields[3], &used);
            if (used != fields[3].size() || count < 1) {
                throw std::invalid_argument("count");
            }
            entry.patch_count = static_cast<std::size_t>(count);
        } catch (const std::logic_error&) {
            throw Error(ErrorKind::FormatViolation, "manifest line " + std::to_string(line_no) + ": bad number");
        }
        manifest.slides.push_back(std::move(entry));
    }
    validate_manifest(manifest);
    return manifest;
}

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path)
{
    write_text_file(path, format_manifest(manifest));
}

DatasetManifest read_manifest(const std::filesystem::path& path)
{
    return parse_manifest(read_text_file(path), path.parent_path());
}

SlideBag load_slide(const DatasetManifest& manifest, const ManifestEntry& entry)
{
    SlideBag bag = read_bag(manifest.resolve(entry.path));
    if (bag.dim() != manifest.embedding_dim) {
        throw Error(ErrorKind::DimensionMismatch, "slide '" + entry.slide_id + "' has d=" + std::to_string(bag.dim()) +
                                                      ", manifest says " + std::to_string(manifest.embedding_dim));
    }
    if (bag.slide_id != entry.slide_id) {
        throw Error(ErrorKind::FormatViolation, "file for '" + entry.slide_id + "' holds slide '" + bag.slide_id + "'");
    }
    if (bag.size() != entry.patch_count) {
        throw Error(ErrorKind::FormatViolation, "slide '" + entry.slide_id + "' patch count differs from manifest");
    }
    bag.label = entry.label;
    return bag;
}

PromptSet load_prompts(const DatasetManifest& manifest)
{
    PromptSet prompts = read_prompts(manifest.resolve(manifest.prompts_path));
    if (prompts.dim() != manifest.embedding_dim) {
        throw Error(ErrorKind::DimensionMismatch, "prompt dimension differs from manifest embedding_dim");
    }
    if (prompts.num_classes() != manifest.class_names.size()) {
        throw Error(ErrorKind::FormatViolation, "prompt class count differs from manifest");
    }
    return prompts;
}

} // namespace moc
