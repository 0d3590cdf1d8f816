#include "moc/meta_learner.hpp"

#include <cmath>

#include "moc/byte_io.hpp"
#include "moc/error.hpp"
#include "moc/rng.hpp"

namespace moc {

namespace {

constexpr std::string_view kCheckpointMagic = "MOCM";
constexpr std::uint16_t kCheckpointVersion = 1;
constexpr std::uint16_t kFlagLinearHead = 0x1;

void fill_xavier(Matrix& m, Rng& rng)
{
    const double limit = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
    for (double& v : m.values()) {
        v = rng.uniform(-limit, limit);
    }
}

} // namespace

MetaParameters MetaParameters::zeros(std::size_t d, std::size_t hidden, std::size_t num_weights)
{
    return {Matrix(hidden, d), Vector(hidden, 0.0), Matrix(num_weights, hidden), Vector(num_weights, 0.0)};
}

std::array<std::span<double>, 4> MetaParameters::tensors()
{
    return {w1.values(), std::span<double>(b1), w2.values(), std::span<double>(b2)};
}

std::array<std::span<const double>, 4> MetaParameters::tensors() const
{
    return {w1.values(), std::span<const double>(b1), w2.values(), std::span<const double>(b2)};
}

MetaLearner init_meta(std::size_t d, std::size_t hidden, std::size_t num_weights, std::uint64_t seed, WeightHead head)
{
    if (d == 0 || hidden == 0 || num_weights == 0) {
        throw Error(ErrorKind::Usage, "meta-learner dimensions must be positive");
    }
    MetaLearner meta;
    meta.head = head;
    meta.params = MetaParameters::zeros(d, hidden, num_weights);
    Rng rng(derive_seed(seed, "meta-init"));
    fill_xavier(meta.params.w1, rng);
    fill_xavier(meta.params.w2, rng);
    return meta;
}

Vector forward_weights(const MetaLearner& meta, std::span<const double> embedding, ForwardCache& cache)
{
    const MetaParameters& p = meta.params;
    if (embedding.size() != meta.input_dim()) {
        throw Error(ErrorKind::DimensionMismatch, "meta-learner expects d=" + std::to_string(meta.input_dim()) +
                                                      ", got " + std::to_string(embedding.size()));
    }
    cache.pre_activation = matvec(p.w1, embedding);
    cache.activation.resize(meta.hidden());
    for (std::size_t j = 0; j < meta.hidden(); ++j) {
        cache.pre_activation[j] += p.b1[j];
        cache.activation[j] = cache.pre_activation[j] > 0.0 ? cache.pre_activation[j] : 0.0;
    }
    Vector out = matvec(p.w2, cache.activation);
    for (std::size_t h = 0; h < out.size(); ++h) {
        out[h] += p.b2[h];
    }
    cache.weights = meta.head == WeightHead::Softmax ? softmax(out) : std::move(out);
    return cache.weights;
}

Vector forward_weights(const MetaLearner& meta, std::span<const double> embedding)
{
    ForwardCache cache;
    return forward_weights(meta, embedding, cache);
}

Vector mix_scores(std::span<const double> weights, const std::vector<ScoreTable>& tables, std::size_t patch,
                  std::size_t num_classes)
{
    if (weights.size() != tables.size()) {
        throw Error(ErrorKind::DimensionMismatch, std::to_string(weights.size()) + " weights for " +
                                                      std::to_string(tables.size()) + " score tables");
    }
    Vector logits(num_classes, 0.0);
    for (std::size_t h = 0; h < tables.size(); ++h) {
        const ScoreTable& table = tables[h];
        if (patch >= table.num_patches()) {
            throw Error(ErrorKind::IndexOutOfRange, "patch " + std::to_string(patch) + " not in score table");
        }
        for (std::size_t c = 0; c < num_classes; ++c) {
            logits[c] += weights[h] * table.at(patch, c);
        }
    }
    return logits;
}

void backward(const MetaLearner& meta, std::span<const double> embedding, const ForwardCache& cache,
              std::span<const double> upstream, const std::vector<ScoreTable>& tables, std::size_t patch,
              MetaParameters& grads)
{
    const MetaParameters& p = meta.params;
    const std::size_t num_weights = meta.num_weights();

    // dL/dLambda_h = sum_c upstream[c] * s_h(c)
    Vector d_weights(num_weights, 0.0);
    for (std::size_t h = 0; h < num_weights; ++h) {
        for (std::size_t c = 0; c < upstream.size(); ++c) {
            d_weights[h] += upstream[c] * tables[h].at(patch, c);
        }
    }

    Vector d_out = d_weights;
    if (meta.head == WeightHead::Softmax) {
        const Vector& lambda = cache.weights;
        const double inner = dot(lambda, d_weights);
        for (std::size_t h = 0; h < num_weights; ++h) {
            d_out[h] = lambda[h] * (d_weights[h] - inner);
        }
    }

    Vector d_hidden(meta.hidden(), 0.0);
    for (std::size_t h = 0; h < num_weights; ++h) {
        const double g = d_out[h];
        grads.b2[h] += g;
        if (g == 0.0) {
            continue;
        }
        auto grad_row = grads.w2.row(h);
        const auto weight_row = p.w2.row(h);
        for (std::size_t j = 0; j < meta.hidden(); ++j) {
            grad_row[j] += g * cache.activation[j];
            d_hidden[j] += g * weight_row[j];
        }
    }

    for (std::size_t j = 0; j < meta.hidden(); ++j) {
        if (cache.pre_activation[j] <= 0.0) {
            continue; // relu gate
        }
        const double g = d_hidden[j];
        grads.b1[j] += g;
        auto grad_row = grads.w1.row(j);
        for (std::size_t k = 0; k < embedding.size(); ++k) {
            grad_row[k] += g * embedding[k];
        }
    }
}

std::vector<std::uint8_t> encode_checkpoint(const MetaCheckpoint& checkpoint)
{
    const MetaLearner& meta = checkpoint.meta;
    if (checkpoint.bank.size() != meta.num_weights()) {
        throw Error(ErrorKind::DimensionMismatch, "checkpoint bank size differs from meta-learner output count");
    }
    ByteWriter out;
    out.put_bytes(kCheckpointMagic);
    out.put_u16(kCheckpointVersion);
    out.put_u16(meta.head == WeightHead::Linear ? kFlagLinearHead : 0);
    out.put_u32(static_cast<std::uint32_t>(meta.input_dim()));
    out.put_u32(static_cast<std::uint32_t>(meta.hidden()));
    out.put_u32(static_cast<std::uint32_t>(meta.num_weights()));
    for (ClassifierId id : checkpoint.bank) {
        out.put_bytes(std::string(1, static_cast<char>(static_cast<std::uint8_t>(id))));
    }
    for (const auto tensor : meta.params.tensors()) {
        for (double v : tensor) {
            out.put_f64(v);
        }
    }
    return out.take();
}

MetaCheckpoint decode_checkpoint(std::span<const std::uint8_t> bytes)
{
    ByteReader in(bytes);
    if (in.remaining() < 4 || in.get_bytes(4) != kCheckpointMagic) {
        throw Error(ErrorKind::FormatViolation, "checkpoint: bad magic");
    }
    if (in.get_u16() != kCheckpointVersion) {
        throw Error(ErrorKind::FormatViolation, "checkpoint: unsupported version");
    }
    const std::uint16_t flags = in.get_u16();
    if ((flags & ~kFlagLinearHead) != 0) {
        throw Error(ErrorKind::FormatViolation, "checkpoint: unknown flag bits");
    }
    const std::uint32_t d = in.get_u32();
    const std::uint32_t hidden = in.get_u32();
    const std::uint32_t num_weights = in.get_u32();
    if (d == 0 || hidden == 0 || num_weights == 0 || num_weights > std::size(kAllClassifiers)) {
        throw Error(ErrorKind::FormatViolation, "checkpoint: invalid dimensions");
    }
    MetaCheckpoint checkpoint;
    for (std::uint32_t h = 0; h < num_weights; ++h) {
        const auto raw = static_cast<std::uint8_t>(in.get_bytes(1)[0]);
        if (raw >= std::size(kAllClassifiers)) {
            throw Error(ErrorKind::FormatViolation, "checkpoint: unknown classifier id " + std::to_string(raw));
        }
        checkpoint.bank.push_back(static_cast<ClassifierId>(raw));
    }
    const std::uint64_t count = static_cast<std::uint64_t>(hidden) * d + hidden + num_weights * hidden + num_weights;
    if (count * 8 != in.remaining()) {
        throw Error(ErrorKind::FormatViolation, "checkpoint: parameter payload has wrong length");
    }
    checkpoint.meta.head = (flags & kFlagLinearHead) ? WeightHead::Linear : WeightHead::Softmax;
    checkpoint.meta.params = MetaParameters::zeros(d, hidden, num_weights);
    for (auto tensor : checkpoint.meta.params.tensors()) {
        for (double& v : tensor) {
            v = in.get_f64();
        }
        if (!all_finite(tensor)) {
            throw Error(ErrorKind::NonFiniteValue, "checkpoint: non-finite parameter");
        }
    }
    return checkpoint;
}

void save_checkpoint(const MetaCheckpoint& checkpoint, const std::filesystem::path& path)
{
    write_file_bytes(path, encode_checkpoint(checkpoint));
}

MetaCheckpoint load_checkpoint(const std::filesystem::path& path)
{
    return decode_checkpoint(read_file_bytes(path));
}

std::uint64_t parameter_checksum(const MetaLearner& meta)
{
    ByteWriter out;
    for (const auto tensor : meta.params.tensors()) {
        for (double v : tensor) {
            out.put_f64(v);
        }
    }
    Fnv1a hash;
    hash.update(out.bytes());
    return hash.digest();
}

} // namespace moc
