#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "moc/classifier_bank.hpp"
#include "moc/linalg.hpp"

namespace moc {

/// Trainable tensors of the two-layer perceptron; also used as the gradient buffer.
struct MetaParameters {
    Matrix w1; ///< hidden x d
    Vector b1; ///< hidden
    Matrix w2; ///< H x hidden
    Vector b2; ///< H

    static MetaParameters zeros(std::size_t d, std::size_t hidden, std::size_t num_weights);
    MetaParameters zeros_like() const { return zeros(w1.cols(), w1.rows(), w2.rows()); }

    /// w1, b1, w2, b2 in declaration order.
    std::array<std::span<double>, 4> tensors();
    std::array<std::span<const double>, 4> tensors() const;

    friend bool operator==(const MetaParameters&, const MetaParameters&) = default;
};

/// How the H output activations become classifier weights.
enum class WeightHead {
    Softmax, ///< convex combination of classifier scores
    Linear,  ///< raw activations
};

/// Maps a patch embedding to one mixing weight per candidate classifier.
struct MetaLearner {
    MetaParameters params;
    WeightHead head = WeightHead::Softmax;

    std::size_t input_dim() const noexcept { return params.w1.cols(); }
    std::size_t hidden() const noexcept { return params.w1.rows(); }
    std::size_t num_weights() const noexcept { return params.w2.rows(); }
};

/// Xavier-uniform weights, zero biases.
MetaLearner init_meta(std::size_t d, std::size_t hidden, std::size_t num_weights, std::uint64_t seed,
                      WeightHead head = WeightHead::Softmax);

struct ForwardCache {
    Vector pre_activation; ///< W1 u + b1
    Vector activation;     ///< relu(pre_activation)
    Vector weights;        ///< Lambda
};

Vector forward_weights(const MetaLearner& meta, std::span<const double> embedding);
Vector forward_weights(const MetaLearner& meta, std::span<const double> embedding, ForwardCache& cache);

/// logits[c] = sum_h weights[h] * table_h(patch, c); scalar tables are broadcast over classes.
Vector mix_scores(std::span<const double> weights, const std::vector<ScoreTable>& tables, std::size_t patch,
                  std::size_t num_classes);

/// Accumulates dL/dparams into `grads` given dL/dlogits for one patch. Score tables are constants.
void backward(const MetaLearner& meta, std::span<const double> embedding, const ForwardCache& cache,
              std::span<const double> upstream, const std::vector<ScoreTable>& tables, std::size_t patch,
              MetaParameters& grads);

/// Checkpoint: "MOCM", u16 version=1, u16 flags (bit0 linear head), u32 d, u32 hidden, u32 H,
/// H u8 classifier ids, then w1, b1, w2, b2 as little-endian f64.
struct MetaCheckpoint {
    MetaLearner meta;
    std::vector<ClassifierId> bank;
};

std::vector<std::uint8_t> encode_checkpoint(const MetaCheckpoint& checkpoint);
MetaCheckpoint decode_checkpoint(std::span<const std::uint8_t> bytes);
void save_checkpoint(const MetaCheckpoint& checkpoint, const std::filesystem::path& path);
MetaCheckpoint load_checkpoint(const std::filesystem::path& path);

/// FNV-1a over the encoded parameters.
std::uint64_t parameter_checksum(const MetaLearner& meta);

} // namespace moc
