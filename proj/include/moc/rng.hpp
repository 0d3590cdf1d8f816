#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>

namespace moc {

/// Seeded generator whose draws are identical across standard libraries.
/// std::mt19937_64 output is fully specified; the distributions on top of it are not,
/// so uniform/normal/index draws are derived here from the raw 64-bit stream.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) with 53 bits of resolution.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal (Box-Muller).
    double normal();

    /// Uniform integer in [0, n); n must be positive.
    std::size_t index(std::size_t n);

    template <typename T>
    void shuffle(std::span<T> items)
    {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::swap(items[i - 1], items[index(i)]);
        }
    }

private:
    std::mt19937_64 engine_;
    double spare_normal_ = 0.0;
    bool has_spare_ = false;
};

/// Mixes a base seed with a stream tag so independent consumers never share a sequence.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream);

/// FNV-1a 64-bit hash, used for dataset and parameter checksums.
class Fnv1a {
public:
    void update(std::span<const std::uint8_t> bytes);
    void update(std::string_view text);
    std::uint64_t digest() const noexcept { return state_; }

private:
    std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::string hex64(std::uint64_t value);

} // namespace moc
