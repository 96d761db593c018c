#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace tvc {

/// Seed for a whole experiment.
struct RngSeed {
    std::uint64_t seed = 0;
};

/// SplitMix64 finalizer; used to derive child stream keys.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// FNV-1a over a string; turns stream labels into split tags.
constexpr std::uint64_t tag_of(std::string_view label) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : label) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// A deterministic, splittable random stream.
///
/// Every stochastic operation in the library takes an `RngStream&`. Child
/// streams are derived from the parent's key only (never from its engine
/// state), so `split(k)` yields the same stream no matter how many numbers the
/// parent has already produced. This is what makes parallel work units
/// reproducible regardless of scheduling.
class RngStream {
public:
    using result_type = std::mt19937_64::result_type;

    explicit RngStream(RngSeed seed) : RngStream(mix64(seed.seed)) {}

    RngStream split(std::uint64_t tag) const { return RngStream(mix64(key_ ^ mix64(tag))); }
    RngStream split(std::string_view label) const { return split(tag_of(label)); }

    std::uint64_t key() const noexcept { return key_; }

    static constexpr result_type min() { return std::mt19937_64::min(); }
    static constexpr result_type max() { return std::mt19937_64::max(); }
    result_type operator()() { return engine_(); }

    /// Uniform on [0, 1).
    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

private:
    explicit RngStream(std::uint64_t key) : key_(key), engine_(key) {}

    std::uint64_t key_;
    std::mt19937_64 engine_;
};

}  // namespace tvc
