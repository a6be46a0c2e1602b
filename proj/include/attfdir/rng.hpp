#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace attfdir {

/// 64-bit FNV-1a hash of a stream name.
[[nodiscard]] constexpr std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// SplitMix64 finalizer.
[[nodiscard]] constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed of the named sub-stream: splitmix64(master ^ fnv1a64(name)).
/// Each stream depends only on the master seed and its own name, so adding a
/// stream never shifts the draws of another.
[[nodiscard]] constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view name) {
    return splitmix64(master ^ fnv1a64(name));
}

/// Seeded random stream. Not thread-safe; give each consumer its own.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : engine_(seed) {}
    RandomStream(std::uint64_t master, std::string_view name)
        : engine_(derive_seed(master, name)) {}

    double normal() { return normal_(engine_); }
    double normal(double mean, double stddev) { return mean + stddev * normal_(engine_); }
    /// Uniform on [0, 1).
    double uniform() { return std::generate_canonical<double, 53>(engine_); }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

} // namespace attfdir
