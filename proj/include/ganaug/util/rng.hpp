#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace ganaug {

/// 64-bit FNV-1a, used for content hashes and seed derivation.
std::uint64_t fnv1a_bytes(const void* data, std::size_t size, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a(std::string_view text, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t value);

/// Independent stream seed for a (seed, purpose) pair.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view purpose);

/// Random source without hidden distribution caches, so its whole state is
/// the engine state and can be checkpointed exactly.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    double uniform();                     // [0, 1)
    double uniform(double lo, double hi);
    std::size_t index(std::size_t n);     // uniform in [0, n)
    float normal();                       // standard normal
    bool bernoulli(double p) { return uniform() < p; }

    std::mt19937_64& engine() { return engine_; }
    std::string state() const;
    void restore(const std::string& state);

private:
    std::mt19937_64 engine_;
};

}  // namespace ganaug
