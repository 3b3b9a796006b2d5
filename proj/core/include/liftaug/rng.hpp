#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace liftaug {

/// FNV-1a over raw bytes; used for stream derivation and content hashing.
uint64_t hash_bytes(const void* data, size_t len, uint64_t seed = 0xcbf29ce484222325ull);
uint64_t hash_string(std::string_view s, uint64_t seed = 0xcbf29ce484222325ull);

/// splitmix64 state mixer.
uint64_t mix64(uint64_t x);

/// Deterministic counter-free RNG (xoshiro256** seeded via splitmix64).
/// Streams are derived from (seed, tag, indices) so every consumer of
/// randomness owns an independent, replayable substream regardless of
/// what the others draw.
class Rng {
  public:
    explicit Rng(uint64_t seed);

    /// Derive an independent substream. Identical arguments always yield
    /// an identically-seeded stream.
    Rng stream(std::string_view tag) const;
    Rng stream(std::string_view tag, uint64_t a) const;
    Rng stream(std::string_view tag, uint64_t a, uint64_t b) const;

    uint64_t next_u64();
    /// Uniform in [0, 1).
    double uniform();
    /// Uniform in [lo, hi).
    double uniform(double lo, double hi);
    /// Uniform integer in [0, n).
    uint64_t uniform_index(uint64_t n);
    /// Standard normal via Box-Muller (platform-independent).
    double normal();
    double normal(double mean, double stddev);
    bool bernoulli(double p);

    /// Fisher-Yates shuffle of [0, n) indices.
    template <typename Vec>
    void shuffle(Vec& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(uniform_index(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    uint64_t seed() const { return seed_; }

  private:
    uint64_t seed_;
    uint64_t s_[4];
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace liftaug
