#include "liftaug/rng.hpp"

#include <cmath>

#include "liftaug/errors.hpp"

namespace liftaug {

uint64_t hash_bytes(const void* data, size_t len, uint64_t seed) {
    const auto* p = static_cast<const unsigned char*>(data);
    uint64_t h = seed;
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

uint64_t hash_string(std::string_view s, uint64_t seed) {
    return hash_bytes(s.data(), s.size(), seed);
}

uint64_t mix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

namespace {
inline uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
}  // namespace

Rng::Rng(uint64_t seed) : seed_(seed) {
    uint64_t t = seed;
    for (auto& lane : s_) {
        t = mix64(t);
        lane = t;
    }
    // xoshiro must not start from the all-zero state
    if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
}

Rng Rng::stream(std::string_view tag) const {
    return Rng(mix64(seed_ ^ hash_string(tag)));
}

Rng Rng::stream(std::string_view tag, uint64_t a) const {
    return Rng(mix64(mix64(seed_ ^ hash_string(tag)) + a));
}

Rng Rng::stream(std::string_view tag, uint64_t a, uint64_t b) const {
    return Rng(mix64(mix64(mix64(seed_ ^ hash_string(tag)) + a) + b));
}

uint64_t Rng::next_u64() {
    uint64_t result = rotl(s_[1] * 5, 7) * 9;
    uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double Rng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

uint64_t Rng::uniform_index(uint64_t n) {
    if (n == 0) throw ContractError("uniform_index(0)");
    // modulo bias is < 2^-50 for every n we use; acceptable and portable
    return next_u64() % n;
}

double Rng::normal() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    double u1 = 0.0;
    do {
        u1 = uniform();
    } while (u1 <= 0.0);
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
}

double Rng::normal(double mean, double stddev) { return mean + stddev * normal(); }

bool Rng::bernoulli(double p) { return uniform() < p; }

}  // namespace liftaug
