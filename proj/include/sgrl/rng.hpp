#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace sgrl {

// 64-bit FNV-1a. Used wherever a name has to map to a stable seed;
// std::hash is not guaranteed to be stable across implementations.
constexpr std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

// Deterministic random stream. mt19937_64 has a fully specified output
// sequence, and we derive doubles from raw bits ourselves so that results
// do not depend on the standard library's distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    // Named sub-stream: independent concerns (env, policy, labeler, ...)
    // draw from separate streams so adding a consumer in one place does
    // not perturb the others.
    Rng(std::uint64_t seed, std::string_view stream)
        : gen_(seed ^ fnv1a(stream)) {}

    std::uint64_t bits() { return gen_(); }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return gen_() % n; }

    // Standard normal via Box-Muller (spare discarded to keep the state
    // a pure function of the draw count).
    double normal() {
        double u1 = 1.0 - uniform();  // (0, 1]
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace sgrl
