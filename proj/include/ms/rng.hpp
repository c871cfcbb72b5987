#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>

namespace ms {

/// Deterministic RNG with a documented splittable scheme.
///
/// All randomness in a run flows from one root seed. Independent streams
/// (one per sampling chain) are derived with `derive(root, stream)`, a
/// SplitMix64 mix of the root seed and the stream index, so results never
/// depend on worker count or execution order.
///
/// Draws avoid std::uniform_real_distribution and friends on purpose:
/// their output is implementation-defined, and byte-identical outputs
/// across toolchains are part of the CLI contract.
class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    /// Uniform double in the open interval (0, 1).
    double uniform() {
        return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard Gumbel(0,1) draw: -log(-log(U)).
    double gumbel() {
        return -std::log(-std::log(uniform()));
    }

    /// Index draw from a nonnegative weight vector (unnormalized is fine)
    /// by inverse CDF. Consumes exactly one uniform.
    int categorical(std::span<const double> weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        double u = uniform() * total;
        double acc = 0.0;
        for (size_t i = 0; i < weights.size(); ++i) {
            acc += weights[i];
            if (u < acc) return static_cast<int>(i);
        }
        return static_cast<int>(weights.size()) - 1;
    }

    uint64_t raw() { return gen_(); }

    /// SplitMix64 finalizer over (root, stream): the sub-seed scheme.
    static uint64_t derive(uint64_t root, uint64_t stream) {
        uint64_t z = root + 0x9E3779B97F4A7C15ull * (stream + 1);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

private:
    std::mt19937_64 gen_;
};

} // namespace ms
