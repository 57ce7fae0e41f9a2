#pragma once

#include <cmath>
#include <complex>
#include <cstdint>

namespace windingstats {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Seed for one stream, derived from the master seed and a stream index.
// Streams are independent of the order in which they are consumed, so
// parallel runs reproduce serial ones.
inline std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t index) {
    std::uint64_t s = master_seed ^ (0x2545f4914f6cdd1dULL * (index + 1));
    splitmix64(s);
    return splitmix64(s);
}

// xoshiro256** with fully specified bit behavior; std::normal_distribution
// is implementation defined, so Gaussians are produced by Box-Muller below.
class Xoshiro256 {
public:
    explicit Xoshiro256(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& word : state_) word = splitmix64(sm);
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in (0, 1].
    double uniform() {
        return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
    }

    // Standard normal pair via Box-Muller.
    void normal_pair(double& x, double& y) {
        const double u = uniform();
        const double v = uniform();
        const double r = std::sqrt(-2.0 * std::log(u));
        const double phi = 6.283185307179586476925286766559 * v;
        x = r * std::cos(phi);
        y = r * std::sin(phi);
    }

    // Complex Gaussian with E[z] = 0 and E[|z|^2] = 1.
    std::complex<double> complex_gaussian() {
        double x, y;
        normal_pair(x, y);
        return {x * 0.7071067811865475244, y * 0.7071067811865475244};
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    std::uint64_t state_[4];
};

}  // namespace windingstats
