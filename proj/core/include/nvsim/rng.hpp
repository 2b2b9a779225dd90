#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

// Deterministic random streams. Every parallelizable work item draws from its
// own stream derived from (root seed, stage tag, item index), so results are
// independent of thread count and scheduling: workers fill preallocated slots
// and reductions walk the slots in index order.

namespace nvsim {

inline constexpr std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ull;
    }
    return h;
}

// splitmix64: used to expand seeds into engine state. Passes BigCrush as a
// mixer; one 64-bit state word, full-period.
inline constexpr std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Seed of the stream for work item `index` of stage `tag` under `root`.
// Exposed so composite stages (one seed per site, many streams inside) can
// hand a derived root to a component that derives its own streams.
inline constexpr std::uint64_t derive_seed(std::uint64_t root, std::string_view tag,
                                           std::uint64_t index) {
    std::uint64_t sm = root ^ fnv1a64(tag);
    const std::uint64_t base = splitmix64(sm);
    sm = base + 0x9e3779b97f4a7c15ull * (index + 1);
    return splitmix64(sm);
}

// xoshiro256++ engine (Blackman & Vigna). Small, fast, and we control the
// bit stream completely, which the byte-identical-across-threads contract
// depends on (std:: distributions are not bit-stable across toolchains).
class Rng {
  public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& w : state_) w = splitmix64(sm);
    }

    // Stream for work item `index` of stage `tag` under `root` seed.
    Rng(std::uint64_t root, std::string_view tag, std::uint64_t index)
        : Rng(derive_seed(root, tag, index)) {}

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // uniform in [0,1) with 53 random bits
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // uniform in (0,1]; safe as an argument of log()
    double uniform_pos() { return 1.0 - uniform(); }

    double exponential(double mean) { return -mean * std::log(uniform_pos()); }

    // Marsaglia polar method; one spare value cached per stream
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        have_spare_ = true;
        return u * m;
    }

    double normal(double mean, double sigma) { return mean + sigma * normal(); }

    double lognormal(double log_mean, double log_sigma) {
        return std::exp(normal(log_mean, log_sigma));
    }

    // Exact Poisson sampling. Knuth's product method below lambda = 30,
    // Hormann's PTRS transformed rejection above; both sample the exact pmf,
    // which the chi-square acceptance closures rely on.
    std::uint64_t poisson(double lambda);

    // Gamma(shape, scale) by Marsaglia-Tsang squeeze, boosted for shape < 1
    double gamma(double shape, double scale);

    // trials-until-first-success, support {1, 2, ...}
    std::uint64_t geometric(double p) {
        if (p >= 1.0) return 1;
        const double g = std::log1p(-p);
        const double u = uniform_pos();
        const double k = std::floor(std::log(u) / g);
        return static_cast<std::uint64_t>(k) + 1;
    }

    // uniform point in the disc of radius r around the origin
    void in_disc(double r, double& x, double& y) {
        const double rho = r * std::sqrt(uniform());
        const double phi = 2.0 * 3.14159265358979323846 * uniform();
        x = rho * std::cos(phi);
        y = rho * std::sin(phi);
    }

  private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t state_[4];
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace nvsim
