#pragma once

#include <cmath>
#include <cstdint>

namespace sparsedom {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

namespace detail {

/// 128-layer ziggurat tables for the standard normal (Doornik's layout).
struct ZigguratTables {
    double x[129];
    double ratio[128];

    ZigguratTables() {
        constexpr double R = 3.442619855899;
        constexpr double V = 9.91256303526217e-3;
        double f = std::exp(-0.5 * R * R);
        x[0] = V / f;  // base strip with the tail folded in
        x[1] = R;
        x[128] = 0.0;
        for (int i = 2; i < 128; ++i)
            x[i] = std::sqrt(-2.0 * std::log(V / x[i - 1] + std::exp(-0.5 * x[i - 1] * x[i - 1])));
        for (int i = 0; i < 128; ++i) ratio[i] = x[i + 1] / x[i];
    }
};

inline const ZigguratTables& ziggurat() {
    static const ZigguratTables t;
    return t;
}

}  // namespace detail

/// Deterministic xoshiro256++ stream. Results depend only on (seed, stream),
/// independent of platform or standard library, so every simulated path is
/// reproducible bit-for-bit from its seed.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) {
        std::uint64_t sm = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
        for (auto& w : s_) w = splitmix64(sm);
        if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[3] = 1;
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform in [0,1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform in (0,1]; safe under log().
    double uniform_pos() { return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal by the 128-layer ziggurat (exact; rejection from the
    /// wedges and the analytic tail beyond R).
    double normal() {
        const auto& z = detail::ziggurat();
        while (true) {
            const std::uint64_t bits = next_u64();
            const int i = static_cast<int>((bits >> 4) & 127u);
            const double u = static_cast<double>(bits >> 11) * 0x1.0p-52 - 1.0;  // [-1, 1)
            if (std::abs(u) < z.ratio[i]) return u * z.x[i];
            if (i == 0) return tail(z.x[1], u < 0.0);
            const double xv = u * z.x[i];
            const double f0 = std::exp(-0.5 * (z.x[i] * z.x[i] - xv * xv));
            const double f1 = std::exp(-0.5 * (z.x[i + 1] * z.x[i + 1] - xv * xv));
            if (f1 + uniform() * (f0 - f1) < 1.0) return xv;
        }
    }

    double exponential(double rate) { return -std::log(uniform_pos()) / rate; }

    /// Knuth product method; intended for means up to ~1e4.
    long poisson(double mean) {
        if (mean <= 0.0) return 0;
        long k = 0;
        double log_acc = 0.0;
        while (true) {
            log_acc += std::log(uniform_pos());
            if (log_acc < -mean) return k;
            ++k;
        }
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    double tail(double r, bool neg) {
        double xv, yv;
        do {
            xv = -std::log(uniform_pos()) / r;
            yv = -std::log(uniform_pos());
        } while (yv + yv < xv * xv);
        return neg ? -(r + xv) : r + xv;
    }

    std::uint64_t s_[4];
};

}  // namespace sparsedom
