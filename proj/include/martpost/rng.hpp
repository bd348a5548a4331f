#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace martpost {

/// Philox4x32-10 counter-based generator.
///
/// Each (key, counter) pair maps to an independent 128-bit block of output,
/// so streams can be laid out by construction instead of by jumping:
/// the 64-bit key carries the master seed, counter words 2..3 carry a
/// 64-bit stream id (chain index, repeat index, ...), counter word 1 a
/// stream class (retry attempt, estimator, data simulation, ...), and
/// counter word 0 advances as output is consumed.  Draw sequences are
/// therefore reproducible bit-for-bit for a given (seed, class, stream)
/// triple regardless of how many other streams run concurrently.
class Philox4x32 {
  public:
    using result_type = std::uint32_t;

    Philox4x32(std::uint64_t key, std::array<std::uint32_t, 4> counter)
        : key_{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)},
          ctr_(counter) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return 0xffffffffu; }

    result_type operator()() {
        if (pos_ == 4) {
            buf_ = block(ctr_, key_);
            // Word 0 is the intra-stream block counter; wrap-around would
            // need 2^34 draws from one stream, far beyond any chain length.
            ++ctr_[0];
            pos_ = 0;
        }
        return buf_[pos_++];
    }

    /// One 10-round keyed bijection of a 128-bit counter block.
    static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> ctr,
                                              std::array<std::uint32_t, 2> key) {
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += 0x9E3779B9u;  // golden-ratio Weyl increment
                key[1] += 0xBB67AE85u;  // sqrt(3)-1 Weyl increment
            }
            const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * ctr[0];
            const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * ctr[2];
            const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
            const auto lo0 = static_cast<std::uint32_t>(p0);
            const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
            const auto lo1 = static_cast<std::uint32_t>(p1);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        }
        return ctr;
    }

  private:
    std::array<std::uint32_t, 2> key_;
    std::array<std::uint32_t, 4> ctr_;
    std::array<std::uint32_t, 4> buf_{};
    int pos_ = 4;
};

/// SplitMix64 finalizer; used to derive fresh 64-bit seeds (e.g. one seed
/// per coverage repeat) from a master seed without stream overlap.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Derives an independent master seed for sub-experiment `index`.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    return mix64(master ^ mix64(index + 0x632BE59BD9B4E019ull));
}

/// Stream classes: disjoint counter-word-1 values so the same (seed, stream)
/// pair can feed several independent consumers.
enum class StreamClass : std::uint32_t {
    chain = 0,        // predictive-resampling chain, first attempt
    chain_retry = 1,  // retry after a mid-chain domain exit
    estimator = 8,    // randomized estimator restarts
    data = 9,         // synthetic data generation
    misc = 15,
};

/// Deterministic random stream with the distribution samplers the library
/// needs.  All samplers are implemented here (rather than via <random>
/// distributions) because libstdc++/libc++ distribution algorithms are not
/// specified by the standard, and reproducibility across platforms is part
/// of the output contract.
class Rng {
  public:
    Rng(std::uint64_t seed, std::uint64_t stream, StreamClass cls = StreamClass::misc)
        : eng_(seed, {0u, static_cast<std::uint32_t>(cls),
                      static_cast<std::uint32_t>(stream),
                      static_cast<std::uint32_t>(stream >> 32)}) {}

    std::uint32_t u32() { return eng_(); }

    std::uint64_t u64() {
        const std::uint64_t hi = eng_();
        return (hi << 32) | eng_();
    }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(u64() >> 11) * 0x1.0p-53; }

    /// Uniform on the open interval (0, 1); safe to pass to log().
    double uniform_pos() {
        return (static_cast<double>(u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller; the paired deviate is cached so the
    /// stream advances by exactly two uniforms per two normals.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double r = std::sqrt(-2.0 * std::log(uniform_pos()));
        const double a = 2.0 * std::numbers::pi * uniform01();
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    /// Exponential with the given scale (mean).
    double exponential(double scale) { return -scale * std::log(uniform_pos()); }

    /// Student-t with `nu` degrees of freedom (location 0, scale 1), by
    /// Bailey's polar method: for (u,v) uniform on the unit disc and
    /// w = u^2 + v^2, u * sqrt(nu (w^{-2/nu} - 1) / w) is t-distributed.
    double student_t(double nu) {
        double u, v, w;
        do {
            u = 2.0 * uniform01() - 1.0;
            v = 2.0 * uniform01() - 1.0;
            w = u * u + v * v;
        } while (w > 1.0 || w == 0.0);
        return u * std::sqrt(nu * (std::pow(w, -2.0 / nu) - 1.0) / w);
    }

    bool bernoulli(double p) { return uniform01() < p; }

    /// Uniform index in {0, ..., n-1}.
    std::size_t index(std::size_t n) {
        const auto k = static_cast<std::size_t>(uniform01() * static_cast<double>(n));
        return k < n ? k : n - 1;
    }

  private:
    Philox4x32 eng_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace martpost
