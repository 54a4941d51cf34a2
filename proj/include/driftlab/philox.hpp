#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>

namespace driftlab {

/// Philox4x32-10 counter-based generator (Salmon et al., Random123).
class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter generate(Counter ctr, Key key) noexcept {
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += kWeyl0;
                key[1] += kWeyl1;
            }
            ctr = single_round(ctr, key);
        }
        return ctr;
    }

private:
    static constexpr std::uint32_t kMul0 = 0xD2511F53u;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

    static Counter single_round(const Counter& c, const Key& k) noexcept {
        const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1);
        return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    }
};

/**
 * Reproducible noise: the draw for (seed, stream, step) is a pure function of
 * those three numbers, so results do not depend on thread scheduling.
 */
class NoiseSource {
public:
    explicit NoiseSource(std::uint64_t seed) noexcept
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

    /// Two independent uniforms in (0, 1].
    std::array<double, 2> uniforms(std::uint64_t stream, std::uint64_t step) const noexcept {
        const Philox4x32::Counter ctr{static_cast<std::uint32_t>(stream),
                                      static_cast<std::uint32_t>(stream >> 32),
                                      static_cast<std::uint32_t>(step),
                                      static_cast<std::uint32_t>(step >> 32)};
        const auto r = Philox4x32::generate(ctr, key_);
        const std::uint64_t a = (static_cast<std::uint64_t>(r[0]) << 32) | r[1];
        const std::uint64_t b = (static_cast<std::uint64_t>(r[2]) << 32) | r[3];
        return {to_unit(a), to_unit(b)};
    }

    /// Standard normal via Box-Muller.
    double normal(std::uint64_t stream, std::uint64_t step) const noexcept {
        const auto u = uniforms(stream, step);
        return std::sqrt(-2.0 * std::log(u[0])) * std::cos(2.0 * std::numbers::pi * u[1]);
    }

    /// Both Box-Muller outputs of one draw.
    std::array<double, 2> normal_pair(std::uint64_t stream, std::uint64_t step) const noexcept {
        const auto u = uniforms(stream, step);
        const double r = std::sqrt(-2.0 * std::log(u[0]));
        const double t = 2.0 * std::numbers::pi * u[1];
        return {r * std::cos(t), r * std::sin(t)};
    }

    /// out[i] for i in [begin, end): the normal for index i at `step`, taken pairwise from stream i / 2.
    void fill_normals(std::uint64_t step, std::size_t begin, std::size_t end, double* out) const noexcept {
        std::size_t i = begin;
        if (i < end && i % 2 == 1) {
            out[i] = normal_pair(i / 2, step)[1];
            ++i;
        }
        for (; i + 1 < end; i += 2) {
            const auto z = normal_pair(i / 2, step);
            out[i] = z[0];
            out[i + 1] = z[1];
        }
        if (i < end) out[i] = normal_pair(i / 2, step)[0];
    }

private:
    static double to_unit(std::uint64_t bits) noexcept {
        return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
    }

    Philox4x32::Key key_;
};

}  // namespace driftlab
