#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "lps/numeric.hpp"

namespace lps {

/// Seeded random stream. Uniforms are built from the top 53 bits of the
/// engine output so sequences are identical across platforms; normals come
/// from the inverse CDF rather than std::normal_distribution for the same
/// reason.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : eng_(seed) {}

    /// Uniform on the open interval (0, 1).
    double uniform() {
        return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1p-53;
    }

    double exponential(double rate) { return -std::log(uniform()) / rate; }

    double normal() { return num::normal_quantile(uniform()); }

    std::uint64_t raw() { return eng_(); }

private:
    std::mt19937_64 eng_;
};

/// Derives an independent substream seed from a master seed and a label,
/// e.g. substream_seed(seed, "arrivals/3").
inline std::uint64_t substream_seed(std::uint64_t master, std::string_view name) {
    return num::splitmix64(master ^ num::fnv1a64(name.data(), name.size()));
}

} // namespace lps
