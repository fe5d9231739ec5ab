#pragma once

#include <cstdint>
#include <random>

namespace rescast {

/// Seeded generator whose draws are identical on every standard library.
///
/// std::mt19937_64 output is fully specified by the standard, but the
/// std::*_distribution adaptors are not, so the conversions live here.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Uniform integer in [0, bound), rejection-sampled to avoid modulo bias.
    std::uint64_t below(std::uint64_t bound);

    /// Standard normal draw (Box-Muller, one value per call).
    double normal();

private:
    std::mt19937_64 engine_;
};

}  // namespace rescast
