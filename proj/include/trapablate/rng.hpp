#pragma once

#include <cstdint>
#include <random>

namespace trapablate {

/// Gaussian deviates from mt19937_64 via Box-Muller. Seeded output does not
/// depend on the standard library.
class NormalSource {
public:
    explicit NormalSource(std::uint64_t seed) : engine_(seed) {}

    double uniform(); // (0, 1]
    double normal();  // N(0, 1)
    std::uint64_t bits() { return engine_(); }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Seed for an independent stream derived from (seed, stream).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

} // namespace trapablate
