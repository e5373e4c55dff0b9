#pragma once

#include <cstdint>
#include <random>

namespace fxarb {

// Deterministic samplers over mt19937_64. The stdlib distributions are
// implementation-defined, which would break bit-identical reproducibility
// contracts across toolchains.
class GaussianRng {
public:
    explicit GaussianRng(std::uint64_t seed) : eng_(seed) {}

    double uniform();   // [0, 1), 53-bit
    double gaussian();  // N(0, 1), Box-Muller

    std::uint64_t raw() { return eng_(); }

private:
    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// Stable seed derivation for independent streams (splitmix64 mixing).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

}  // namespace fxarb
