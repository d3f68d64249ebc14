#pragma once

// Deterministic random streams. Seeds are derived as
// hash(base, tag, index) so batches of trials reproduce identically whether
// they run serially or in parallel.

#include <cstdint>
#include <random>
#include <string_view>

namespace nmp {

std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, std::uint64_t index);

class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    // Uniform in [0,1) built from the top 53 bits.
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller (deterministic for a given libm).
    double normal();

private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace nmp
