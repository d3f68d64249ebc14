#include "nmp/rng.hpp"

#include <cmath>
#include <numbers>

namespace nmp {

// FNV-1a over the base seed, tag bytes, and index.
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, std::uint64_t index) {
    constexpr std::uint64_t kOffset = 1469598103934665603ULL;
    constexpr std::uint64_t kPrime = 1099511628211ULL;
    std::uint64_t h = kOffset;
    auto mix = [&](std::uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            h ^= (v >> (8 * i)) & 0xFF;
            h *= kPrime;
        }
    };
    mix(base);
    for (char c : tag) {
        h ^= static_cast<unsigned char>(c);
        h *= kPrime;
    }
    mix(index);
    return h;
}

double Rng::normal() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
}

}  // namespace nmp
