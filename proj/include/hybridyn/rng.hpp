#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

#include "hybridyn/matrices.hpp"

namespace hybridyn {

/// Deterministic substream derivation: distinct (seed, index) pairs give
/// statistically independent streams, and the same pair always reproduces the
/// same draw sequence regardless of which thread consumes it.
class RngStream {
  public:
    RngStream(std::uint64_t master_seed, std::uint64_t stream_index)
        : master_seed_(master_seed), stream_index_(stream_index) {
        std::uint64_t s = splitmix64(master_seed ^ splitmix64(stream_index + 0x9e3779b97f4a7c15ULL));
        engine_.seed(s);
    }

    std::uint64_t master_seed() const { return master_seed_; }
    std::uint64_t stream_index() const { return stream_index_; }

    double uniform() {
        // 53-bit uniform in (0,1]; avoids log(0) in Box-Muller.
        const std::uint64_t r = engine_();
        return (double(r >> 11) + 1.0) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller (explicit, platform-independent draw order).
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double phi = 2.0 * M_PI * u2;
        spare_ = r * std::sin(phi);
        have_spare_ = true;
        return r * std::cos(phi);
    }

    std::uint64_t raw() { return engine_(); }

  private:
    static std::uint64_t splitmix64(std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    std::uint64_t master_seed_;
    std::uint64_t stream_index_;
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

/// n independent Wiener increments: Gaussian, mean 0, variance dt.
inline RealVector wiener_increments(RngStream& rng, int n, double dt) {
    if (dt <= 0.0) throw std::invalid_argument("wiener_increments: dt must be positive");
    RealVector out(n);
    const double s = std::sqrt(dt);
    for (int k = 0; k < n; ++k) out(k) = s * rng.gaussian();
    return out;
}

}  // namespace hybridyn
