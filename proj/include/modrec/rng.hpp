#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <vector>

namespace modrec {

/// One splitmix64 step; used to derive independent child seeds.
std::uint64_t splitmix64(std::uint64_t x);

/// Seed for stream `index` of a master seed. Any parallel schedule over
/// indices sees the same per-index stream.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

/// Deterministic random stream. The engine is mt19937_64 (fully specified by
/// the standard); all value transforms are implemented here rather than with
/// std distributions, so a given seed yields the same bytes on any platform.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller (pairs cached).
    double normal();

    /// Circularly-symmetric complex Gaussian with E|z|^2 = 1.
    std::complex<double> cnormal();

    /// Single fair bit.
    int bit() { return static_cast<int>(next_u64() >> 63); }

    /// Uniform integer in [0, n), n >= 1.
    std::uint64_t below(std::uint64_t n);

    /// In-place Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

  private:
    std::mt19937_64 engine_;
    bool have_cached_ = false;
    double cached_ = 0.0;
};

}  // namespace modrec
