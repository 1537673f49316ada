#include "modrec/pulse.hpp"

#include <cmath>
#include <numbers>

#include "modrec/errors.hpp"

namespace modrec {

namespace {
constexpr double kPi = std::numbers::pi;
}

std::vector<double> rrc_taps(int sps, double rolloff, int span_symbols) {
    if (sps < 2) throw ConfigError("rrc: samples per symbol must be >= 2");
    if (!(rolloff > 0.0 && rolloff <= 1.0))
        throw ConfigError("rrc: rolloff must lie in (0, 1]");
    if (span_symbols < 1) throw ConfigError("rrc: filter span must be >= 1 symbol");

    const int len = span_symbols * sps + 1;
    const int mid = span_symbols * sps / 2;
    const double b = rolloff;
    std::vector<double> h(static_cast<std::size_t>(len));
    for (int i = 0; i < len; ++i) {
        const double t = static_cast<double>(i - mid) / sps;  // symbol periods
        double v;
        if (std::abs(t) < 1e-12) {
            v = 1.0 + b * (4.0 / kPi - 1.0);
        } else if (std::abs(std::abs(t) - 1.0 / (4.0 * b)) < 1e-9) {
            v = b / std::sqrt(2.0) *
                ((1.0 + 2.0 / kPi) * std::sin(kPi / (4.0 * b)) +
                 (1.0 - 2.0 / kPi) * std::cos(kPi / (4.0 * b)));
        } else {
            const double num = std::sin(kPi * t * (1.0 - b)) +
                               4.0 * b * t * std::cos(kPi * t * (1.0 + b));
            const double den = kPi * t * (1.0 - 16.0 * b * b * t * t);
            v = num / den;
        }
        h[static_cast<std::size_t>(i)] = v;
    }
    double energy = 0.0;
    for (const double v : h) energy += v * v;
    const double scale = 1.0 / std::sqrt(energy);
    for (double& v : h) v *= scale;
    return h;
}

std::int64_t symbols_for_length(std::int64_t out_len, int sps, int span_symbols) {
    // Trimming starts at the group delay span*sps/2; cover out_len samples
    // beyond it with one spare symbol of margin.
    return (out_len + static_cast<std::int64_t>(span_symbols) * sps) / sps + 2;
}

std::vector<cplx> pulse_shape(const std::vector<cplx>& symbols, int sps, double rolloff,
                              int span_symbols, std::int64_t out_len) {
    const auto h = rrc_taps(sps, rolloff, span_symbols);
    const std::int64_t n_sym = static_cast<std::int64_t>(symbols.size());
    const std::int64_t up_len = n_sym * sps;
    const std::int64_t full_len = up_len + static_cast<std::int64_t>(h.size()) - 1;
    const std::int64_t delay = static_cast<std::int64_t>(span_symbols) * sps / 2;

    std::int64_t begin = 0, len = full_len;
    if (out_len > 0) {
        if (delay + out_len > full_len)
            throw ConfigError("pulse_shape: too few symbols for requested length");
        begin = delay;
        len = out_len;
    }

    std::vector<cplx> y(static_cast<std::size_t>(len), cplx(0.0, 0.0));
    // The upsampled input is non-zero only at multiples of sps, so convolve
    // symbol-wise: y[t] = sum_k sym[k] * h[t - k*sps].
    for (std::int64_t k = 0; k < n_sym; ++k) {
        const cplx s = symbols[static_cast<std::size_t>(k)];
        const std::int64_t base = k * sps - begin;
        const std::int64_t lo = std::max<std::int64_t>(0, -base);
        const std::int64_t hi =
            std::min<std::int64_t>(static_cast<std::int64_t>(h.size()) - 1, len - 1 - base);
        for (std::int64_t j = lo; j <= hi; ++j)
            y[static_cast<std::size_t>(base + j)] += s * h[static_cast<std::size_t>(j)];
    }
    return y;
}

}  // namespace modrec
