#include "modrec/modulation.hpp"

#include <cmath>
#include <numbers>

#include "modrec/errors.hpp"

namespace modrec {

namespace {

constexpr double kPi = std::numbers::pi;

int gray(int i) { return i ^ (i >> 1); }

// Gray-coded one-dimensional PAM levels {±1, ±3, ...} indexed by symbol
// value, scaled so the average power over the axis equals `axis_power`.
std::vector<double> gray_pam_axis(int bits, double axis_power) {
    const int m = 1 << bits;
    double energy = 0.0;
    for (int p = 0; p < m; ++p) {
        const double lvl = 2.0 * p - (m - 1);
        energy += lvl * lvl;
    }
    const double scale = std::sqrt(axis_power * m / energy);
    std::vector<double> axis(m);
    for (int p = 0; p < m; ++p)
        axis[static_cast<std::size_t>(gray(p))] = (2.0 * p - (m - 1)) * scale;
    return axis;
}

// Square QAM: independent Gray-coded PAM on each axis, high bits on I.
std::vector<cplx> gray_qam(int bits) {
    const int half = bits / 2;
    const int m_axis = 1 << half;
    const auto axis = gray_pam_axis(half, 0.5);
    std::vector<cplx> table(std::size_t{1} << bits);
    for (int v = 0; v < (1 << bits); ++v) {
        const int vi = v >> half;
        const int vq = v & (m_axis - 1);
        table[static_cast<std::size_t>(v)] =
            cplx(axis[static_cast<std::size_t>(vi)], axis[static_cast<std::size_t>(vq)]);
    }
    return table;
}

// Gray-coded M-PSK: symbol gray(p) sits at angle offset + 2*pi*p/M so ring
// neighbours always differ in exactly one bit.
std::vector<cplx> gray_psk(int bits, double offset) {
    const int m = 1 << bits;
    std::vector<cplx> table(static_cast<std::size_t>(m));
    for (int p = 0; p < m; ++p) {
        const double ang = offset + 2.0 * kPi * p / m;
        table[static_cast<std::size_t>(gray(p))] = cplx(std::cos(ang), std::sin(ang));
    }
    return table;
}

int take_symbol(const std::vector<int>& bits, std::size_t pos, int bps, Rng& rng) {
    int v = 0;
    for (int b = 0; b < bps; ++b) {
        const std::size_t idx = pos + static_cast<std::size_t>(b);
        const int bit = idx < bits.size() ? bits[idx] : rng.bit();
        v = (v << 1) | (bit & 1);
    }
    return v;
}

}  // namespace

const std::vector<SchemeInfo>& all_schemes() {
    static const std::vector<SchemeInfo> table = {
        {ModulationScheme::BPSK, "bpsk", 1, false},
        {ModulationScheme::QPSK, "qpsk", 2, false},
        {ModulationScheme::PSK8, "8psk", 3, false},
        {ModulationScheme::DQPSK, "dqpsk", 2, false},
        {ModulationScheme::MSK, "msk", 1, true},
        {ModulationScheme::PAM4, "pam4", 2, false},
        {ModulationScheme::CPFSK, "cpfsk", 1, true},
        {ModulationScheme::QAM16, "qam16", 4, false},
        {ModulationScheme::QAM64, "qam64", 6, false},
        {ModulationScheme::QAM256, "qam256", 8, false},
    };
    return table;
}

const SchemeInfo& scheme_info(ModulationScheme s) {
    for (const auto& info : all_schemes())
        if (info.scheme == s) return info;
    throw ConfigError("unknown modulation scheme id " +
                      std::to_string(static_cast<int>(s)));
}

ModulationScheme scheme_from_name(const std::string& name) {
    for (const auto& info : all_schemes())
        if (name == info.name) return info.scheme;
    throw ConfigError("unknown modulation scheme '" + name + "'");
}

std::vector<cplx> constellation(ModulationScheme s) {
    switch (s) {
        case ModulationScheme::BPSK:
            return {cplx(1.0, 0.0), cplx(-1.0, 0.0)};
        case ModulationScheme::QPSK:
            return gray_psk(2, kPi / 4.0);
        case ModulationScheme::PSK8:
            return gray_psk(3, 0.0);
        case ModulationScheme::DQPSK:
            // Phase states reachable from the pi/4 start under quarter-turn
            // increments.
            return gray_psk(2, kPi / 4.0);
        case ModulationScheme::MSK:
        case ModulationScheme::CPFSK:
            // h = 0.5 phase states at symbol boundaries.
            return {cplx(1, 0), cplx(0, 1), cplx(-1, 0), cplx(0, -1)};
        case ModulationScheme::PAM4: {
            const auto axis = gray_pam_axis(2, 1.0);
            std::vector<cplx> table(axis.size());
            for (std::size_t i = 0; i < axis.size(); ++i) table[i] = cplx(axis[i], 0.0);
            return table;
        }
        case ModulationScheme::QAM16:
            return gray_qam(4);
        case ModulationScheme::QAM64:
            return gray_qam(6);
        case ModulationScheme::QAM256:
            return gray_qam(8);
    }
    throw ConfigError("unknown modulation scheme id " +
                      std::to_string(static_cast<int>(s)));
}

std::vector<cplx> map_bits(ModulationScheme s, const std::vector<int>& bits, Rng& rng) {
    const auto& info = scheme_info(s);
    const int bps = info.bits_per_symbol;
    const std::size_t n_sym =
        (bits.size() + static_cast<std::size_t>(bps) - 1) / static_cast<std::size_t>(bps);
    std::vector<cplx> out;
    out.reserve(n_sym);

    if (s == ModulationScheme::DQPSK) {
        // Gray-coded phase increments: 00->0, 01->pi/2, 11->pi, 10->3pi/2.
        double phase = kPi / 4.0;
        for (std::size_t k = 0; k < n_sym; ++k) {
            const int v = take_symbol(bits, k * 2, 2, rng);
            phase += kPi / 2.0 * gray(v);
            out.emplace_back(std::cos(phase), std::sin(phase));
        }
        return out;
    }
    if (info.continuous_phase) {
        double phase = 0.0;
        for (std::size_t k = 0; k < n_sym; ++k) {
            const int bit = k < bits.size() ? bits[k] : rng.bit();
            phase += kPi * 0.5 * (bit ? -1.0 : 1.0);
            out.emplace_back(std::cos(phase), std::sin(phase));
        }
        return out;
    }

    const auto table = constellation(s);
    for (std::size_t k = 0; k < n_sym; ++k) {
        const int v = take_symbol(bits, k * static_cast<std::size_t>(bps), bps, rng);
        out.push_back(table[static_cast<std::size_t>(v)]);
    }
    return out;
}

std::vector<cplx> cpfsk_waveform(const std::vector<int>& bits, int sps, double mod_index) {
    if (sps < 1) throw ConfigError("cpfsk: samples per symbol must be >= 1");
    std::vector<cplx> out;
    out.reserve(bits.size() * static_cast<std::size_t>(sps));
    double phase = 0.0;
    for (const int bit : bits) {
        const double step = kPi * mod_index * (bit ? -1.0 : 1.0) / sps;
        for (int m = 0; m < sps; ++m) {
            phase += step;
            out.emplace_back(std::cos(phase), std::sin(phase));
        }
    }
    return out;
}

}  // namespace modrec
