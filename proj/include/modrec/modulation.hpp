#pragma once

#include <complex>
#include <string>
#include <vector>

#include "modrec/rng.hpp"

namespace modrec {

using cplx = std::complex<double>;

/// Digital modulation pool. PSK/QAM/PAM map through Gray-coded
/// constellations; DQPSK differentially encodes Gray-coded phase steps;
/// MSK and CPFSK follow a continuous-phase trajectory (index 0.5, MSK
/// being the binary h=0.5 special case).
enum class ModulationScheme {
    BPSK,
    QPSK,
    PSK8,
    DQPSK,
    MSK,
    PAM4,
    CPFSK,
    QAM16,
    QAM64,
    QAM256,
};

struct SchemeInfo {
    ModulationScheme scheme;
    const char* name;
    int bits_per_symbol;
    bool continuous_phase;
};

const std::vector<SchemeInfo>& all_schemes();
const SchemeInfo& scheme_info(ModulationScheme s);
ModulationScheme scheme_from_name(const std::string& name);

/// Symbol alphabet with unit average power. For the continuous-phase
/// schemes this is the set of phase states at symbol boundaries.
std::vector<cplx> constellation(ModulationScheme s);

/// Maps a bit stream to complex symbols. Bit counts that do not divide the
/// bits-per-symbol are padded with random bits from `rng`. For MSK/CPFSK the
/// result is the phase state after each symbol.
std::vector<cplx> map_bits(ModulationScheme s, const std::vector<int>& bits, Rng& rng);

/// Sample-level constant-envelope CPFSK waveform: phase advances by
/// pi*h*(+/-1)/sps per sample, one bit per symbol of `sps` samples.
std::vector<cplx> cpfsk_waveform(const std::vector<int>& bits, int sps, double mod_index);

}  // namespace modrec
