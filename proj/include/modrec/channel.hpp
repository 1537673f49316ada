#pragma once

#include <cstdint>
#include <vector>

#include "modrec/modulation.hpp"
#include "modrec/rng.hpp"

namespace modrec {

/// Impairment chain applied to a clean baseband frame, in order: tapped
/// delay line (optionally time-varying via sum-of-sinusoids fading), sample
/// rate offset by fractional resampling, carrier frequency offset, constant
/// phase rotation. All-default settings make the chain an exact identity.
struct ChannelConfig {
    int num_taps = 1;           // multipath taps, 1..5
    double delay_spread = 0.0;  // span of tap delays, in samples
    double decay = 4.0;         // exponential power-profile constant, samples
    double max_doppler = 0.0;   // normalized Doppler, cycles/sample; 0 = static
    double cfo = 0.0;           // carrier offset, cycles/sample, |cfo| < 0.5
    double sro_ppm = 0.0;       // sample-rate offset, parts per million
    double phase = 0.0;         // constant phase offset, radians

    static ChannelConfig identity() { return {}; }
    bool is_identity() const;
    void validate() const;
};

struct TapSet {
    std::vector<int> delays;       // integer sample delays, ascending
    std::vector<double> powers;    // mean powers, sum to 1
    std::vector<cplx> gains;       // static complex gains
};

/// Static tap realization. A single static tap is pinned to gain 1+0j (any
/// scalar gain is removed by frame normalization anyway), so degenerate
/// configurations stay exact identities; multi-tap gains are drawn
/// CN(0, p_i) with exponentially decaying powers.
TapSet draw_taps(const ChannelConfig& cfg, Rng& rng);

std::vector<cplx> apply_channel(const std::vector<cplx>& x, const ChannelConfig& cfg,
                                Rng& rng);

/// Adds complex white Gaussian noise scaled so measured-signal-power /
/// noise-power equals the requested SNR. An infinite target disables noise.
std::vector<cplx> add_awgn(const std::vector<cplx>& x, double snr_db, Rng& rng);

}  // namespace modrec
