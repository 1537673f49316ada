#pragma once

#include <cstdint>
#include <vector>

#include "modrec/modulation.hpp"

namespace modrec {

/// Root-raised-cosine filter taps, `span_symbols * sps + 1` of them,
/// normalized to unit energy. Rolloff must lie in (0, 1].
std::vector<double> rrc_taps(int sps, double rolloff, int span_symbols);

/// Upsamples `symbols` by `sps` and convolves with the RRC filter. When
/// `out_len > 0` the result is trimmed to that many samples starting at the
/// filter group delay (steady-state alignment); `out_len == 0` returns the
/// full convolution, so a single unit symbol reproduces the taps verbatim.
std::vector<cplx> pulse_shape(const std::vector<cplx>& symbols, int sps, double rolloff,
                              int span_symbols, std::int64_t out_len = 0);

/// Symbols needed so that a trimmed pulse_shape output of `out_len` samples
/// is fully covered past the group delay.
std::int64_t symbols_for_length(std::int64_t out_len, int sps, int span_symbols);

}  // namespace modrec
