#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "modrec/channel.hpp"
#include "modrec/modulation.hpp"
#include "modrec/pulse.hpp"

namespace modrec {

struct PulseConfig {
    int sps = 8;            // samples per symbol
    double rolloff = 0.35;  // RRC rolloff, (0, 1]
    int span = 8;           // filter span in symbols

    void validate() const;
    nlohmann::ordered_json to_json() const;
    static PulseConfig from_json(const nlohmann::json& j);
};

/// Per-frame SNR assignment: either a deterministic grid cycled across
/// frames, or per-frame draws from a clamped normal in dB (log-normal in
/// linear power).
struct SnrSpec {
    enum class Mode { Grid, LogNormal };
    Mode mode = Mode::Grid;
    double start = 0.0, stop = 0.0, step = 2.0;      // grid parameters, dB
    double mu = 0.0, sigma = 1.0;                    // dB-domain normal
    double min_db = -20.0, max_db = 40.0;            // clamp range

    static SnrSpec grid(double start, double stop, double step);
    static SnrSpec log_normal(double mu, double sigma, double min_db, double max_db);
    std::vector<double> grid_values() const;
    void validate() const;
    nlohmann::ordered_json to_json() const;
    static SnrSpec from_json(const nlohmann::json& j);
};

struct DatasetSpec {
    std::int64_t n = 128;     // samples per frame
    std::int64_t frames = 0;  // total record count, multiple of class count
    std::vector<ModulationScheme> classes;
    SnrSpec snr;
    ChannelConfig channel;
    PulseConfig pulse;
    std::uint64_t seed = 0;

    void validate() const;
    nlohmann::ordered_json to_json() const;
    static DatasetSpec from_json(const nlohmann::json& j);
};

struct IQFrame {
    std::vector<double> i, q;
    int label = 0;
    double snr_db = 0.0;
};

/// Modulated, pulse-shaped baseband of exactly `n` samples, before channel
/// impairments. Consumes bits (and nothing else) from `rng`, so reruns with
/// an equally seeded generator reproduce it exactly.
std::vector<cplx> clean_waveform(ModulationScheme s, const PulseConfig& pulse,
                                 std::int64_t n, Rng& rng);

/// Full frame pipeline: clean waveform -> channel -> AWGN -> normalization
/// to unit mean power. Fully determined by the arguments.
IQFrame generate_frame(ModulationScheme s, double snr_db, const ChannelConfig& channel,
                       const PulseConfig& pulse, std::int64_t n,
                       std::uint64_t frame_seed);

/// Label for record `idx`: classes cycle fastest so every class appears
/// equally often.
ModulationScheme record_scheme(const DatasetSpec& spec, std::int64_t idx);
/// SNR for record `idx` (grid position or per-frame clamped draw).
double record_snr(const DatasetSpec& spec, std::int64_t idx);
/// Seed for record `idx`, derived from the spec seed.
std::uint64_t record_seed(const DatasetSpec& spec, std::int64_t idx);

/// Writes the dataset file: one JSON header line, then fixed-size records of
/// n little-endian f32 I samples, n f32 Q samples, a label byte, and an f32
/// SNR. Frames are generated in parallel but the bytes depend only on the
/// spec.
void generate_dataset(const DatasetSpec& spec, const std::string& path);

}  // namespace modrec
