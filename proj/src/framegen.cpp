#include "modrec/framegen.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>

#include "modrec/errors.hpp"
#include "modrec/threading.hpp"

namespace modrec {

static_assert(std::endian::native == std::endian::little,
              "dataset records are written little-endian");

using nlohmann::json;
using nlohmann::ordered_json;

void PulseConfig::validate() const {
    if (sps < 2) throw ConfigError("pulse: sps must be >= 2");
    if (!(rolloff > 0.0 && rolloff <= 1.0))
        throw ConfigError("pulse: rolloff must lie in (0, 1]");
    if (span < 1) throw ConfigError("pulse: span must be >= 1 symbol");
}

ordered_json PulseConfig::to_json() const {
    return {{"sps", sps}, {"rolloff", rolloff}, {"span", span}};
}

PulseConfig PulseConfig::from_json(const json& j) {
    PulseConfig p;
    p.sps = j.value("sps", p.sps);
    p.rolloff = j.value("rolloff", p.rolloff);
    p.span = j.value("span", p.span);
    p.validate();
    return p;
}

SnrSpec SnrSpec::grid(double start, double stop, double step) {
    SnrSpec s;
    s.mode = Mode::Grid;
    s.start = start;
    s.stop = stop;
    s.step = step;
    s.validate();
    return s;
}

SnrSpec SnrSpec::log_normal(double mu, double sigma, double min_db, double max_db) {
    SnrSpec s;
    s.mode = Mode::LogNormal;
    s.mu = mu;
    s.sigma = sigma;
    s.min_db = min_db;
    s.max_db = max_db;
    s.validate();
    return s;
}

void SnrSpec::validate() const {
    if (mode == Mode::Grid) {
        if (step <= 0.0) throw ConfigError("snr: grid step must be > 0");
        if (stop < start) throw ConfigError("snr: grid stop must be >= start");
    } else {
        if (sigma < 0.0) throw ConfigError("snr: sigma must be >= 0");
        if (max_db < min_db) throw ConfigError("snr: max must be >= min");
    }
}

std::vector<double> SnrSpec::grid_values() const {
    validate();
    if (mode != Mode::Grid) throw ConfigError("snr: not a grid specification");
    std::vector<double> vals;
    const auto count = static_cast<std::int64_t>(std::floor((stop - start) / step + 1e-9)) + 1;
    vals.reserve(static_cast<std::size_t>(count));
    for (std::int64_t k = 0; k < count; ++k) vals.push_back(start + step * static_cast<double>(k));
    return vals;
}

ordered_json SnrSpec::to_json() const {
    if (mode == Mode::Grid)
        return {{"mode", "grid"}, {"start", start}, {"stop", stop}, {"step", step}};
    return {{"mode", "log-normal"},
            {"mu", mu},
            {"sigma", sigma},
            {"min", min_db},
            {"max", max_db}};
}

SnrSpec SnrSpec::from_json(const json& j) {
    const std::string mode = j.value("mode", "grid");
    SnrSpec s;
    if (mode == "grid") {
        s.mode = Mode::Grid;
        if (!j.contains("start") || !j.contains("stop"))
            throw ConfigError("snr: grid mode needs 'start' and 'stop'");
        s.start = j.at("start").get<double>();
        s.stop = j.at("stop").get<double>();
        s.step = j.value("step", s.step);
    } else if (mode == "log-normal") {
        s.mode = Mode::LogNormal;
        s.mu = j.value("mu", s.mu);
        s.sigma = j.value("sigma", s.sigma);
        s.min_db = j.value("min", s.min_db);
        s.max_db = j.value("max", s.max_db);
    } else {
        throw ConfigError("snr: unknown mode '" + mode + "'");
    }
    s.validate();
    return s;
}

namespace {

ChannelConfig channel_from_json(const json& j) {
    ChannelConfig c;
    c.num_taps = j.value("num_taps", c.num_taps);
    c.delay_spread = j.value("delay_spread", c.delay_spread);
    c.decay = j.value("decay", c.decay);
    c.max_doppler = j.value("max_doppler", c.max_doppler);
    c.cfo = j.value("cfo", c.cfo);
    c.sro_ppm = j.value("sro_ppm", c.sro_ppm);
    c.phase = j.value("phase", c.phase);
    c.validate();
    return c;
}

ordered_json channel_to_json(const ChannelConfig& c) {
    return {{"num_taps", c.num_taps},   {"delay_spread", c.delay_spread},
            {"decay", c.decay},         {"max_doppler", c.max_doppler},
            {"cfo", c.cfo},             {"sro_ppm", c.sro_ppm},
            {"phase", c.phase}};
}

}  // namespace

void DatasetSpec::validate() const {
    if (n < 1) throw ConfigError("dataset: frame length n must be >= 1");
    if (frames < 1) throw ConfigError("dataset: frame count must be >= 1");
    if (classes.empty()) throw ConfigError("dataset: class list must be non-empty");
    if (frames % static_cast<std::int64_t>(classes.size()) != 0)
        throw ConfigError("dataset: frame count must be a multiple of the class count");
    std::set<ModulationScheme> uniq(classes.begin(), classes.end());
    if (uniq.size() != classes.size())
        throw ConfigError("dataset: class list contains duplicates");
    snr.validate();
    channel.validate();
    pulse.validate();
}

ordered_json DatasetSpec::to_json() const {
    ordered_json names = ordered_json::array();
    for (const auto s : classes) names.push_back(scheme_info(s).name);
    return {{"format_version", 1}, {"n", n},
            {"frames", frames},    {"classes", names},
            {"snr", snr.to_json()}, {"channel", channel_to_json(channel)},
            {"pulse", pulse.to_json()}, {"seed", seed}};
}

DatasetSpec DatasetSpec::from_json(const json& j) {
    DatasetSpec spec;
    for (const char* key : {"n", "frames", "classes"})
        if (!j.contains(key))
            throw ConfigError(std::string("dataset: missing required field '") + key + "'");
    spec.n = j.at("n").get<std::int64_t>();
    spec.frames = j.at("frames").get<std::int64_t>();
    for (const auto& name : j.at("classes"))
        spec.classes.push_back(scheme_from_name(name.get<std::string>()));
    if (j.contains("snr")) spec.snr = SnrSpec::from_json(j.at("snr"));
    if (j.contains("channel")) spec.channel = channel_from_json(j.at("channel"));
    if (j.contains("pulse")) spec.pulse = PulseConfig::from_json(j.at("pulse"));
    spec.seed = j.value("seed", spec.seed);
    spec.validate();
    return spec;
}

std::vector<cplx> clean_waveform(ModulationScheme s, const PulseConfig& pulse,
                                 std::int64_t n, Rng& rng) {
    pulse.validate();
    if (n < 1) throw ConfigError("frame: length must be >= 1");
    const auto& info = scheme_info(s);

    if (info.continuous_phase) {
        const std::int64_t n_sym = n / pulse.sps + 2;
        std::vector<int> bits(static_cast<std::size_t>(n_sym));
        for (auto& b : bits) b = rng.bit();
        auto wave = cpfsk_waveform(bits, pulse.sps, 0.5);
        wave.resize(static_cast<std::size_t>(n));
        return wave;
    }

    const std::int64_t n_sym = symbols_for_length(n, pulse.sps, pulse.span);
    std::vector<int> bits(static_cast<std::size_t>(n_sym * info.bits_per_symbol));
    for (auto& b : bits) b = rng.bit();
    const auto symbols = map_bits(s, bits, rng);
    return pulse_shape(symbols, pulse.sps, pulse.rolloff, pulse.span, n);
}

IQFrame generate_frame(ModulationScheme s, double snr_db, const ChannelConfig& channel,
                       const PulseConfig& pulse, std::int64_t n,
                       std::uint64_t frame_seed) {
    Rng rng(frame_seed);
    auto wave = clean_waveform(s, pulse, n, rng);
    wave = apply_channel(wave, channel, rng);
    wave = add_awgn(wave, snr_db, rng);

    double power = 0.0;
    for (const auto& v : wave) power += std::norm(v);
    power /= static_cast<double>(wave.size());
    const double scale = power > 0.0 ? 1.0 / std::sqrt(power) : 1.0;

    IQFrame frame;
    frame.i.resize(wave.size());
    frame.q.resize(wave.size());
    for (std::size_t t = 0; t < wave.size(); ++t) {
        frame.i[t] = wave[t].real() * scale;
        frame.q[t] = wave[t].imag() * scale;
    }
    frame.snr_db = snr_db;
    return frame;
}

ModulationScheme record_scheme(const DatasetSpec& spec, std::int64_t idx) {
    return spec.classes[static_cast<std::size_t>(
        idx % static_cast<std::int64_t>(spec.classes.size()))];
}

double record_snr(const DatasetSpec& spec, std::int64_t idx) {
    if (spec.snr.mode == SnrSpec::Mode::Grid) {
        const auto grid = spec.snr.grid_values();
        const std::int64_t c = static_cast<std::int64_t>(spec.classes.size());
        return grid[static_cast<std::size_t>((idx / c) % static_cast<std::int64_t>(grid.size()))];
    }
    // Separate stream from the frame-content seed so SNR assignment and
    // waveform bits stay independent.
    Rng rng(derive_seed(record_seed(spec, idx), 0x534e52));
    const double v = spec.snr.mu + spec.snr.sigma * rng.normal();
    return std::clamp(v, spec.snr.min_db, spec.snr.max_db);
}

std::uint64_t record_seed(const DatasetSpec& spec, std::int64_t idx) {
    return derive_seed(spec.seed, static_cast<std::uint64_t>(idx));
}

void generate_dataset(const DatasetSpec& spec, const std::string& path) {
    spec.validate();
    const std::string header = spec.to_json().dump() + "\n";
    const std::size_t rec_size = static_cast<std::size_t>(8 * spec.n + 5);
    std::vector<unsigned char> body(static_cast<std::size_t>(spec.frames) * rec_size);

    parallel_for(0, spec.frames, [&](std::int64_t idx) {
        const ModulationScheme scheme = record_scheme(spec, idx);
        const double snr = record_snr(spec, idx);
        const IQFrame frame = generate_frame(scheme, snr, spec.channel, spec.pulse,
                                             spec.n, record_seed(spec, idx));
        unsigned char* rec = body.data() + static_cast<std::size_t>(idx) * rec_size;
        for (std::int64_t t = 0; t < spec.n; ++t) {
            const float fi = static_cast<float>(frame.i[static_cast<std::size_t>(t)]);
            std::memcpy(rec + 4 * t, &fi, 4);
        }
        for (std::int64_t t = 0; t < spec.n; ++t) {
            const float fq = static_cast<float>(frame.q[static_cast<std::size_t>(t)]);
            std::memcpy(rec + 4 * (spec.n + t), &fq, 4);
        }
        rec[8 * spec.n] = static_cast<unsigned char>(
            idx % static_cast<std::int64_t>(spec.classes.size()));
        const float fs = static_cast<float>(snr);
        std::memcpy(rec + 8 * spec.n + 1, &fs, 4);
    });

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("dataset: cannot open '" + path + "' for writing");
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    out.write(reinterpret_cast<const char*>(body.data()),
              static_cast<std::streamsize>(body.size()));
    if (!out) throw DataError("dataset: write failed for '" + path + "'");
}

}  // namespace modrec
