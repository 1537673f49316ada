#include "modrec/channel.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "modrec/errors.hpp"

namespace modrec {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr int kSinusoids = 8;  // sum-of-sinusoids components per tap
}  // namespace

bool ChannelConfig::is_identity() const {
    return num_taps == 1 && max_doppler == 0.0 && cfo == 0.0 && sro_ppm == 0.0 &&
           phase == 0.0;
}

void ChannelConfig::validate() const {
    if (num_taps < 1 || num_taps > 5)
        throw ConfigError("channel: num_taps must lie in [1, 5]");
    if (delay_spread < 0.0) throw ConfigError("channel: delay_spread must be >= 0");
    if (num_taps > 1 && delay_spread < 1.0)
        throw ConfigError("channel: multipath needs delay_spread >= 1 sample");
    if (decay <= 0.0) throw ConfigError("channel: decay constant must be > 0");
    if (max_doppler < 0.0 || max_doppler >= 0.5)
        throw ConfigError("channel: max_doppler must lie in [0, 0.5)");
    if (std::abs(cfo) >= 0.5) throw ConfigError("channel: |cfo| must be < 0.5");
}

TapSet draw_taps(const ChannelConfig& cfg, Rng& rng) {
    cfg.validate();
    TapSet taps;
    taps.delays.resize(static_cast<std::size_t>(cfg.num_taps));
    taps.powers.resize(static_cast<std::size_t>(cfg.num_taps));
    for (int i = 0; i < cfg.num_taps; ++i) {
        const double frac = cfg.num_taps > 1
                                ? static_cast<double>(i) / (cfg.num_taps - 1)
                                : 0.0;
        taps.delays[static_cast<std::size_t>(i)] =
            static_cast<int>(std::lround(frac * cfg.delay_spread));
    }
    double total = 0.0;
    for (int i = 0; i < cfg.num_taps; ++i) {
        const double p = std::exp(-taps.delays[static_cast<std::size_t>(i)] / cfg.decay);
        taps.powers[static_cast<std::size_t>(i)] = p;
        total += p;
    }
    for (double& p : taps.powers) p /= total;

    taps.gains.resize(static_cast<std::size_t>(cfg.num_taps));
    if (cfg.num_taps == 1) {
        taps.gains[0] = cplx(1.0, 0.0);
    } else {
        for (int i = 0; i < cfg.num_taps; ++i)
            taps.gains[static_cast<std::size_t>(i)] =
                std::sqrt(taps.powers[static_cast<std::size_t>(i)]) * rng.cnormal();
    }
    return taps;
}

namespace {

// Per-tap Rayleigh process: unit-mean-power sum of equal-amplitude sinusoids
// with random arrival angles and phases.
struct FadingProcess {
    std::vector<double> freq;     // cycles/sample
    std::vector<double> phase_i;  // radians
    std::vector<double> phase_q;

    static FadingProcess draw(double max_doppler, Rng& rng) {
        FadingProcess p;
        p.freq.resize(kSinusoids);
        p.phase_i.resize(kSinusoids);
        p.phase_q.resize(kSinusoids);
        for (int m = 0; m < kSinusoids; ++m) {
            const double alpha = 2.0 * kPi * rng.uniform();
            p.freq[static_cast<std::size_t>(m)] = max_doppler * std::cos(alpha);
            p.phase_i[static_cast<std::size_t>(m)] = 2.0 * kPi * rng.uniform();
            p.phase_q[static_cast<std::size_t>(m)] = 2.0 * kPi * rng.uniform();
        }
        return p;
    }

    cplx at(std::int64_t t) const {
        double re = 0.0, im = 0.0;
        for (int m = 0; m < kSinusoids; ++m) {
            const double arg = 2.0 * kPi * freq[static_cast<std::size_t>(m)] * t;
            re += std::cos(arg + phase_i[static_cast<std::size_t>(m)]);
            im += std::cos(arg + phase_q[static_cast<std::size_t>(m)]);
        }
        // re and im are independent sums of M unit cosines (variance M/2
        // each), so 1/sqrt(M) makes E|h|^2 = 1.
        const double norm = 1.0 / std::sqrt(static_cast<double>(kSinusoids));
        return cplx(re * norm, im * norm);
    }
};

}  // namespace

std::vector<cplx> apply_channel(const std::vector<cplx>& x, const ChannelConfig& cfg,
                                Rng& rng) {
    cfg.validate();
    if (cfg.is_identity()) return x;

    const std::int64_t n = static_cast<std::int64_t>(x.size());
    const TapSet taps = draw_taps(cfg, rng);

    std::vector<cplx> y(x.size(), cplx(0.0, 0.0));
    if (cfg.max_doppler > 0.0) {
        std::vector<FadingProcess> fading;
        fading.reserve(taps.gains.size());
        for (std::size_t i = 0; i < taps.gains.size(); ++i)
            fading.push_back(FadingProcess::draw(cfg.max_doppler, rng));
        for (std::int64_t t = 0; t < n; ++t) {
            cplx acc(0.0, 0.0);
            for (std::size_t i = 0; i < taps.gains.size(); ++i) {
                const std::int64_t src = t - taps.delays[i];
                if (src < 0) continue;
                acc += std::sqrt(taps.powers[i]) * fading[i].at(t) *
                       x[static_cast<std::size_t>(src)];
            }
            y[static_cast<std::size_t>(t)] = acc;
        }
    } else if (cfg.num_taps > 1) {
        for (std::int64_t t = 0; t < n; ++t) {
            cplx acc(0.0, 0.0);
            for (std::size_t i = 0; i < taps.gains.size(); ++i) {
                const std::int64_t src = t - taps.delays[i];
                if (src >= 0) acc += taps.gains[i] * x[static_cast<std::size_t>(src)];
            }
            y[static_cast<std::size_t>(t)] = acc;
        }
    } else {
        y = x;
    }

    if (cfg.sro_ppm != 0.0) {
        const double rate = 1.0 + cfg.sro_ppm * 1e-6;
        std::vector<cplx> z(y.size());
        for (std::int64_t t = 0; t < n; ++t) {
            const double pos = t * rate;
            std::int64_t lo = static_cast<std::int64_t>(std::floor(pos));
            if (lo >= n - 1) lo = n - 2;  // hold at the edge for tiny overruns
            if (lo < 0) lo = 0;
            const double frac = pos - lo;
            z[static_cast<std::size_t>(t)] =
                (1.0 - frac) * y[static_cast<std::size_t>(lo)] +
                frac * y[static_cast<std::size_t>(lo + 1)];
        }
        y = std::move(z);
    }

    if (cfg.cfo != 0.0) {
        for (std::int64_t t = 0; t < n; ++t) {
            const double arg = 2.0 * kPi * cfg.cfo * t;
            y[static_cast<std::size_t>(t)] *= cplx(std::cos(arg), std::sin(arg));
        }
    }
    if (cfg.phase != 0.0) {
        const cplx rot(std::cos(cfg.phase), std::sin(cfg.phase));
        for (auto& v : y) v *= rot;
    }
    return y;
}

std::vector<cplx> add_awgn(const std::vector<cplx>& x, double snr_db, Rng& rng) {
    if (std::isinf(snr_db) && snr_db > 0.0) return x;
    if (x.empty()) return x;
    double sig_power = 0.0;
    for (const auto& v : x) sig_power += std::norm(v);
    sig_power /= static_cast<double>(x.size());
    const double noise_power = sig_power / std::pow(10.0, snr_db / 10.0);
    const double sigma = std::sqrt(noise_power);
    std::vector<cplx> y(x.size());
    for (std::size_t t = 0; t < x.size(); ++t) y[t] = x[t] + sigma * rng.cnormal();
    return y;
}

}  // namespace modrec
