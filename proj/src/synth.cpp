#include "tcwunet/synth.hpp"

#include <cmath>
#include <random>
#include <string>

namespace tcwunet {

namespace {

constexpr int kSceneRate = 16000;
constexpr double kPi = 3.14159265358979323846;

// Deterministic draws independent of the standard library's distribution
// implementations (same scheme as weight init).
class SceneRng {
public:
    explicit SceneRng(std::uint64_t seed) : rng_(seed) {}

    double uniform() { // [0, 1)
        return static_cast<double>(rng_() >> 11) * 0x1.0p-53;
    }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    std::uint64_t bits() { return rng_(); }

    double gaussian() { // Box-Muller
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
    }

private:
    std::mt19937_64 rng_;
};

double power(const Frame& f) {
    double sum = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i)
        sum += static_cast<double>(f.data()[i]) * f.data()[i];
    return f.size() ? sum / static_cast<double>(f.size()) : 0.0;
}

} // namespace

AudioClip convolve_rir(const AudioClip& dry, const Rir& rir) {
    const int rir_channels = static_cast<int>(rir.taps.size());
    if (rir_channels == 0) throw DataError("convolve_rir: RIR has no channels");
    for (const auto& taps : rir.taps)
        if (taps.empty()) throw DataError("convolve_rir: empty RIR channel");

    const bool broadcast = dry.frame.channels() == 1;
    if (!broadcast && dry.frame.channels() != rir_channels)
        throw ConfigError("convolve_rir: dry has " + std::to_string(dry.frame.channels()) +
                          " channels, RIR has " + std::to_string(rir_channels));

    const int n = dry.frame.length();
    AudioClip out;
    out.sample_rate = dry.sample_rate;
    out.frame = Frame(rir_channels, n);
    for (int c = 0; c < rir_channels; ++c) {
        const auto& h = rir.taps[c];
        const auto x = dry.frame.row(broadcast ? 0 : c);
        auto y = out.frame.row(c);
        const int taps = static_cast<int>(h.size());
        for (int t = 0; t < n; ++t) {
            float acc = 0.0f;
            const int jmax = std::min(taps - 1, t);
            for (int j = 0; j <= jmax; ++j) acc += h[j] * x[t - j];
            y[t] = acc;
        }
    }
    return out;
}

AudioClip mix_at_snr(const AudioClip& reverberant, const AudioClip& noise, double snr_db,
                     std::size_t noise_offset) {
    if (reverberant.sample_rate != noise.sample_rate)
        throw ConfigError("mix_at_snr: sample rates differ");
    if (reverberant.frame.channels() != noise.frame.channels())
        throw ConfigError("mix_at_snr: channel counts differ");
    const int n = reverberant.frame.length();
    if (noise_offset + n > static_cast<std::size_t>(noise.frame.length()))
        throw ConfigError("mix_at_snr: noise does not cover the signal span");

    const double p_signal = power(reverberant.frame);
    double p_noise = 0.0;
    for (int c = 0; c < noise.frame.channels(); ++c) {
        const auto row = noise.frame.row(c);
        for (int t = 0; t < n; ++t) {
            const double v = row[noise_offset + t];
            p_noise += v * v;
        }
    }
    p_noise /= static_cast<double>(n) * noise.frame.channels();

    if (p_signal == 0.0) throw DataError("mix_at_snr: silent signal, SNR undefined");
    if (p_noise == 0.0) throw DataError("mix_at_snr: silent noise, SNR undefined");

    const double gain = std::sqrt(p_signal / (p_noise * std::pow(10.0, snr_db / 10.0)));

    AudioClip out;
    out.sample_rate = reverberant.sample_rate;
    out.frame = Frame(reverberant.frame.channels(), n);
    for (int c = 0; c < out.frame.channels(); ++c) {
        const auto sig = reverberant.frame.row(c);
        const auto nz = noise.frame.row(c);
        auto dst = out.frame.row(c);
        for (int t = 0; t < n; ++t)
            dst[t] = sig[t] + static_cast<float>(gain) * nz[noise_offset + t];
    }
    return out;
}

Scene synth_scene(std::uint64_t seed, double duration_s, int channels, double snr_db) {
    if (channels < 1) throw ConfigError("synth_scene: channels must be positive");
    const long long length_ll = std::llround(duration_s * kSceneRate);
    if (length_ll < 512)
        throw DataError("synth_scene: degenerate duration, need at least 512 samples");
    const int length = static_cast<int>(length_ll);

    SceneRng rng(seed);

    // Speech-like source: drifting fundamental, decaying harmonics, slow
    // syllabic amplitude envelope.
    AudioClip clean;
    clean.sample_rate = kSceneRate;
    clean.frame = Frame(1, length);
    {
        const double f0 = rng.uniform(120.0, 220.0);
        const double drift = rng.uniform(2.0, 8.0);
        const double syllable_hz = rng.uniform(2.0, 5.0);
        double phase[5];
        for (auto& p : phase) p = rng.uniform(0.0, 2.0 * kPi);
        auto row = clean.frame.row(0);
        float peak = 0.0f;
        for (int t = 0; t < length; ++t) {
            const double time = static_cast<double>(t) / kSceneRate;
            const double f = f0 + drift * std::sin(2.0 * kPi * 0.7 * time);
            const double env = 0.5 * (1.0 - std::cos(2.0 * kPi * syllable_hz * time));
            double v = 0.0;
            for (int h = 1; h <= 5; ++h)
                v += std::sin(2.0 * kPi * f * h * time + phase[h - 1]) / h;
            row[t] = static_cast<float>(env * v);
            peak = std::max(peak, std::abs(row[t]));
        }
        if (peak > 0.0f)
            for (int t = 0; t < length; ++t) row[t] = 0.5f * row[t] / peak;
    }

    // Sparse random RIR per channel: a unit direct tap plus decaying
    // reflections, different delays per microphone.
    Rir rir;
    rir.taps.resize(channels);
    for (int c = 0; c < channels; ++c) {
        const int direct = 2 * c + static_cast<int>(rng.bits() % 4);
        int max_delay = direct;
        std::vector<std::pair<int, float>> sparse{{direct, 1.0f}};
        for (int r = 0; r < 8; ++r) {
            const int delay = direct + 8 + static_cast<int>(rng.bits() % 240);
            const float sign = (rng.bits() & 1) ? 1.0f : -1.0f;
            const float amp =
                sign * 0.6f * static_cast<float>(std::exp(-delay / 120.0));
            sparse.emplace_back(delay, amp);
            max_delay = std::max(max_delay, delay);
        }
        rir.taps[c].assign(max_delay + 1, 0.0f);
        for (const auto& [delay, amp] : sparse) rir.taps[c][delay] += amp;
    }

    const AudioClip reverberant = convolve_rir(clean, rir);

    // White noise plus a mains-style hum, longer than the signal so the mix
    // crops it from a seeded offset.
    AudioClip noise;
    noise.sample_rate = kSceneRate;
    const int noise_len = length + 4096;
    noise.frame = Frame(channels, noise_len);
    for (int c = 0; c < channels; ++c) {
        const double hum_gain = rng.uniform(0.05, 0.2);
        const double hum_phase = rng.uniform(0.0, 2.0 * kPi);
        auto row = noise.frame.row(c);
        for (int t = 0; t < noise_len; ++t) {
            const double time = static_cast<double>(t) / kSceneRate;
            row[t] = static_cast<float>(rng.gaussian() +
                                        hum_gain * std::sin(2.0 * kPi * 50.0 * time +
                                                            hum_phase));
        }
    }
    const std::size_t offset = static_cast<std::size_t>(rng.bits() % 4097);

    AudioClip mixture = mix_at_snr(reverberant, noise, snr_db, offset);

    float peak = 0.0f;
    for (std::size_t i = 0; i < mixture.frame.size(); ++i)
        peak = std::max(peak, std::abs(mixture.frame.data()[i]));
    if (peak == 0.0f) throw DataError("synth_scene: silent mixture");
    const float gain = 0.9f / peak;
    for (std::size_t i = 0; i < mixture.frame.size(); ++i) mixture.frame.data()[i] *= gain;

    Scene scene;
    scene.mixture = std::move(mixture);
    scene.reference.sample_rate = kSceneRate;
    scene.reference.frame = Frame(1, length);
    for (int t = 0; t < length; ++t)
        scene.reference.frame.at(0, t) = gain * reverberant.frame.at(0, t);
    scene.peak_gain = gain;
    scene.snr_db = snr_db;
    return scene;
}

} // namespace tcwunet
