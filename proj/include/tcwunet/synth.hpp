#pragma once

#include <cstdint>
#include <vector>

#include "tcwunet/wav.hpp"

namespace tcwunet {

// Per-channel room impulse responses.
struct Rir {
    std::vector<std::vector<float>> taps; // one sequence per channel, at least 1 tap
};

// Full causal convolution of the dry signal with each channel's impulse
// response, truncated to the dry length. A mono dry signal is broadcast to
// every RIR channel; otherwise channel counts must match.
AudioClip convolve_rir(const AudioClip& dry, const Rir& rir);

// Adds noise rescaled so that 10*log10(P_signal / P_noise) equals snr_db over
// the full span, using a single gain across channels. The noise (from
// noise_offset onward) must cover the signal; the overhang is cropped.
AudioClip mix_at_snr(const AudioClip& reverberant, const AudioClip& noise, double snr_db,
                     std::size_t noise_offset = 0);

struct Scene {
    AudioClip mixture;   // channels x length, peak-normalized to 0.9
    AudioClip reference; // mono reverberant clean target (channel 0), same gain
    float peak_gain = 1.0f;
    double snr_db = 0.0;
};

// Deterministic synthetic test scene: a multi-tone speech-like source,
// per-channel sparse random RIRs, white-plus-tonal noise mixed at snr_db.
// 16 kHz; duration must yield at least 512 samples.
Scene synth_scene(std::uint64_t seed, double duration_s, int channels, double snr_db);

} // namespace tcwunet
