#pragma once

#include <filesystem>

#include "tcwunet/frame.hpp"

namespace tcwunet {

// Sample-rate-annotated multi-channel audio.
struct AudioClip {
    int sample_rate = 0;
    Frame frame;

    double duration_seconds() const {
        return sample_rate > 0 ? static_cast<double>(frame.length()) / sample_rate : 0.0;
    }
};

enum class WavEncoding { Pcm16, Float32 };

// Reads a RIFF/WAVE file holding PCM-16 or IEEE-float-32 samples. PCM-16
// decodes as s / 32768. Throws WavFormatError, WavUnsupportedError or
// WavTruncatedError depending on what is wrong.
AudioClip read_wav(const std::filesystem::path& path);

// Writes a clip. Float32 is sample-exact; PCM-16 rounds to the nearest step
// of the s / 32768 scale with clamping to the int16 range.
void write_wav(const std::filesystem::path& path, const AudioClip& clip,
               WavEncoding encoding);

} // namespace tcwunet
