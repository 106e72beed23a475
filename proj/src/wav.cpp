#include "tcwunet/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <vector>

#include "le_bytes.hpp"

namespace tcwunet {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;

struct FmtChunk {
    std::uint16_t audio_format = 0;
    std::uint16_t channels = 0;
    std::uint32_t sample_rate = 0;
    std::uint16_t bits_per_sample = 0;
};

void append_tag(std::vector<std::uint8_t>& out, const char tag[4]) {
    out.insert(out.end(), tag, tag + 4);
}

} // namespace

AudioClip read_wav(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());

    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
        throw WavFormatError(path.string() + ": not a RIFF/WAVE file");

    FmtChunk fmt;
    bool have_fmt = false;
    const std::uint8_t* data = nullptr;
    std::uint64_t data_size = 0;

    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const char* id = reinterpret_cast<const char*>(bytes.data() + pos);
        const std::uint32_t size = detail::get_u32_le(bytes.data() + pos + 4);
        const std::size_t body = pos + 8;

        if (std::memcmp(id, "fmt ", 4) == 0) {
            if (size < 16 || body + 16 > bytes.size())
                throw WavFormatError(path.string() + ": bad fmt chunk");
            fmt.audio_format = detail::get_u16_le(bytes.data() + body);
            fmt.channels = detail::get_u16_le(bytes.data() + body + 2);
            fmt.sample_rate = detail::get_u32_le(bytes.data() + body + 4);
            fmt.bits_per_sample = detail::get_u16_le(bytes.data() + body + 14);
            have_fmt = true;
        } else if (std::memcmp(id, "data", 4) == 0) {
            if (body + size > bytes.size())
                throw WavTruncatedError(path.string() + ": data chunk declares " +
                                        std::to_string(size) + " bytes but only " +
                                        std::to_string(bytes.size() - body) + " remain");
            data = bytes.data() + body;
            data_size = size;
            break; // anything after the sample data is irrelevant
        }
        pos = body + size + (size & 1); // chunks are word-aligned
    }

    if (!have_fmt) throw WavFormatError(path.string() + ": missing fmt chunk");
    if (!data) throw WavFormatError(path.string() + ": missing data chunk");
    if (fmt.channels == 0 || fmt.sample_rate == 0)
        throw WavFormatError(path.string() + ": zero channels or sample rate");

    const bool pcm16 = fmt.audio_format == kFormatPcm && fmt.bits_per_sample == 16;
    const bool float32 = fmt.audio_format == kFormatFloat && fmt.bits_per_sample == 32;
    if (!pcm16 && !float32)
        throw WavUnsupportedError(path.string() + ": unsupported encoding (format " +
                                  std::to_string(fmt.audio_format) + ", " +
                                  std::to_string(fmt.bits_per_sample) + " bits)");

    const std::size_t bytes_per_sample = pcm16 ? 2 : 4;
    const std::size_t frame_bytes = bytes_per_sample * fmt.channels;
    if (data_size % frame_bytes != 0)
        throw WavTruncatedError(path.string() + ": data chunk ends mid-frame");
    const std::size_t n_frames = data_size / frame_bytes;

    AudioClip clip;
    clip.sample_rate = static_cast<int>(fmt.sample_rate);
    clip.frame = Frame(fmt.channels, static_cast<int>(n_frames));
    for (std::size_t t = 0; t < n_frames; ++t) {
        const std::uint8_t* p = data + t * frame_bytes;
        for (int c = 0; c < fmt.channels; ++c) {
            float v;
            if (pcm16) {
                const auto s = static_cast<std::int16_t>(detail::get_u16_le(p + 2 * c));
                v = static_cast<float>(s) / 32768.0f;
            } else {
                v = detail::get_f32_le(p + 4 * c);
                if (!std::isfinite(v))
                    throw DataError(path.string() + ": non-finite sample");
            }
            clip.frame.at(c, static_cast<int>(t)) = v;
        }
    }
    return clip;
}

void write_wav(const std::filesystem::path& path, const AudioClip& clip,
               WavEncoding encoding) {
    if (clip.sample_rate <= 0) throw DataError("write_wav: sample_rate must be positive");
    if (clip.frame.channels() < 1) throw DataError("write_wav: clip has no channels");
    for (std::size_t i = 0; i < clip.frame.size(); ++i)
        if (!std::isfinite(clip.frame.data()[i]))
            throw DataError("write_wav: non-finite sample");

    const int channels = clip.frame.channels();
    const int n = clip.frame.length();
    const bool pcm16 = encoding == WavEncoding::Pcm16;
    const std::uint16_t bits = pcm16 ? 16 : 32;
    const std::uint32_t block_align = static_cast<std::uint32_t>(channels) * (bits / 8);
    const std::uint32_t data_size = block_align * static_cast<std::uint32_t>(n);

    std::vector<std::uint8_t> out;
    out.reserve(64 + data_size);
    append_tag(out, "RIFF");
    detail::put_u32_le(out, 0); // patched below
    append_tag(out, "WAVE");

    append_tag(out, "fmt ");
    detail::put_u32_le(out, 16);
    detail::put_u16_le(out, pcm16 ? kFormatPcm : kFormatFloat);
    detail::put_u16_le(out, static_cast<std::uint16_t>(channels));
    detail::put_u32_le(out, static_cast<std::uint32_t>(clip.sample_rate));
    detail::put_u32_le(out, static_cast<std::uint32_t>(clip.sample_rate) * block_align);
    detail::put_u16_le(out, static_cast<std::uint16_t>(block_align));
    detail::put_u16_le(out, bits);

    if (!pcm16) { // fact chunk is standard for non-PCM encodings
        append_tag(out, "fact");
        detail::put_u32_le(out, 4);
        detail::put_u32_le(out, static_cast<std::uint32_t>(n));
    }

    append_tag(out, "data");
    detail::put_u32_le(out, data_size);
    for (int t = 0; t < n; ++t) {
        for (int c = 0; c < channels; ++c) {
            const float v = clip.frame.at(c, t);
            if (pcm16) {
                const float scaled = v * 32768.0f;
                const long r = std::lrintf(std::clamp(scaled, -32768.0f, 32767.0f));
                detail::put_u16_le(out, static_cast<std::uint16_t>(
                                            static_cast<std::int16_t>(r)));
            } else {
                detail::put_f32_le(out, v);
            }
        }
    }

    const std::uint32_t riff_size = static_cast<std::uint32_t>(out.size()) - 8;
    out[4] = static_cast<std::uint8_t>(riff_size & 0xff);
    out[5] = static_cast<std::uint8_t>((riff_size >> 8) & 0xff);
    out[6] = static_cast<std::uint8_t>((riff_size >> 16) & 0xff);
    out[7] = static_cast<std::uint8_t>((riff_size >> 24) & 0xff);

    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw IoError("cannot open " + path.string() + " for writing");
    file.write(reinterpret_cast<const char*>(out.data()),
               static_cast<std::streamsize>(out.size()));
    if (!file) throw IoError("failed writing " + path.string());
}

} // namespace tcwunet
