#include <doctest.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <vector>

#include "tcwunet/wav.hpp"

using namespace tcwunet;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
    return fs::temp_directory_path() / name;
}

AudioClip random_clip(int channels, int length, int rate, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<float> dist(-0.9f, 0.9f);
    AudioClip clip;
    clip.sample_rate = rate;
    clip.frame = Frame(channels, length);
    for (std::size_t i = 0; i < clip.frame.size(); ++i) clip.frame.data()[i] = dist(rng);
    return clip;
}

void write_bytes(const fs::path& p, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

} // namespace

TEST_CASE("float32 WAV round-trips sample-exactly") {
    const AudioClip clip = random_clip(3, 777, 16000, 1);
    const fs::path p = temp_file("roundtrip_f32.wav");
    write_wav(p, clip, WavEncoding::Float32);
    const AudioClip back = read_wav(p);
    CHECK(back.sample_rate == 16000);
    CHECK(back.frame == clip.frame);
    fs::remove(p);
}

TEST_CASE("pcm16 WAV round-trips quantization-exactly") {
    const AudioClip clip = random_clip(2, 500, 44100, 2);
    const fs::path p = temp_file("roundtrip_pcm16.wav");
    write_wav(p, clip, WavEncoding::Pcm16);
    const AudioClip once = read_wav(p);
    // A second cycle through the quantizer must be a fixed point.
    write_wav(p, once, WavEncoding::Pcm16);
    const AudioClip twice = read_wav(p);
    CHECK(once.frame == twice.frame);
    // And quantization error is bounded by half a step.
    for (std::size_t i = 0; i < clip.frame.size(); ++i)
        CHECK(std::abs(once.frame.data()[i] - clip.frame.data()[i]) <= 0.5f / 32768.0f);
    fs::remove(p);
}

TEST_CASE("pcm16 scale convention maps -32768 to -1") {
    AudioClip clip;
    clip.sample_rate = 8000;
    clip.frame = Frame(1, 3);
    clip.frame.at(0, 0) = -1.0f;
    clip.frame.at(0, 1) = 0.0f;
    clip.frame.at(0, 2) = 0.5f;
    const fs::path p = temp_file("pcm16_scale.wav");
    write_wav(p, clip, WavEncoding::Pcm16);
    const AudioClip back = read_wav(p);
    CHECK(back.frame.at(0, 0) == -1.0f); // -32768 / 32768
    CHECK(back.frame.at(0, 1) == 0.0f);
    CHECK(back.frame.at(0, 2) == doctest::Approx(0.5f).epsilon(1e-4));
    fs::remove(p);
}

TEST_CASE("8-channel 16 kHz header fields survive") {
    const AudioClip clip = random_clip(8, 128, 16000, 3);
    const fs::path p = temp_file("eight_ch.wav");
    write_wav(p, clip, WavEncoding::Float32);
    const AudioClip back = read_wav(p);
    CHECK(back.frame.channels() == 8);
    CHECK(back.sample_rate == 16000);
    CHECK(back.frame.length() == 128);
    fs::remove(p);
}

TEST_CASE("malformed, unsupported and truncated files raise distinct errors") {
    const fs::path p = temp_file("broken.wav");
    const AudioClip clip = random_clip(1, 64, 16000, 4);
    write_wav(p, clip, WavEncoding::Pcm16);
    std::vector<std::uint8_t> good;
    {
        std::ifstream in(p, std::ios::binary);
        good.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    }

    SUBCASE("not RIFF") {
        auto bad = good;
        bad[0] = 'X';
        write_bytes(p, bad);
        CHECK_THROWS_AS(read_wav(p), WavFormatError);
    }
    SUBCASE("not WAVE") {
        auto bad = good;
        bad[8] = 'X';
        write_bytes(p, bad);
        CHECK_THROWS_AS(read_wav(p), WavFormatError);
    }
    SUBCASE("unsupported bit depth") {
        auto bad = good;
        bad[34] = 8; // bits_per_sample low byte inside fmt
        write_bytes(p, bad);
        CHECK_THROWS_AS(read_wav(p), WavUnsupportedError);
    }
    SUBCASE("unsupported codec id") {
        auto bad = good;
        bad[20] = 7; // mu-law
        write_bytes(p, bad);
        CHECK_THROWS_AS(read_wav(p), WavUnsupportedError);
    }
    SUBCASE("truncated data") {
        auto bad = good;
        bad.resize(bad.size() - 10);
        write_bytes(p, bad);
        CHECK_THROWS_AS(read_wav(p), WavTruncatedError);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(read_wav(temp_file("nope.wav")), IoError);
    }
    fs::remove(p);
}

TEST_CASE("reader skips unknown chunks before data") {
    // RIFF with a LIST chunk wedged between fmt and data.
    const fs::path p = temp_file("listchunk.wav");
    const AudioClip clip = random_clip(1, 4, 16000, 5);
    write_wav(p, clip, WavEncoding::Float32);
    std::vector<std::uint8_t> bytes;
    {
        std::ifstream in(p, std::ios::binary);
        bytes.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    }
    // Insert "LIST" + size 4 + payload right after the fmt chunk (ends at 36).
    const std::vector<std::uint8_t> list = {'L', 'I', 'S', 'T', 4, 0, 0, 0, 'I', 'N', 'F', 'O'};
    bytes.insert(bytes.begin() + 36, list.begin(), list.end());
    const std::uint32_t riff = static_cast<std::uint32_t>(bytes.size()) - 8;
    bytes[4] = riff & 0xff;
    bytes[5] = (riff >> 8) & 0xff;
    bytes[6] = (riff >> 16) & 0xff;
    bytes[7] = (riff >> 24) & 0xff;
    write_bytes(p, bytes);

    const AudioClip back = read_wav(p);
    CHECK(back.frame == clip.frame);
    fs::remove(p);
}

TEST_CASE("write_wav rejects bad clips") {
    AudioClip clip = random_clip(1, 8, 16000, 6);
    clip.sample_rate = 0;
    CHECK_THROWS_AS(write_wav(temp_file("bad.wav"), clip, WavEncoding::Pcm16), DataError);
    clip.sample_rate = 16000;
    clip.frame.at(0, 0) = std::numeric_limits<float>::quiet_NaN();
    CHECK_THROWS_AS(write_wav(temp_file("bad.wav"), clip, WavEncoding::Float32), DataError);
}
