// tcwunet command-line tool: enhance WAV files offline or streamed, generate
// synthetic fixtures, verify streaming equivalence, benchmark RTF, and manage
// TCWU weight containers.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "tcwunet/metrics.hpp"
#include "tcwunet/model.hpp"
#include "tcwunet/streaming.hpp"
#include "tcwunet/synth.hpp"
#include "tcwunet/wav.hpp"
#include "tcwunet/weights_io.hpp"

namespace fs = std::filesystem;
using namespace tcwunet;

namespace {

// Stable, documented exit codes (CLI11 itself returns 1 on usage errors).
enum ExitCode : int {
    kOk = 0,
    kConfigError = 2,
    kDataError = 3,
    kWeightsError = 4,
    kIoError = 5,
    kVerifyFailed = 6,
    kStateError = 7,
};

constexpr double kVerifyThreshold = 1e-5;
constexpr double kPublishedParamMillions = 8.31; // reported size of the original system

// Key=value run manifest, printed and optionally written next to outputs.
class Manifest {
public:
    void add(const std::string& key, const std::string& value) {
        lines_ += key + "=" + value + "\n";
    }
    void add(const std::string& key, long long value) {
        add(key, std::to_string(value));
    }
    void add(const std::string& key, double value) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.9g", value);
        add(key, std::string(buf));
    }

    void print() const { std::cout << lines_; }
    void write(const fs::path& path) const {
        std::ofstream out(path, std::ios::trunc);
        if (!out) throw IoError("cannot write manifest " + path.string());
        out << lines_;
    }

private:
    std::string lines_;
};

Frame random_input(int channels, int length, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Frame f(channels, length);
    for (std::size_t i = 0; i < f.size(); ++i) {
        const float u = static_cast<float>(rng() >> 40) * 0x1.0p-24f;
        f.data()[i] = 2.0f * u - 1.0f;
    }
    return f;
}

ModelConfig config_from_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config " + path.string() + ": " + e.what());
    }
    ModelConfig c;
    try {
        for (const auto& [key, value] : doc.items()) {
            if (key == "input_channels") c.input_channels = value.get<int>();
            else if (key == "num_levels") c.num_levels = value.get<int>();
            else if (key == "encoder_kernel") c.encoder_kernel = value.get<int>();
            else if (key == "decoder_kernel") c.decoder_kernel = value.get<int>();
            else if (key == "channel_ladder") c.channel_ladder = value.get<std::vector<int>>();
            else if (key == "bottleneck_channels") c.bottleneck_channels = value.get<int>();
            else if (key == "dilations") c.dilations = value.get<std::vector<int>>();
            else if (key == "bn_eps") c.bn_eps = value.get<float>();
            else throw ConfigError("config " + path.string() + ": unknown key " + key);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config " + path.string() + ": " + e.what());
    }
    require_valid(c);
    return c;
}

ModelWeights model_from_options(const std::string& weights_path, std::uint64_t seed) {
    if (!weights_path.empty()) return load_weights(weights_path);
    return init_random(ModelConfig{}, seed);
}

std::uint64_t fnv1a(std::span<const float> values) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    const auto* bytes = reinterpret_cast<const std::uint8_t*>(values.data());
    for (std::size_t i = 0; i < values.size() * sizeof(float); ++i) {
        hash ^= bytes[i];
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

struct EnhanceOptions {
    std::string input, weights, output;
    std::string mode = "stream";
    int chunk = 512;
    int push = 640;
    std::string encoding = "float32";
};

int cmd_enhance(const EnhanceOptions& opt) {
    const ModelWeights model = load_weights(opt.weights);
    const AudioClip clip = read_wav(opt.input);
    if (clip.frame.channels() != model.config.input_channels)
        throw DataError("enhance: input has " + std::to_string(clip.frame.channels()) +
                        " channels, model expects " +
                        std::to_string(model.config.input_channels));

    const int n = clip.frame.length();
    Manifest manifest;
    manifest.add("command", std::string("enhance"));
    manifest.add("input", opt.input);
    manifest.add("weights", opt.weights);
    manifest.add("output", opt.output);
    manifest.add("mode", opt.mode);
    manifest.add("sample_rate", static_cast<long long>(clip.sample_rate));
    manifest.add("input_channels", static_cast<long long>(clip.frame.channels()));
    manifest.add("input_samples", static_cast<long long>(n));

    Frame enhanced;
    const auto t0 = std::chrono::steady_clock::now();
    if (opt.mode == "offline") {
        // Zero-pad to the block size, run once, truncate; identical to the
        // streamed result on the real samples by causality.
        const int block = model.config.min_chunk_len();
        const int padded = ((n + block - 1) / block) * block;
        Frame x(clip.frame.channels(), padded);
        for (int c = 0; c < clip.frame.channels(); ++c)
            std::copy(clip.frame.row(c).begin(), clip.frame.row(c).end(), x.row(c).begin());
        const Frame y = forward_offline(model, x);
        enhanced = Frame(1, n);
        std::copy(y.row(0).begin(), y.row(0).begin() + n, enhanced.row(0).begin());
        manifest.add("padded_samples", static_cast<long long>(padded));
    } else {
        StreamState stream(model, StreamConfig{opt.chunk, clip.sample_rate});
        std::vector<float> out;
        out.reserve(static_cast<std::size_t>(n));
        for (int pos = 0; pos < n; pos += opt.push) {
            const int take = std::min(opt.push, n - pos);
            Frame piece(clip.frame.channels(), take);
            for (int c = 0; c < clip.frame.channels(); ++c)
                std::copy(clip.frame.row(c).begin() + pos,
                          clip.frame.row(c).begin() + pos + take, piece.row(c).begin());
            const Frame y = stream.push(piece);
            out.insert(out.end(), y.row(0).begin(), y.row(0).end());
        }
        const Frame tail = stream.flush();
        out.insert(out.end(), tail.row(0).begin(), tail.row(0).end());
        enhanced = Frame(1, static_cast<int>(out.size()), std::move(out));
        manifest.add("chunk", static_cast<long long>(opt.chunk));
        manifest.add("push", static_cast<long long>(opt.push));
    }
    const double seconds = std::chrono::duration<double>(
        std::chrono::steady_clock::now() - t0).count();

    AudioClip result;
    result.sample_rate = clip.sample_rate;
    result.frame = std::move(enhanced);
    write_wav(opt.output, result,
              opt.encoding == "pcm16" ? WavEncoding::Pcm16 : WavEncoding::Float32);

    manifest.add("output_samples", static_cast<long long>(result.frame.length()));
    manifest.add("processing_seconds", seconds);
    manifest.add("rtf", rtf(seconds, clip.duration_seconds()));
    manifest.write(opt.output + ".manifest");
    manifest.print();
    return kOk;
}

struct VerifyOptions {
    std::string weights;
    std::uint64_t seed = 42;
    int len = 16384;
    int chunk = 512;
};

int cmd_verify(const VerifyOptions& opt) {
    const ModelWeights model = model_from_options(opt.weights, opt.seed);
    const Frame input =
        random_input(model.config.input_channels, opt.len, opt.seed + 0x9e3779b9ULL);
    const double diff = verify_streaming_equivalence(model, input, opt.chunk);
    const bool pass = diff <= kVerifyThreshold;

    Manifest manifest;
    manifest.add("command", std::string("verify"));
    manifest.add("seed", static_cast<long long>(opt.seed));
    manifest.add("len", static_cast<long long>(opt.len));
    manifest.add("chunk", static_cast<long long>(opt.chunk));
    manifest.add("max_abs_diff", diff);
    manifest.add("threshold", kVerifyThreshold);
    manifest.add("verdict", std::string(pass ? "pass" : "fail"));
    manifest.print();
    return pass ? kOk : kVerifyFailed;
}

struct BenchOptions {
    std::string weights;
    std::uint64_t seed = 42;
    double duration = 8.0;
    int chunk = 512;
    int repeat = 3;
};

int cmd_bench(const BenchOptions& opt) {
    if (opt.duration < 1.0) throw ConfigError("bench: duration must be at least 1 s");
    const ModelWeights model = model_from_options(opt.weights, opt.seed);
    const int rate = 16000;
    const int chunks = std::max(1, static_cast<int>(opt.duration * rate) / opt.chunk);
    const int len = chunks * opt.chunk;
    const Frame input =
        random_input(model.config.input_channels, len, opt.seed + 0x9e3779b9ULL);

    StreamState stream(model, StreamConfig{opt.chunk, rate});

    auto run_once = [&](bool timed, std::vector<double>* chunk_seconds) {
        stream.reset();
        double total = 0.0;
        for (int i = 0; i < chunks; ++i) {
            Frame piece(input.channels(), opt.chunk);
            for (int c = 0; c < input.channels(); ++c)
                std::copy(input.row(c).begin() + static_cast<std::size_t>(i) * opt.chunk,
                          input.row(c).begin() + static_cast<std::size_t>(i + 1) * opt.chunk,
                          piece.row(c).begin());
            const auto t0 = std::chrono::steady_clock::now();
            stream.push(piece);
            const double dt = std::chrono::duration<double>(
                std::chrono::steady_clock::now() - t0).count();
            total += dt;
            if (timed && chunk_seconds) chunk_seconds->push_back(dt);
        }
        return total;
    };

    run_once(false, nullptr); // warm-up

    std::vector<double> rtfs;
    std::vector<double> chunk_seconds;
    const double audio_seconds = static_cast<double>(len) / rate;
    for (int r = 0; r < opt.repeat; ++r)
        rtfs.push_back(rtf(run_once(true, &chunk_seconds), audio_seconds));

    std::sort(rtfs.begin(), rtfs.end());
    std::sort(chunk_seconds.begin(), chunk_seconds.end());
    auto percentile = [&](double p) {
        const std::size_t idx = std::min(chunk_seconds.size() - 1,
                                         static_cast<std::size_t>(p * chunk_seconds.size()));
        return chunk_seconds[idx] * 1000.0;
    };
    const double median_rtf = rtfs[rtfs.size() / 2];

    Manifest manifest;
    manifest.add("command", std::string("bench"));
    manifest.add("seed", static_cast<long long>(opt.seed));
    manifest.add("chunk", static_cast<long long>(opt.chunk));
    manifest.add("repeat", static_cast<long long>(opt.repeat));
    manifest.add("audio_seconds", audio_seconds);
    manifest.add("params", param_count(model));
    manifest.add("params_millions", param_count(model) / 1e6);
    manifest.add("published_size_millions", kPublishedParamMillions);
    manifest.add("params_delta_millions",
                 param_count(model) / 1e6 - kPublishedParamMillions);
    manifest.add("rtf_median", median_rtf);
    manifest.add("rtf_min", rtfs.front());
    manifest.add("chunk_ms", 1000.0 * opt.chunk / rate);
    manifest.add("latency_p50_ms", percentile(0.50));
    manifest.add("latency_p95_ms", percentile(0.95));
    manifest.add("latency_p99_ms", percentile(0.99));
    manifest.print();
    return kOk;
}

struct SynthOptions {
    std::string out_dir;
    std::uint64_t seed = 7;
    double duration = 2.0;
    double snr_db = 10.0;
    int channels = 8;
};

int cmd_synth(const SynthOptions& opt) {
    const Scene scene = synth_scene(opt.seed, opt.duration, opt.channels, opt.snr_db);
    fs::create_directories(opt.out_dir);
    const fs::path mixture_path = fs::path(opt.out_dir) / "mixture.wav";
    const fs::path reference_path = fs::path(opt.out_dir) / "reference.wav";
    write_wav(mixture_path, scene.mixture, WavEncoding::Float32);
    write_wav(reference_path, scene.reference, WavEncoding::Float32);

    Manifest manifest;
    manifest.add("command", std::string("synth"));
    manifest.add("seed", static_cast<long long>(opt.seed));
    manifest.add("duration_s", opt.duration);
    manifest.add("snr_db", opt.snr_db);
    manifest.add("channels", static_cast<long long>(opt.channels));
    manifest.add("sample_rate", static_cast<long long>(scene.mixture.sample_rate));
    manifest.add("samples", static_cast<long long>(scene.mixture.frame.length()));
    manifest.add("peak_gain", static_cast<double>(scene.peak_gain));
    manifest.add("mixture", mixture_path.string());
    manifest.add("reference", reference_path.string());
    manifest.write(fs::path(opt.out_dir) / "manifest.txt");
    manifest.print();
    return kOk;
}

struct InitOptions {
    std::string out;
    std::uint64_t seed = 42;
    std::string config;
};

int cmd_init_weights(const InitOptions& opt) {
    const ModelConfig config =
        opt.config.empty() ? ModelConfig{} : config_from_json(opt.config);
    const ModelWeights model = init_random(config, opt.seed);
    save_weights(opt.out, model);

    Manifest manifest;
    manifest.add("command", std::string("init-weights"));
    manifest.add("seed", static_cast<long long>(opt.seed));
    manifest.add("output", opt.out);
    manifest.add("params", param_count(model));
    manifest.print();
    return kOk;
}

int cmd_inspect(const std::string& weights_path) {
    const ModelWeights model = load_weights(weights_path);
    std::cout << "config num_levels=" << model.config.num_levels
              << " input_channels=" << model.config.input_channels
              << " encoder_kernel=" << model.config.encoder_kernel
              << " decoder_kernel=" << model.config.decoder_kernel
              << " bottleneck_channels=" << model.config.bottleneck_channels << "\n";
    long long tensors = 0;
    for_each_tensor(model, [&](const std::string& name, const std::vector<int>& shape,
                               std::span<const float> values) {
        std::cout << name << " ";
        for (std::size_t i = 0; i < shape.size(); ++i)
            std::cout << (i ? "x" : "") << shape[i];
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%016llx",
                      static_cast<unsigned long long>(fnv1a(values)));
        std::cout << " fnv1a:" << buf << "\n";
        ++tensors;
    });
    std::cout << "tensors=" << tensors << "\n";
    std::cout << "params=" << param_count(model) << "\n";
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Streaming TC Wave-U-Net speech enhancement engine"};
    app.require_subcommand(1);

    EnhanceOptions enhance;
    auto* enhance_cmd = app.add_subcommand("enhance", "Enhance a WAV file");
    enhance_cmd->add_option("--input", enhance.input, "Input WAV")->required();
    enhance_cmd->add_option("--weights", enhance.weights, "TCWU weight container")->required();
    enhance_cmd->add_option("--output", enhance.output, "Output WAV")->required();
    enhance_cmd->add_option("--mode", enhance.mode, "offline or stream")
        ->check(CLI::IsMember({"offline", "stream"}));
    enhance_cmd->add_option("--chunk", enhance.chunk, "Internal chunk length (samples)");
    enhance_cmd->add_option("--push", enhance.push,
                            "Samples per push in stream mode (640 = 40 ms at 16 kHz)");
    enhance_cmd->add_option("--encoding", enhance.encoding, "Output encoding")
        ->check(CLI::IsMember({"float32", "pcm16"}));

    VerifyOptions verify;
    auto* verify_cmd =
        app.add_subcommand("verify", "Check streamed output against offline inference");
    verify_cmd->add_option("--weights", verify.weights, "TCWU weight container");
    verify_cmd->add_option("--seed", verify.seed, "Random model seed when no weights given");
    verify_cmd->add_option("--len", verify.len, "Test signal length (samples)");
    verify_cmd->add_option("--chunk", verify.chunk, "Streaming chunk length");

    BenchOptions bench;
    auto* bench_cmd = app.add_subcommand("bench", "Measure streaming real-time factor");
    bench_cmd->add_option("--weights", bench.weights, "TCWU weight container");
    bench_cmd->add_option("--seed", bench.seed, "Random model seed when no weights given");
    bench_cmd->add_option("--duration", bench.duration, "Audio seconds per run");
    bench_cmd->add_option("--chunk", bench.chunk, "Streaming chunk length");
    bench_cmd->add_option("--repeat", bench.repeat, "Timed runs");

    SynthOptions synth;
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic test scene");
    synth_cmd->add_option("--out", synth.out_dir, "Output directory")->required();
    synth_cmd->add_option("--seed", synth.seed, "Scene seed");
    synth_cmd->add_option("--duration", synth.duration, "Seconds");
    synth_cmd->add_option("--snr", synth.snr_db, "Mixture SNR in dB");
    synth_cmd->add_option("--channels", synth.channels, "Microphone channels");

    InitOptions init;
    auto* init_cmd = app.add_subcommand("init-weights", "Write a seeded TCWU container");
    init_cmd->add_option("--out", init.out, "Output file")->required();
    init_cmd->add_option("--seed", init.seed, "Init seed");
    init_cmd->add_option("--config", init.config, "Model config JSON");

    std::string inspect_path;
    auto* inspect_cmd = app.add_subcommand("inspect", "List container tensors");
    inspect_cmd->add_option("--weights", inspect_path, "TCWU weight container")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (enhance_cmd->parsed()) return cmd_enhance(enhance);
        if (verify_cmd->parsed()) return cmd_verify(verify);
        if (bench_cmd->parsed()) return cmd_bench(bench);
        if (synth_cmd->parsed()) return cmd_synth(synth);
        if (init_cmd->parsed()) return cmd_init_weights(init);
        if (inspect_cmd->parsed()) return cmd_inspect(inspect_path);
    } catch (const WeightsError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kWeightsError;
    } catch (const WavFormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kIoError;
    } catch (const WavUnsupportedError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kIoError;
    } catch (const WavTruncatedError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kIoError;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kIoError;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kDataError;
    } catch (const StateError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kStateError;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kConfigError;
    } catch (const ContractError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kConfigError;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kStateError;
    }
    return kOk;
}
