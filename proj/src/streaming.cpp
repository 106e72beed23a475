#include "tcwunet/streaming.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "le_bytes.hpp"

namespace tcwunet {

StreamState::StreamState(const ModelWeights& model, StreamConfig cfg)
    : model_(&model), cfg_(cfg), caches_(make_cache_stack(model.config)) {
    const int block = model.config.min_chunk_len();
    if (cfg.chunk_len <= 0 || cfg.chunk_len % block != 0)
        throw ConfigError("StreamState: chunk_len must be a positive multiple of " +
                          std::to_string(block) + ", got " + std::to_string(cfg.chunk_len));
    if (cfg.sample_rate <= 0)
        throw ConfigError("StreamState: sample_rate must be positive");
    framer_.assign(static_cast<std::size_t>(model.config.input_channels) * cfg.chunk_len,
                   0.0f);
}

StreamState new_stream(const ModelWeights& model, StreamConfig cfg) {
    return StreamState(model, cfg);
}

void StreamState::run_pending_chunk(std::vector<float>& out) {
    const int channels = model_->config.input_channels;
    Frame chunk(channels, cfg_.chunk_len);
    for (int c = 0; c < channels; ++c)
        std::memcpy(chunk.row(c).data(), framer_.data() + static_cast<std::size_t>(c) * cfg_.chunk_len,
                    sizeof(float) * cfg_.chunk_len);
    const Frame y = forward_chunk(*model_, chunk, caches_);
    out.insert(out.end(), y.row(0).begin(), y.row(0).end());
}

Frame StreamState::push(const Frame& samples) {
    if (finished_)
        throw StateError("StreamState: push after flush; reset the stream first");
    const int channels = model_->config.input_channels;
    if (samples.channels() != channels)
        throw DataError("StreamState: pushed " + std::to_string(samples.channels()) +
                        " channels, model expects " + std::to_string(channels));

    std::vector<float> out;
    int pos = 0;
    while (pos < samples.length()) {
        const int take = std::min(cfg_.chunk_len - pending_len_, samples.length() - pos);
        for (int c = 0; c < channels; ++c)
            std::memcpy(framer_.data() + static_cast<std::size_t>(c) * cfg_.chunk_len +
                            pending_len_,
                        samples.row(c).data() + pos, sizeof(float) * take);
        pending_len_ += take;
        pos += take;
        if (pending_len_ == cfg_.chunk_len) {
            run_pending_chunk(out);
            emitted_ += cfg_.chunk_len;
            pending_len_ = 0;
        }
    }
    const int produced = static_cast<int>(out.size());
    return Frame(1, produced, std::move(out));
}

Frame StreamState::flush(float pad_value) {
    if (finished_)
        throw StateError("StreamState: flush on a finished stream; reset first");
    finished_ = true;
    if (pending_len_ == 0) return Frame(1, 0);

    const int channels = model_->config.input_channels;
    const int real = pending_len_;
    for (int c = 0; c < channels; ++c) {
        float* row = framer_.data() + static_cast<std::size_t>(c) * cfg_.chunk_len;
        std::fill(row + real, row + cfg_.chunk_len, pad_value);
    }
    pending_len_ = cfg_.chunk_len;

    std::vector<float> out;
    run_pending_chunk(out);
    pending_len_ = 0;
    emitted_ += static_cast<std::uint64_t>(real);
    out.resize(static_cast<std::size_t>(real)); // only samples backed by real input
    return Frame(1, real, std::move(out));
}

void StreamState::reset() {
    caches_.reset();
    std::fill(framer_.begin(), framer_.end(), 0.0f);
    pending_len_ = 0;
    emitted_ = 0;
    finished_ = false;
}

std::vector<std::uint8_t> StreamState::snapshot() const {
    const int channels = model_->config.input_channels;
    std::vector<std::uint8_t> bytes;
    detail::put_u32_le(bytes, static_cast<std::uint32_t>(channels));
    detail::put_u32_le(bytes, static_cast<std::uint32_t>(cfg_.chunk_len));
    detail::put_u64_le(bytes, static_cast<std::uint64_t>(pending_len_));
    for (int c = 0; c < channels; ++c)
        detail::put_f32_block_le(bytes,
                                 framer_.data() + static_cast<std::size_t>(c) * cfg_.chunk_len,
                                 static_cast<std::size_t>(pending_len_));
    detail::put_u64_le(bytes, emitted_);
    bytes.push_back(finished_ ? 1 : 0);
    for (const auto& cache : caches_.layers)
        detail::put_f32_block_le(bytes, cache.data().data(), cache.data().size());
    return bytes;
}

double verify_streaming_equivalence(const ModelWeights& model, const Frame& input,
                                    int chunk_len) {
    const Frame offline = forward_offline(model, input);

    StreamState stream(model, StreamConfig{chunk_len, 16000});
    const Frame head = stream.push(input);
    std::vector<float> streamed(head.row(0).begin(), head.row(0).end());
    if (input.length() % chunk_len != 0) {
        const Frame tail = stream.flush();
        streamed.insert(streamed.end(), tail.row(0).begin(), tail.row(0).end());
    }
    if (static_cast<int>(streamed.size()) != offline.length())
        throw Error("verify_streaming_equivalence: streamed length " +
                    std::to_string(streamed.size()) + " != offline length " +
                    std::to_string(offline.length()));

    double max_diff = 0.0;
    const auto ref = offline.row(0);
    for (std::size_t t = 0; t < streamed.size(); ++t)
        max_diff = std::max(max_diff,
                            std::abs(static_cast<double>(ref[t]) - streamed[t]));
    return max_diff;
}

} // namespace tcwunet
