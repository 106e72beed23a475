#pragma once

#include <cstdint>
#include <vector>

#include "tcwunet/model.hpp"

namespace tcwunet {

struct StreamConfig {
    int chunk_len = 512; // 32 ms at 16 kHz; must be a multiple of 2^num_levels
    int sample_rate = 16000;
};

// One live enhancement stream: an input framer plus the ordered per-layer
// history caches. Pushed samples accumulate until a full chunk is available;
// each full chunk runs one forward pass that consumes and updates the caches
// in graph order, so the concatenated output equals offline inference on the
// whole signal, elementwise.
//
// A StreamState services exactly one logical stream and its calls must be
// serialized; the referenced ModelWeights are immutable and may back any
// number of concurrent streams.
class StreamState {
public:
    StreamState(const ModelWeights& model, StreamConfig cfg);

    // Appends samples; returns the enhanced mono output for every chunk
    // completed by this call (possibly empty). Output sample t is produced by
    // the call that supplies input sample ceil((t+1)/chunk_len)*chunk_len - 1.
    Frame push(const Frame& samples);

    // Pads the pending remainder to a full chunk, processes it, and returns
    // only the samples corresponding to real input. The stream is finished
    // afterwards: push and flush throw StateError until reset.
    Frame flush(float pad_value = 0.0f);

    // Returns the stream to the new_stream state: zero caches, empty framer.
    void reset();

    // Deterministic byte snapshot: framer contents and counters first, then
    // every cache tensor in graph order, floats little-endian.
    std::vector<std::uint8_t> snapshot() const;

    const StreamConfig& config() const { return cfg_; }
    const CacheStack& caches() const { return caches_; }
    int pending() const { return pending_len_; }
    std::uint64_t emitted() const { return emitted_; }
    bool finished() const { return finished_; }

private:
    Frame take_chunk(const float* const* rows, int offset, int take);
    void run_pending_chunk(std::vector<float>& out);

    const ModelWeights* model_;
    StreamConfig cfg_;
    CacheStack caches_;
    std::vector<float> framer_; // channels x chunk_len, first pending_len_ valid
    int pending_len_ = 0;
    std::uint64_t emitted_ = 0;
    bool finished_ = false;
};

StreamState new_stream(const ModelWeights& model, StreamConfig cfg);

// Runs offline and chunked inference on the same input and returns the
// maximum elementwise absolute difference. Zero by construction unless an
// implementation change reorders per-sample arithmetic.
double verify_streaming_equivalence(const ModelWeights& model, const Frame& input,
                                    int chunk_len);

} // namespace tcwunet
