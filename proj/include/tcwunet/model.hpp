#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tcwunet/ops.hpp"

namespace tcwunet {

// Hyperparameters of the TC Wave-U-Net graph. Defaults describe the full
// 9-level model: kernel 15 encoder / 5 decoder, channel ladder up to 216,
// 240-channel bottleneck, dilation schedule summing to 129.
struct ModelConfig {
    int input_channels = 8;
    int num_levels = 9;
    int encoder_kernel = 15;
    int decoder_kernel = 5;
    std::vector<int> channel_ladder = {8, 24, 48, 72, 96, 120, 144, 168, 192, 216};
    int bottleneck_channels = 240;
    std::vector<int> dilations = {1, 1, 1, 2, 4, 8, 16, 32, 64};
    float bn_eps = 1e-5f;

    // Smallest processable block: every level must halve to an integer length.
    int min_chunk_len() const { return 1 << num_levels; }

    bool operator==(const ModelConfig&) const = default;
};

struct ConfigCheck {
    std::vector<std::string> errors; // every violation, not just the first
    int min_chunk_len = 0;
    bool ok() const { return errors.empty(); }
};

ConfigCheck validate_config(const ModelConfig& config);

// Throws ConfigError listing every violation when the config is invalid.
void require_valid(const ModelConfig& config);

struct Conv1dParams {
    ConvSpec spec;
    std::vector<float> weight; // out * in * kernel
    std::vector<float> bias;   // out
};

struct PointwiseParams {
    int in_channels = 0;
    int out_channels = 0;
    std::vector<float> weight; // out * in
    std::vector<float> bias;   // out
};

struct BatchNormParams {
    std::vector<float> gamma, beta, running_mean, running_var;
    float eps = 1e-5f;
};

// Residual unit: dilated causal conv, batch norm, PReLU, (dropout = identity
// at inference), pointwise conv, residual add, PReLU. The projection is
// present exactly when in and out channel counts differ.
struct TCBlockParams {
    Conv1dParams conv1;
    BatchNormParams bn1;
    std::vector<float> prelu1_alpha;
    PointwiseParams conv2;
    std::optional<PointwiseParams> residual_proj;
    std::vector<float> prelu_out_alpha;

    int in_channels() const { return conv1.spec.in_channels; }
    int out_channels() const { return conv1.spec.out_channels; }
};

// Gate computed from two equal-length inputs: P = PReLU(k(u) + q(d)),
// mask = sigmoid(mask_conv(P)), output = mask * v(d). All convs pointwise.
struct AttentionParams {
    PointwiseParams k_conv; // on the up-path features u
    PointwiseParams q_conv; // on the skip-path features d
    PointwiseParams v_conv; // on the skip-path features d
    std::vector<float> prelu_alpha;
    PointwiseParams mask_conv;
};

struct DecoderLevelParams {
    PointwiseParams skip_conv;
    AttentionParams attention;
    TCBlockParams tc_block;
};

struct BottleneckParams {
    Conv1dParams conv;
    std::vector<float> prelu_alpha;
};

// Full parameter set of the graph. Immutable after load; shareable across
// threads and streams.
struct ModelWeights {
    ModelConfig config;
    std::vector<TCBlockParams> encoder;
    BottleneckParams bottleneck;
    std::vector<DecoderLevelParams> decoder;
    PointwiseParams noisy_proj; // input reference channel -> final attention width
    AttentionParams final_attention;
    PointwiseParams output_conv;
};

// Correctly shaped, zero-valued parameter set for a valid config.
ModelWeights allocate_weights(const ModelConfig& config);

// Deterministic random initialization: conv weights and biases uniform in
// +-1/sqrt(fan_in) with fan_in = in_channels * kernel_size, batch-norm
// statistics mean 0 / var 1 with gamma 1 / beta 0, PReLU alpha 0.25.
// The draw order is the tensor serialization order; constant tensors
// consume no draws.
ModelWeights init_random(const ModelConfig& config, std::uint64_t seed);

// One TC block. Pass a cache to stream; without one the dilated conv uses
// zero left-padding (the offline form).
Frame tc_block_forward(const Frame& x, const TCBlockParams& params,
                       LayerCache* conv1_cache = nullptr);

// Attention gate on equal-length frames; per-timestep, so streaming-safe.
Frame attention_forward(const Frame& u, const Frame& d, const AttentionParams& params);

// Ordered history caches for every stateful layer: encoder dilated convs,
// the bottleneck conv, then per decoder level the upsampler and the dilated
// conv, in execution order. Layout is a pure function of the config.
struct CacheStack {
    std::vector<LayerCache> layers;

    void reset() {
        for (auto& c : layers) c.reset();
    }
    std::size_t total_floats() const;
};

CacheStack make_cache_stack(const ModelConfig& config);

// Number of dilated-conv caches in a stack built for `config` (the rest are
// one-sample upsampler caches).
int conv_cache_count(const ModelConfig& config);

// One forward pass over a block whose length is a positive multiple of
// 2^num_levels, reading and updating `caches` in graph order. Offline
// inference is the same call on a freshly zeroed stack; chunked inference
// re-uses the stack between calls and matches the offline result
// elementwise because every per-sample arithmetic sequence is identical.
Frame forward_chunk(const ModelWeights& model, const Frame& input, CacheStack& caches);

// Whole-utterance inference: zero caches, single block.
Frame forward_offline(const ModelWeights& model, const Frame& input);

// Encoder stack only (TC blocks + decimation), offline form. Exposed for
// receptive-field analysis.
Frame encoder_forward(const ModelWeights& model, const Frame& input);

struct ReceptiveField {
    long long dilated_stack;    // 1 + (kernel-1) * sum(dilations), rate changes ignored
    long long decimation_aware; // 1 + (kernel-1) * sum(dilations[i] * 2^i)
};

// Both accountings of how far back one encoder output sample can see.
ReceptiveField analytic_receptive_field(const ModelConfig& config);

// Learnable parameter count (batch-norm running statistics excluded).
long long param_count(const ModelWeights& model);

struct TensorShape {
    std::string name;
    std::vector<int> dims;
};

// Visit every tensor (including batch-norm statistics) in serialization
// order with its hierarchical name and shape.
void for_each_tensor(ModelWeights& model,
                     const std::function<void(const std::string&, const std::vector<int>&,
                                              std::span<float>)>& fn);
void for_each_tensor(const ModelWeights& model,
                     const std::function<void(const std::string&, const std::vector<int>&,
                                              std::span<const float>)>& fn);

// Throws WeightsError if any tensor holds NaN or Inf.
void check_finite(const ModelWeights& model);

} // namespace tcwunet
