#pragma once

#include <span>
#include <vector>

#include "tcwunet/frame.hpp"

namespace tcwunet {

// Geometry of one dilated causal 1-D convolution.
struct ConvSpec {
    int in_channels = 1;
    int out_channels = 1;
    int kernel_size = 1;
    int dilation = 1;

    // Left-context samples one output sample needs beyond its own position.
    // Equals the training-time padding, so a zero cache reproduces the
    // offline zero-padded computation exactly.
    int history_len() const { return (kernel_size - 1) * dilation; }

    bool operator==(const ConvSpec&) const = default;
};

// Trailing input window of one stateful layer, carried between chunks.
// Freshly constructed (or reset) caches are all zero; after a cached op ran
// on some input, the cache holds the trailing history_len samples of the
// (cache || input) concatenation, per channel.
class LayerCache {
public:
    LayerCache(int channels, int history_len);

    int channels() const { return channels_; }
    int history_len() const { return history_len_; }

    std::span<const float> row(int c) const {
        return {data_.data() + static_cast<std::size_t>(c) * history_len_,
                static_cast<std::size_t>(history_len_)};
    }
    std::span<float> row(int c) {
        return {data_.data() + static_cast<std::size_t>(c) * history_len_,
                static_cast<std::size_t>(history_len_)};
    }
    std::span<const float> data() const { return data_; }

    void reset();

private:
    int channels_ = 0;
    int history_len_ = 0;
    std::vector<float> data_;
};

// Dilated causal convolution with SAME output length. The left context is
// zeros (offline form) or the cache contents (streaming form); a given cache
// is updated to the trailing history of (cache || input). Output sample t
// depends only on input samples <= t. weights are out*in*kernel floats laid
// out [out][in][tap]; tap kernel_size-1 is the current sample.
Frame causal_conv1d(const Frame& input, const ConvSpec& spec,
                    std::span<const float> weights, std::span<const float> bias,
                    LayerCache* cache = nullptr);

// Per-timestep linear map across channels (kernel-size-1 convolution).
// weights are out*in floats laid out [out][in]. Stateless.
Frame pointwise_conv1d(const Frame& input, int out_channels,
                       std::span<const float> weights, std::span<const float> bias);

// Inference-mode batch normalization with frozen statistics:
// out(c,t) = gamma[c] * (in(c,t) - mean[c]) / sqrt(var[c] + eps) + beta[c].
Frame batchnorm_affine(const Frame& input, std::span<const float> gamma,
                       std::span<const float> beta, std::span<const float> running_mean,
                       std::span<const float> running_var, float eps);

// Parametric ReLU with one negative-side slope per channel.
Frame prelu(const Frame& input, std::span<const float> alpha);

// Halves the time dimension by keeping even-indexed samples. Length must be
// even (guaranteed by the chunk-size contract).
Frame decimate2(const Frame& input);

// Causal 2x linear-interpolation upsampling. Even outputs are midpoints of
// the previous and current low-rate sample, odd outputs are the samples
// themselves; the previous sample comes from the one-sample cache, so the op
// has zero look-ahead. The cache is updated to the last input sample.
Frame upsample2_causal(const Frame& input, LayerCache& cache);

// Stacks b's channels after a's. Lengths must match.
Frame concat_channels(const Frame& a, const Frame& b);

} // namespace tcwunet
