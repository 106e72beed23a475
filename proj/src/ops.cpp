#include "tcwunet/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

namespace tcwunet {

namespace {

void require(bool cond, const std::string& msg) {
    if (!cond) throw ConfigError(msg);
}

} // namespace

LayerCache::LayerCache(int channels, int history_len)
    : channels_(channels), history_len_(history_len) {
    if (channels <= 0 || history_len < 0)
        throw ConfigError("LayerCache: channels must be positive, history_len non-negative");
    data_.assign(static_cast<std::size_t>(channels) * history_len, 0.0f);
}

void LayerCache::reset() {
    std::fill(data_.begin(), data_.end(), 0.0f);
}

Frame causal_conv1d(const Frame& input, const ConvSpec& spec,
                    std::span<const float> weights, std::span<const float> bias,
                    LayerCache* cache) {
    require(spec.in_channels > 0 && spec.out_channels > 0 && spec.kernel_size > 0 &&
                spec.dilation > 0,
            "causal_conv1d: spec fields must be positive");
    require(input.channels() == spec.in_channels,
            "causal_conv1d: input has " + std::to_string(input.channels()) +
                " channels, spec expects " + std::to_string(spec.in_channels));
    const int in_ch = spec.in_channels;
    const int out_ch = spec.out_channels;
    const int k = spec.kernel_size;
    const int dil = spec.dilation;
    const int hist = spec.history_len();
    require(weights.size() == static_cast<std::size_t>(out_ch) * in_ch * k,
            "causal_conv1d: weight count does not match spec");
    require(bias.size() == static_cast<std::size_t>(out_ch),
            "causal_conv1d: bias count does not match spec");
    if (cache) {
        require(cache->channels() == in_ch, "causal_conv1d: cache channel mismatch");
        require(cache->history_len() == hist,
                "causal_conv1d: cache history_len " + std::to_string(cache->history_len()) +
                    " != (kernel_size-1)*dilation == " + std::to_string(hist));
    }

    const int T = input.length();
    if (T == 0) return Frame(out_ch, 0); // cache untouched

    // Left context || input, per channel. Zeros stand in for the cache in the
    // offline form, which is what makes the two forms bit-identical.
    const std::size_t stride = static_cast<std::size_t>(hist) + T;
    std::vector<float> xbuf(static_cast<std::size_t>(in_ch) * stride, 0.0f);
    for (int c = 0; c < in_ch; ++c) {
        float* dst = xbuf.data() + c * stride;
        if (cache && hist > 0)
            std::memcpy(dst, cache->row(c).data(), sizeof(float) * hist);
        std::memcpy(dst + hist, input.row(c).data(), sizeof(float) * T);
    }

    // Four output rows per pass share each x load; the (c, j) accumulation
    // order per output sample is the same in every variant, which keeps
    // streamed and offline results bit-identical.
    Frame out(out_ch, T);
    int o = 0;
    for (; o + 4 <= out_ch; o += 4) {
        float* op0 = out.row(o).data();
        float* op1 = out.row(o + 1).data();
        float* op2 = out.row(o + 2).data();
        float* op3 = out.row(o + 3).data();
        std::fill(op0, op0 + T, bias[o]);
        std::fill(op1, op1 + T, bias[o + 1]);
        std::fill(op2, op2 + T, bias[o + 2]);
        std::fill(op3, op3 + T, bias[o + 3]);
        for (int c = 0; c < in_ch; ++c) {
            const float* xr = xbuf.data() + c * stride;
            const std::size_t wbase = (static_cast<std::size_t>(o) * in_ch + c) * k;
            for (int j = 0; j < k; ++j) {
                const float w0 = weights[wbase + j];
                const float w1 = weights[wbase + static_cast<std::size_t>(in_ch) * k + j];
                const float w2 = weights[wbase + 2 * static_cast<std::size_t>(in_ch) * k + j];
                const float w3 = weights[wbase + 3 * static_cast<std::size_t>(in_ch) * k + j];
                const float* xp = xr + static_cast<std::size_t>(j) * dil;
                for (int t = 0; t < T; ++t) {
                    const float x = xp[t];
                    op0[t] += w0 * x;
                    op1[t] += w1 * x;
                    op2[t] += w2 * x;
                    op3[t] += w3 * x;
                }
            }
        }
    }
    for (; o < out_ch; ++o) {
        float* op = out.row(o).data();
        std::fill(op, op + T, bias[o]);
        for (int c = 0; c < in_ch; ++c) {
            const float* xr = xbuf.data() + c * stride;
            const float* wr = weights.data() + (static_cast<std::size_t>(o) * in_ch + c) * k;
            for (int j = 0; j < k; ++j) {
                const float wj = wr[j];
                const float* xp = xr + static_cast<std::size_t>(j) * dil;
                for (int t = 0; t < T; ++t) op[t] += wj * xp[t];
            }
        }
    }

    if (cache && hist > 0) {
        // Trailing history of (cache || input), which xbuf holds verbatim.
        for (int c = 0; c < in_ch; ++c)
            std::memcpy(cache->row(c).data(), xbuf.data() + c * stride + T,
                        sizeof(float) * hist);
    }
    return out;
}

Frame pointwise_conv1d(const Frame& input, int out_channels,
                       std::span<const float> weights, std::span<const float> bias) {
    const int in_ch = input.channels();
    require(out_channels > 0, "pointwise_conv1d: out_channels must be positive");
    require(in_ch > 0, "pointwise_conv1d: input must have channels");
    require(weights.size() == static_cast<std::size_t>(out_channels) * in_ch,
            "pointwise_conv1d: weight count does not match channels");
    require(bias.size() == static_cast<std::size_t>(out_channels),
            "pointwise_conv1d: bias count does not match out_channels");

    const int T = input.length();
    Frame out(out_channels, T);
    int o = 0;
    for (; o + 4 <= out_channels; o += 4) {
        float* op0 = out.row(o).data();
        float* op1 = out.row(o + 1).data();
        float* op2 = out.row(o + 2).data();
        float* op3 = out.row(o + 3).data();
        std::fill(op0, op0 + T, bias[o]);
        std::fill(op1, op1 + T, bias[o + 1]);
        std::fill(op2, op2 + T, bias[o + 2]);
        std::fill(op3, op3 + T, bias[o + 3]);
        const float* wr = weights.data() + static_cast<std::size_t>(o) * in_ch;
        for (int c = 0; c < in_ch; ++c) {
            const float w0 = wr[c];
            const float w1 = wr[in_ch + c];
            const float w2 = wr[2 * in_ch + c];
            const float w3 = wr[3 * in_ch + c];
            const float* xp = input.row(c).data();
            for (int t = 0; t < T; ++t) {
                const float x = xp[t];
                op0[t] += w0 * x;
                op1[t] += w1 * x;
                op2[t] += w2 * x;
                op3[t] += w3 * x;
            }
        }
    }
    for (; o < out_channels; ++o) {
        float* op = out.row(o).data();
        std::fill(op, op + T, bias[o]);
        const float* wr = weights.data() + static_cast<std::size_t>(o) * in_ch;
        for (int c = 0; c < in_ch; ++c) {
            const float wc = wr[c];
            const float* xp = input.row(c).data();
            for (int t = 0; t < T; ++t) op[t] += wc * xp[t];
        }
    }
    return out;
}

Frame batchnorm_affine(const Frame& input, std::span<const float> gamma,
                       std::span<const float> beta, std::span<const float> running_mean,
                       std::span<const float> running_var, float eps) {
    const std::size_t ch = static_cast<std::size_t>(input.channels());
    require(gamma.size() == ch && beta.size() == ch && running_mean.size() == ch &&
                running_var.size() == ch,
            "batchnorm_affine: per-channel parameter lengths must equal input channels");
    for (std::size_t c = 0; c < ch; ++c)
        if (running_var[c] < 0.0f)
            throw DataError("batchnorm_affine: negative running variance in channel " +
                            std::to_string(c));

    const int T = input.length();
    Frame out(input.channels(), T);
    for (int c = 0; c < input.channels(); ++c) {
        const float g = gamma[c];
        const float b = beta[c];
        const float m = running_mean[c];
        const float sd = std::sqrt(running_var[c] + eps);
        const float* xp = input.row(c).data();
        float* op = out.row(c).data();
        for (int t = 0; t < T; ++t) op[t] = g * ((xp[t] - m) / sd) + b;
    }
    return out;
}

Frame prelu(const Frame& input, std::span<const float> alpha) {
    require(alpha.size() == static_cast<std::size_t>(input.channels()),
            "prelu: alpha length must equal input channels");
    const int T = input.length();
    Frame out(input.channels(), T);
    for (int c = 0; c < input.channels(); ++c) {
        const float a = alpha[c];
        const float* xp = input.row(c).data();
        float* op = out.row(c).data();
        for (int t = 0; t < T; ++t) op[t] = xp[t] >= 0.0f ? xp[t] : a * xp[t];
    }
    return out;
}

Frame decimate2(const Frame& input) {
    if (input.length() % 2 != 0)
        throw ContractError("decimate2: input length must be even, got " +
                            std::to_string(input.length()));
    const int T2 = input.length() / 2;
    Frame out(input.channels(), T2);
    for (int c = 0; c < input.channels(); ++c) {
        const float* xp = input.row(c).data();
        float* op = out.row(c).data();
        for (int i = 0; i < T2; ++i) op[i] = xp[2 * i];
    }
    return out;
}

Frame upsample2_causal(const Frame& input, LayerCache& cache) {
    require(cache.history_len() == 1, "upsample2_causal: cache history_len must be 1");
    require(cache.channels() == input.channels(), "upsample2_causal: cache channel mismatch");

    const int T = input.length();
    Frame out(input.channels(), 2 * T);
    if (T == 0) return out;
    for (int c = 0; c < input.channels(); ++c) {
        const float* xp = input.row(c).data();
        float* op = out.row(c).data();
        float prev = cache.row(c)[0];
        for (int i = 0; i < T; ++i) {
            const float cur = xp[i];
            op[2 * i] = 0.5f * (prev + cur);
            op[2 * i + 1] = cur;
            prev = cur;
        }
        cache.row(c)[0] = prev;
    }
    return out;
}

Frame concat_channels(const Frame& a, const Frame& b) {
    if (a.channels() == 0) return b;
    if (b.channels() == 0) return a;
    require(a.length() == b.length(), "concat_channels: length mismatch");
    Frame out(a.channels() + b.channels(), a.length());
    const std::size_t half = static_cast<std::size_t>(a.channels()) * a.length();
    std::memcpy(out.data(), a.data(), sizeof(float) * half);
    std::memcpy(out.data() + half, b.data(),
                sizeof(float) * static_cast<std::size_t>(b.channels()) * b.length());
    return out;
}

} // namespace tcwunet
