#include "tcwunet/model.hpp"

#include <cmath>
#include <cstring>
#include <random>
#include <sstream>

namespace tcwunet {

namespace {

// Decoder level j mirrors encoder level (num_levels-1-j): same rate, same
// dilation, and its skip tensor has the encoder output width of that level.
int skip_channels(const ModelConfig& cfg, int level) {
    return cfg.channel_ladder[cfg.num_levels - level];
}

int up_in_channels(const ModelConfig& cfg, int level) {
    return level == 0 ? cfg.bottleneck_channels
                      : cfg.channel_ladder[cfg.num_levels - level + 1];
}

int decoder_dilation(const ModelConfig& cfg, int level) {
    return cfg.dilations[cfg.num_levels - 1 - level];
}

} // namespace

ConfigCheck validate_config(const ModelConfig& config) {
    ConfigCheck check;
    auto fail = [&](const std::string& msg) { check.errors.push_back(msg); };

    if (config.input_channels < 1) fail("input_channels must be positive");
    if (config.num_levels < 1 || config.num_levels > 30)
        fail("num_levels must be in [1, 30]");
    if (config.encoder_kernel < 1) fail("encoder_kernel must be positive");
    if (config.decoder_kernel < 1) fail("decoder_kernel must be positive");
    if (config.bottleneck_channels < 1) fail("bottleneck_channels must be positive");
    if (config.bn_eps < 0.0f) fail("bn_eps must be non-negative");

    if (config.num_levels >= 1 && config.num_levels <= 30) {
        if (config.channel_ladder.size() !=
            static_cast<std::size_t>(config.num_levels) + 1)
            fail("channel_ladder length must be num_levels + 1, got " +
                 std::to_string(config.channel_ladder.size()));
        if (config.dilations.size() != static_cast<std::size_t>(config.num_levels))
            fail("dilations length must be num_levels, got " +
                 std::to_string(config.dilations.size()));
    }
    if (!config.channel_ladder.empty() &&
        config.channel_ladder.front() != config.input_channels)
        fail("channel_ladder[0] must equal input_channels");
    for (std::size_t i = 0; i < config.channel_ladder.size(); ++i)
        if (config.channel_ladder[i] < 1)
            fail("channel_ladder[" + std::to_string(i) + "] must be positive");
    for (std::size_t i = 0; i < config.dilations.size(); ++i)
        if (config.dilations[i] < 1)
            fail("dilations[" + std::to_string(i) + "] must be positive");

    check.min_chunk_len = (config.num_levels >= 1 && config.num_levels <= 30)
                              ? config.min_chunk_len()
                              : 0;
    return check;
}

void require_valid(const ModelConfig& config) {
    const ConfigCheck check = validate_config(config);
    if (check.ok()) return;
    std::ostringstream out;
    out << "invalid model config:";
    for (const auto& e : check.errors) out << "\n  - " << e;
    throw ConfigError(out.str());
}

namespace {

Conv1dParams make_conv(int in, int out, int kernel, int dilation) {
    Conv1dParams p;
    p.spec = ConvSpec{in, out, kernel, dilation};
    p.weight.assign(static_cast<std::size_t>(out) * in * kernel, 0.0f);
    p.bias.assign(static_cast<std::size_t>(out), 0.0f);
    return p;
}

PointwiseParams make_pointwise(int in, int out) {
    PointwiseParams p;
    p.in_channels = in;
    p.out_channels = out;
    p.weight.assign(static_cast<std::size_t>(out) * in, 0.0f);
    p.bias.assign(static_cast<std::size_t>(out), 0.0f);
    return p;
}

BatchNormParams make_bn(int channels, float eps) {
    BatchNormParams p;
    p.gamma.assign(channels, 0.0f);
    p.beta.assign(channels, 0.0f);
    p.running_mean.assign(channels, 0.0f);
    p.running_var.assign(channels, 0.0f);
    p.eps = eps;
    return p;
}

TCBlockParams make_tc_block(int in, int out, int kernel, int dilation, float eps) {
    TCBlockParams p;
    p.conv1 = make_conv(in, out, kernel, dilation);
    p.bn1 = make_bn(out, eps);
    p.prelu1_alpha.assign(out, 0.0f);
    p.conv2 = make_pointwise(out, out);
    if (in != out) p.residual_proj = make_pointwise(in, out);
    p.prelu_out_alpha.assign(out, 0.0f);
    return p;
}

AttentionParams make_attention(int u_channels, int d_channels, int width) {
    AttentionParams p;
    p.k_conv = make_pointwise(u_channels, width);
    p.q_conv = make_pointwise(d_channels, width);
    p.v_conv = make_pointwise(d_channels, width);
    p.prelu_alpha.assign(width, 0.0f);
    p.mask_conv = make_pointwise(width, width);
    return p;
}

} // namespace

ModelWeights allocate_weights(const ModelConfig& config) {
    require_valid(config);
    const int n = config.num_levels;
    ModelWeights w;
    w.config = config;

    w.encoder.reserve(n);
    for (int i = 0; i < n; ++i)
        w.encoder.push_back(make_tc_block(config.channel_ladder[i],
                                          config.channel_ladder[i + 1],
                                          config.encoder_kernel, config.dilations[i],
                                          config.bn_eps));

    w.bottleneck.conv = make_conv(config.channel_ladder[n], config.bottleneck_channels,
                                  config.encoder_kernel, 1);
    w.bottleneck.prelu_alpha.assign(config.bottleneck_channels, 0.0f);

    w.decoder.reserve(n);
    for (int j = 0; j < n; ++j) {
        const int s = skip_channels(config, j);
        const int u = up_in_channels(config, j);
        DecoderLevelParams lvl;
        lvl.skip_conv = make_pointwise(s, s);
        lvl.attention = make_attention(u, s, s);
        lvl.tc_block = make_tc_block(u + s, s, config.decoder_kernel,
                                     decoder_dilation(config, j), config.bn_eps);
        w.decoder.push_back(std::move(lvl));
    }

    const int head = config.channel_ladder[1]; // decoder output width
    w.noisy_proj = make_pointwise(1, head);
    w.final_attention = make_attention(head, head, head);
    w.output_conv = make_pointwise(2 * head, 1);
    return w;
}

namespace {

// Deterministic uniform floats: 24 explicit mantissa bits from the top of a
// mt19937_64 draw, so the sequence does not depend on the standard library's
// distribution implementation.
class UniformSource {
public:
    explicit UniformSource(std::uint64_t seed) : rng_(seed) {}

    float pm(float bound) {
        const float u = static_cast<float>(rng_() >> 40) * 0x1.0p-24f; // [0, 1)
        return bound * (2.0f * u - 1.0f);
    }

private:
    std::mt19937_64 rng_;
};

void fill_pm(std::vector<float>& v, float bound, UniformSource& src) {
    for (auto& x : v) x = src.pm(bound);
}

void init_conv(Conv1dParams& p, UniformSource& src) {
    const float bound =
        1.0f / std::sqrt(static_cast<float>(p.spec.in_channels) * p.spec.kernel_size);
    fill_pm(p.weight, bound, src);
    fill_pm(p.bias, bound, src);
}

void init_pointwise(PointwiseParams& p, UniformSource& src) {
    const float bound = 1.0f / std::sqrt(static_cast<float>(p.in_channels));
    fill_pm(p.weight, bound, src);
    fill_pm(p.bias, bound, src);
}

void init_bn(BatchNormParams& p) {
    std::fill(p.gamma.begin(), p.gamma.end(), 1.0f);
    std::fill(p.beta.begin(), p.beta.end(), 0.0f);
    std::fill(p.running_mean.begin(), p.running_mean.end(), 0.0f);
    std::fill(p.running_var.begin(), p.running_var.end(), 1.0f);
}

void init_tc_block(TCBlockParams& p, UniformSource& src) {
    init_conv(p.conv1, src);
    init_bn(p.bn1);
    std::fill(p.prelu1_alpha.begin(), p.prelu1_alpha.end(), 0.25f);
    init_pointwise(p.conv2, src);
    if (p.residual_proj) init_pointwise(*p.residual_proj, src);
    std::fill(p.prelu_out_alpha.begin(), p.prelu_out_alpha.end(), 0.25f);
}

void init_attention(AttentionParams& p, UniformSource& src) {
    init_pointwise(p.k_conv, src);
    init_pointwise(p.q_conv, src);
    init_pointwise(p.v_conv, src);
    std::fill(p.prelu_alpha.begin(), p.prelu_alpha.end(), 0.25f);
    init_pointwise(p.mask_conv, src);
}

} // namespace

ModelWeights init_random(const ModelConfig& config, std::uint64_t seed) {
    ModelWeights w = allocate_weights(config);
    UniformSource src(seed);
    for (auto& block : w.encoder) init_tc_block(block, src);
    init_conv(w.bottleneck.conv, src);
    std::fill(w.bottleneck.prelu_alpha.begin(), w.bottleneck.prelu_alpha.end(), 0.25f);
    for (auto& lvl : w.decoder) {
        init_pointwise(lvl.skip_conv, src);
        init_attention(lvl.attention, src);
        init_tc_block(lvl.tc_block, src);
    }
    init_pointwise(w.noisy_proj, src);
    init_attention(w.final_attention, src);
    init_pointwise(w.output_conv, src);
    return w;
}

Frame tc_block_forward(const Frame& x, const TCBlockParams& params,
                       LayerCache* conv1_cache) {
    Frame h = causal_conv1d(x, params.conv1.spec, params.conv1.weight, params.conv1.bias,
                            conv1_cache);
    h = batchnorm_affine(h, params.bn1.gamma, params.bn1.beta, params.bn1.running_mean,
                         params.bn1.running_var, params.bn1.eps);
    h = prelu(h, params.prelu1_alpha);
    // dropout is identity at inference
    h = pointwise_conv1d(h, params.conv2.out_channels, params.conv2.weight,
                         params.conv2.bias);

    if (params.residual_proj) {
        const Frame res = pointwise_conv1d(x, params.residual_proj->out_channels,
                                           params.residual_proj->weight,
                                           params.residual_proj->bias);
        if (res.channels() != h.channels())
            throw ConfigError("tc_block_forward: residual projection width mismatch");
        for (std::size_t i = 0; i < h.size(); ++i) h.data()[i] += res.data()[i];
    } else {
        if (x.channels() != h.channels())
            throw ConfigError("tc_block_forward: residual projection required when "
                              "in_channels != out_channels");
        for (std::size_t i = 0; i < h.size(); ++i) h.data()[i] += x.data()[i];
    }
    return prelu(h, params.prelu_out_alpha);
}

Frame attention_forward(const Frame& u, const Frame& d, const AttentionParams& params) {
    if (u.length() != d.length())
        throw ConfigError("attention_forward: u and d lengths differ");

    Frame p = pointwise_conv1d(u, params.k_conv.out_channels, params.k_conv.weight,
                               params.k_conv.bias);
    const Frame q = pointwise_conv1d(d, params.q_conv.out_channels, params.q_conv.weight,
                                     params.q_conv.bias);
    if (p.channels() != q.channels())
        throw ConfigError("attention_forward: k and q widths differ");
    for (std::size_t i = 0; i < p.size(); ++i) p.data()[i] += q.data()[i];
    p = prelu(p, params.prelu_alpha);

    Frame mask = pointwise_conv1d(p, params.mask_conv.out_channels, params.mask_conv.weight,
                                  params.mask_conv.bias);
    for (std::size_t i = 0; i < mask.size(); ++i)
        mask.data()[i] = 1.0f / (1.0f + std::exp(-mask.data()[i]));

    Frame v = pointwise_conv1d(d, params.v_conv.out_channels, params.v_conv.weight,
                               params.v_conv.bias);
    if (mask.channels() != v.channels())
        throw ConfigError("attention_forward: mask and v widths differ");
    for (std::size_t i = 0; i < v.size(); ++i) v.data()[i] *= mask.data()[i];
    return v;
}

std::size_t CacheStack::total_floats() const {
    std::size_t n = 0;
    for (const auto& c : layers)
        n += static_cast<std::size_t>(c.channels()) * c.history_len();
    return n;
}

CacheStack make_cache_stack(const ModelConfig& config) {
    require_valid(config);
    const int n = config.num_levels;
    CacheStack stack;
    stack.layers.reserve(static_cast<std::size_t>(3) * n + 1);

    for (int i = 0; i < n; ++i) {
        const ConvSpec spec{config.channel_ladder[i], config.channel_ladder[i + 1],
                            config.encoder_kernel, config.dilations[i]};
        stack.layers.emplace_back(spec.in_channels, spec.history_len());
    }
    {
        const ConvSpec spec{config.channel_ladder[n], config.bottleneck_channels,
                            config.encoder_kernel, 1};
        stack.layers.emplace_back(spec.in_channels, spec.history_len());
    }
    for (int j = 0; j < n; ++j) {
        const int s = skip_channels(config, j);
        const int u = up_in_channels(config, j);
        stack.layers.emplace_back(u, 1); // upsampler
        const ConvSpec spec{u + s, s, config.decoder_kernel, decoder_dilation(config, j)};
        stack.layers.emplace_back(spec.in_channels, spec.history_len());
    }
    return stack;
}

int conv_cache_count(const ModelConfig& config) {
    return 2 * config.num_levels + 1;
}

Frame forward_chunk(const ModelWeights& model, const Frame& input, CacheStack& caches) {
    const ModelConfig& cfg = model.config;
    if (input.channels() != cfg.input_channels)
        throw ConfigError("forward_chunk: input has " + std::to_string(input.channels()) +
                          " channels, model expects " +
                          std::to_string(cfg.input_channels));
    const int block = cfg.min_chunk_len();
    if (input.length() <= 0 || input.length() % block != 0)
        throw ContractError("forward_chunk: input length must be a positive multiple of " +
                            std::to_string(block) + ", got " +
                            std::to_string(input.length()));

    std::size_t ci = 0;
    auto next_cache = [&]() -> LayerCache& {
        if (ci >= caches.layers.size())
            throw ConfigError("forward_chunk: cache stack too small for this model");
        return caches.layers[ci++];
    };

    std::vector<Frame> skips;
    skips.reserve(cfg.num_levels);
    Frame cur = input;
    for (int i = 0; i < cfg.num_levels; ++i) {
        cur = tc_block_forward(cur, model.encoder[i], &next_cache());
        skips.push_back(std::move(cur)); // skip tap before decimation
        cur = decimate2(skips.back());
    }

    cur = causal_conv1d(cur, model.bottleneck.conv.spec, model.bottleneck.conv.weight,
                        model.bottleneck.conv.bias, &next_cache());
    cur = prelu(cur, model.bottleneck.prelu_alpha);

    for (int j = 0; j < cfg.num_levels; ++j) {
        const DecoderLevelParams& lvl = model.decoder[j];
        const Frame up = upsample2_causal(cur, next_cache());
        const Frame& skip = skips[cfg.num_levels - 1 - j];
        const Frame sc = pointwise_conv1d(skip, lvl.skip_conv.out_channels,
                                          lvl.skip_conv.weight, lvl.skip_conv.bias);
        const Frame gated = attention_forward(up, sc, lvl.attention);
        cur = tc_block_forward(concat_channels(up, gated), lvl.tc_block, &next_cache());
    }

    // Final gate between the decoder output and the projected reference
    // channel of the raw noisy input.
    Frame ref(1, input.length());
    std::memcpy(ref.data(), input.row(0).data(), sizeof(float) * input.length());
    const Frame d = pointwise_conv1d(ref, model.noisy_proj.out_channels,
                                     model.noisy_proj.weight, model.noisy_proj.bias);
    const Frame gated = attention_forward(cur, d, model.final_attention);
    Frame out = pointwise_conv1d(concat_channels(cur, gated), model.output_conv.out_channels,
                                 model.output_conv.weight, model.output_conv.bias);

    if (ci != caches.layers.size())
        throw ConfigError("forward_chunk: cache stack does not match this model");
    return out;
}

Frame forward_offline(const ModelWeights& model, const Frame& input) {
    CacheStack caches = make_cache_stack(model.config);
    return forward_chunk(model, input, caches);
}

Frame encoder_forward(const ModelWeights& model, const Frame& input) {
    const ModelConfig& cfg = model.config;
    if (input.channels() != cfg.input_channels)
        throw ConfigError("encoder_forward: input channel mismatch");
    const int block = cfg.min_chunk_len();
    if (input.length() <= 0 || input.length() % block != 0)
        throw ContractError("encoder_forward: input length must be a positive multiple of " +
                            std::to_string(block));
    Frame cur = input;
    for (int i = 0; i < cfg.num_levels; ++i)
        cur = decimate2(tc_block_forward(cur, model.encoder[i]));
    return cur;
}

ReceptiveField analytic_receptive_field(const ModelConfig& config) {
    require_valid(config);
    long long plain = 0;
    long long scaled = 0;
    for (int i = 0; i < config.num_levels; ++i) {
        plain += config.dilations[i];
        scaled += static_cast<long long>(config.dilations[i]) << i;
    }
    const long long taps = config.encoder_kernel - 1;
    return ReceptiveField{1 + taps * plain, 1 + taps * scaled};
}

namespace {

template <typename Weights, typename Span>
void visit_tensors(Weights& w,
                   const std::function<void(const std::string&, const std::vector<int>&,
                                            Span)>& fn) {
    auto conv = [&](const std::string& base, auto& p) {
        fn(base + ".weight",
           {p.spec.out_channels, p.spec.in_channels, p.spec.kernel_size}, Span(p.weight));
        fn(base + ".bias", {p.spec.out_channels}, Span(p.bias));
    };
    auto pw = [&](const std::string& base, auto& p) {
        fn(base + ".weight", {p.out_channels, p.in_channels}, Span(p.weight));
        fn(base + ".bias", {p.out_channels}, Span(p.bias));
    };
    auto vec = [&](const std::string& name, auto& v) {
        fn(name, {static_cast<int>(v.size())}, Span(v));
    };
    auto bn = [&](const std::string& base, auto& p) {
        vec(base + ".gamma", p.gamma);
        vec(base + ".beta", p.beta);
        vec(base + ".running_mean", p.running_mean);
        vec(base + ".running_var", p.running_var);
    };
    auto tc = [&](const std::string& base, auto& p) {
        conv(base + ".conv1", p.conv1);
        bn(base + ".bn1", p.bn1);
        vec(base + ".prelu1.alpha", p.prelu1_alpha);
        pw(base + ".conv2", p.conv2);
        if (p.residual_proj) pw(base + ".proj", *p.residual_proj);
        vec(base + ".prelu_out.alpha", p.prelu_out_alpha);
    };
    auto attn = [&](const std::string& base, auto& p) {
        pw(base + ".k", p.k_conv);
        pw(base + ".q", p.q_conv);
        pw(base + ".v", p.v_conv);
        vec(base + ".prelu.alpha", p.prelu_alpha);
        pw(base + ".mask", p.mask_conv);
    };

    for (std::size_t i = 0; i < w.encoder.size(); ++i)
        tc("encoder." + std::to_string(i), w.encoder[i]);
    conv("bottleneck.conv", w.bottleneck.conv);
    vec("bottleneck.prelu.alpha", w.bottleneck.prelu_alpha);
    for (std::size_t j = 0; j < w.decoder.size(); ++j) {
        const std::string base = "decoder." + std::to_string(j);
        pw(base + ".skip", w.decoder[j].skip_conv);
        attn(base + ".attention", w.decoder[j].attention);
        tc(base + ".tc", w.decoder[j].tc_block);
    }
    pw("final.noisy_proj", w.noisy_proj);
    attn("final.attention", w.final_attention);
    pw("final.output_conv", w.output_conv);
}

} // namespace

void for_each_tensor(ModelWeights& model,
                     const std::function<void(const std::string&, const std::vector<int>&,
                                              std::span<float>)>& fn) {
    visit_tensors<ModelWeights, std::span<float>>(model, fn);
}

void for_each_tensor(const ModelWeights& model,
                     const std::function<void(const std::string&, const std::vector<int>&,
                                              std::span<const float>)>& fn) {
    visit_tensors<const ModelWeights, std::span<const float>>(model, fn);
}

long long param_count(const ModelWeights& model) {
    long long count = 0;
    for_each_tensor(model, [&](const std::string& name, const std::vector<int>&,
                               std::span<const float> values) {
        if (name.ends_with(".running_mean") || name.ends_with(".running_var")) return;
        count += static_cast<long long>(values.size());
    });
    return count;
}

void check_finite(const ModelWeights& model) {
    for_each_tensor(model, [](const std::string& name, const std::vector<int>&,
                              std::span<const float> values) {
        for (float v : values)
            if (!std::isfinite(v))
                throw WeightsError("non-finite value in tensor " + name);
    });
}

} // namespace tcwunet
