#include <doctest.h>

#include <cmath>
#include <cstring>
#include <limits>
#include <random>
#include <vector>

#include "tcwunet/model.hpp"

using namespace tcwunet;

namespace {

ModelConfig small_config() {
    ModelConfig c;
    c.input_channels = 2;
    c.num_levels = 3;
    c.encoder_kernel = 5;
    c.decoder_kernel = 3;
    c.channel_ladder = {2, 4, 6, 8};
    c.bottleneck_channels = 10;
    c.dilations = {1, 2, 4};
    return c;
}

Frame random_frame(int channels, int length, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
    Frame f(channels, length);
    for (std::size_t i = 0; i < f.size(); ++i) f.data()[i] = dist(rng);
    return f;
}

std::vector<float> flatten(const ModelWeights& w) {
    std::vector<float> all;
    for_each_tensor(w, [&](const std::string&, const std::vector<int>&,
                           std::span<const float> values) {
        all.insert(all.end(), values.begin(), values.end());
    });
    return all;
}

// Re-derives the full tensor element count from the channel arithmetic alone,
// without touching the implementation's tensor walk.
long long expected_param_count(const ModelConfig& c) {
    long long total = 0;
    auto conv = [&](int in, int out, int k) {
        total += static_cast<long long>(out) * in * k + out;
    };
    auto pw = [&](int in, int out) { conv(in, out, 1); };
    const int n = c.num_levels;
    for (int i = 0; i < n; ++i) {
        const int in = c.channel_ladder[i];
        const int out = c.channel_ladder[i + 1];
        conv(in, out, c.encoder_kernel);
        total += 2 * out; // batch-norm gamma + beta
        total += out;     // prelu1
        pw(out, out);     // conv2
        if (in != out) pw(in, out);
        total += out; // prelu_out
    }
    conv(c.channel_ladder[n], c.bottleneck_channels, c.encoder_kernel);
    total += c.bottleneck_channels;
    for (int j = 0; j < n; ++j) {
        const int s = c.channel_ladder[n - j];
        const int u = j == 0 ? c.bottleneck_channels : c.channel_ladder[n - j + 1];
        pw(s, s);                     // skip conv
        pw(u, s), pw(s, s), pw(s, s); // k, q, v
        total += s;                   // attention prelu
        pw(s, s);                     // mask conv
        conv(u + s, s, c.decoder_kernel);
        total += 2 * s + s; // bn + prelu1
        pw(s, s);           // conv2
        pw(u + s, s);       // proj, always present in the decoder
        total += s;         // prelu_out
    }
    const int head = c.channel_ladder[1];
    pw(1, head);
    pw(head, head), pw(head, head), pw(head, head);
    total += head;
    pw(head, head);
    pw(2 * head, 1);
    return total;
}

struct ExpectedCache {
    int channels;
    int history;
};

// Independent enumeration of the stateful layers from the config alone.
std::vector<ExpectedCache> expected_caches(const ModelConfig& c) {
    std::vector<ExpectedCache> out;
    const int n = c.num_levels;
    for (int i = 0; i < n; ++i)
        out.push_back({c.channel_ladder[i], (c.encoder_kernel - 1) * c.dilations[i]});
    out.push_back({c.channel_ladder[n], c.encoder_kernel - 1});
    for (int j = 0; j < n; ++j) {
        const int s = c.channel_ladder[n - j];
        const int u = j == 0 ? c.bottleneck_channels : c.channel_ladder[n - j + 1];
        out.push_back({u, 1});
        out.push_back({u + s, (c.decoder_kernel - 1) * c.dilations[n - 1 - j]});
    }
    return out;
}

// All-positive parameters so a perturbation can never cancel: every weight
// 0.05, biases zero, batch norm and PReLU configured as identities.
ModelWeights positive_weights(const ModelConfig& config) {
    ModelWeights w = allocate_weights(config);
    for_each_tensor(w, [](const std::string& name, const std::vector<int>&,
                          std::span<float> values) {
        float fill = 0.0f;
        if (name.ends_with(".weight")) fill = 0.05f;
        else if (name.ends_with(".gamma") || name.ends_with(".running_var") ||
                 name.ends_with(".alpha"))
            fill = 1.0f;
        std::fill(values.begin(), values.end(), fill);
    });
    return w;
}

// Farthest distance (input samples back from the perturbation) at which any
// encoder output still moves, measured by actually running the encoder. Some
// probe positions have an empty influence set (an isolated odd-parity sample
// feeding an even-dilation conv never lands on a kept decimation index), so
// the sweep covers a full stride window and takes the max over live probes.
int measured_encoder_reach(const ModelConfig& config, int input_len) {
    const ModelWeights w = positive_weights(config);
    const int stride = config.min_chunk_len();
    int reach = -1;
    for (int q = stride; q < 2 * stride; ++q) {
        Frame x(config.input_channels, input_len);
        x.at(0, q) = 1.0f;
        const Frame y = encoder_forward(w, x);
        int last = -1;
        for (int p = 0; p < y.length(); ++p)
            for (int c = 0; c < y.channels(); ++c)
                if (y.at(c, p) != 0.0f) last = std::max(last, p);
        if (last < 0) continue;
        reach = std::max(reach, stride * last - q);
    }
    REQUIRE(reach >= 0);
    return reach;
}

} // namespace

TEST_CASE("validate_config") {
    SUBCASE("default config is valid with min chunk 512") {
        const ConfigCheck check = validate_config(ModelConfig{});
        CHECK(check.ok());
        CHECK(check.min_chunk_len == 512);
    }
    SUBCASE("ladder length must be num_levels + 1") {
        ModelConfig c;
        c.channel_ladder.pop_back();
        const ConfigCheck check = validate_config(c);
        REQUIRE_FALSE(check.ok());
        bool mentions_ladder = false;
        for (const auto& e : check.errors)
            mentions_ladder |= e.find("channel_ladder length") != std::string::npos;
        CHECK(mentions_ladder);
    }
    SUBCASE("dilations length must be num_levels") {
        ModelConfig c;
        c.dilations.pop_back();
        CHECK_FALSE(validate_config(c).ok());
    }
    SUBCASE("all violations are reported, not just the first") {
        ModelConfig c;
        c.input_channels = 0;
        c.encoder_kernel = 0;
        c.dilations[2] = -1;
        const ConfigCheck check = validate_config(c);
        CHECK(check.errors.size() >= 3);
        CHECK_THROWS_AS(require_valid(c), ConfigError);
    }
    SUBCASE("ladder head must match input_channels") {
        ModelConfig c;
        c.input_channels = 4;
        CHECK_FALSE(validate_config(c).ok());
    }
}

TEST_CASE("init_random is deterministic and bounded") {
    const ModelConfig config = small_config();
    const ModelWeights a = init_random(config, 7);
    const ModelWeights b = init_random(config, 7);
    const ModelWeights c = init_random(config, 8);

    const auto fa = flatten(a);
    const auto fb = flatten(b);
    const auto fc = flatten(c);
    CHECK(std::memcmp(fa.data(), fb.data(), fa.size() * sizeof(float)) == 0);
    CHECK(std::memcmp(fa.data(), fc.data(), fa.size() * sizeof(float)) != 0);

    for_each_tensor(a, [](const std::string& name, const std::vector<int>& shape,
                          std::span<const float> values) {
        for (float v : values) REQUIRE(std::isfinite(v));
        if (name.ends_with(".weight") && shape.size() == 3) {
            const float bound = 1.0f / std::sqrt(static_cast<float>(shape[1]) * shape[2]);
            for (float v : values) REQUIRE(std::abs(v) <= bound);
        }
        if (name.ends_with(".weight") && shape.size() == 2) {
            const float bound = 1.0f / std::sqrt(static_cast<float>(shape[1]));
            for (float v : values) REQUIRE(std::abs(v) <= bound);
        }
        if (name.ends_with(".gamma") || name.ends_with(".running_var"))
            for (float v : values) REQUIRE(v == 1.0f);
        if (name.ends_with(".running_mean") || name.ends_with(".beta"))
            for (float v : values) REQUIRE(v == 0.0f);
        if (name.ends_with(".alpha"))
            for (float v : values) REQUIRE(v == 0.25f);
    });
}

TEST_CASE("tc_block_forward") {
    SUBCASE("all-zero weights give all-zero output") {
        TCBlockParams p;
        p.conv1.spec = ConvSpec{2, 3, 5, 2};
        p.conv1.weight.assign(3 * 2 * 5, 0.0f);
        p.conv1.bias.assign(3, 0.0f);
        p.bn1.gamma.assign(3, 0.0f);
        p.bn1.beta.assign(3, 0.0f);
        p.bn1.running_mean.assign(3, 0.0f);
        p.bn1.running_var.assign(3, 0.0f);
        p.bn1.eps = 1e-5f;
        p.prelu1_alpha.assign(3, 0.25f);
        p.conv2.in_channels = 3;
        p.conv2.out_channels = 3;
        p.conv2.weight.assign(9, 0.0f);
        p.conv2.bias.assign(3, 0.0f);
        p.residual_proj = PointwiseParams{2, 3, std::vector<float>(6, 0.0f),
                                          std::vector<float>(3, 0.0f)};
        p.prelu_out_alpha.assign(3, 0.25f);

        const Frame y = tc_block_forward(random_frame(2, 16, 201), p);
        for (std::size_t i = 0; i < y.size(); ++i) CHECK(y.data()[i] == 0.0f);
    }

    SUBCASE("identity path reduces to PReLU_out(2x)") {
        // conv1 and conv2 both identity, no projection: the residual doubles x.
        const int ch = 2;
        TCBlockParams p;
        p.conv1.spec = ConvSpec{ch, ch, 1, 1};
        p.conv1.weight = {1.0f, 0.0f, 0.0f, 1.0f};
        p.conv1.bias.assign(ch, 0.0f);
        p.bn1.gamma.assign(ch, 1.0f);
        p.bn1.beta.assign(ch, 0.0f);
        p.bn1.running_mean.assign(ch, 0.0f);
        p.bn1.running_var.assign(ch, 1.0f);
        p.bn1.eps = 0.0f;
        p.prelu1_alpha.assign(ch, 1.0f);
        p.conv2.in_channels = ch;
        p.conv2.out_channels = ch;
        p.conv2.weight = {1.0f, 0.0f, 0.0f, 1.0f};
        p.conv2.bias.assign(ch, 0.0f);
        p.prelu_out_alpha.assign(ch, 0.25f);

        const Frame x = random_frame(ch, 8, 202);
        const Frame y = tc_block_forward(x, p);
        for (int c = 0; c < ch; ++c)
            for (int t = 0; t < 8; ++t) {
                const float twice = 2.0f * x.at(c, t);
                const float want = twice >= 0.0f ? twice : 0.25f * twice;
                CHECK(y.at(c, t) == doctest::Approx(want).epsilon(1e-6));
            }
    }

    SUBCASE("cached two-chunk call equals the offline call") {
        const ModelConfig config = small_config();
        const ModelWeights w = init_random(config, 55);
        const TCBlockParams& p = w.encoder[1]; // 4 -> 6, dilation 2
        const Frame x = random_frame(4, 24, 203);

        const Frame offline = tc_block_forward(x, p);

        LayerCache cache(4, p.conv1.spec.history_len());
        Frame a(4, 12), b(4, 12);
        for (int c = 0; c < 4; ++c)
            for (int t = 0; t < 12; ++t) {
                a.at(c, t) = x.at(c, t);
                b.at(c, t) = x.at(c, t + 12);
            }
        const Frame y1 = tc_block_forward(a, p, &cache);
        const Frame y2 = tc_block_forward(b, p, &cache);
        for (int c = 0; c < 6; ++c)
            for (int t = 0; t < 12; ++t) {
                CHECK(y1.at(c, t) == offline.at(c, t));
                CHECK(y2.at(c, t) == offline.at(c, t + 12));
            }
    }
}

TEST_CASE("attention_forward") {
    const ModelConfig config = small_config();
    const ModelWeights w = init_random(config, 77);
    AttentionParams p = w.decoder[0].attention; // u: 10 ch, d: 8 ch, width 8
    const Frame u = random_frame(10, 6, 301);
    const Frame d = random_frame(8, 6, 302);

    SUBCASE("zeroed mask conv halves v(d)") {
        std::fill(p.mask_conv.weight.begin(), p.mask_conv.weight.end(), 0.0f);
        std::fill(p.mask_conv.bias.begin(), p.mask_conv.bias.end(), 0.0f);
        const Frame got = attention_forward(u, d, p);
        const Frame v = pointwise_conv1d(d, p.v_conv.out_channels, p.v_conv.weight,
                                         p.v_conv.bias);
        for (int c = 0; c < got.channels(); ++c)
            for (int t = 0; t < got.length(); ++t)
                CHECK(got.at(c, t) == 0.5f * v.at(c, t));
    }

    SUBCASE("saturated mask passes v(d) through") {
        std::fill(p.mask_conv.weight.begin(), p.mask_conv.weight.end(), 0.0f);
        std::fill(p.mask_conv.bias.begin(), p.mask_conv.bias.end(), 100.0f);
        const Frame got = attention_forward(u, d, p);
        const Frame v = pointwise_conv1d(d, p.v_conv.out_channels, p.v_conv.weight,
                                         p.v_conv.bias);
        for (int c = 0; c < got.channels(); ++c)
            for (int t = 0; t < got.length(); ++t)
                CHECK(got.at(c, t) == doctest::Approx(v.at(c, t)).epsilon(1e-6));
    }

    SUBCASE("random parameters match the scalar formula") {
        const Frame got = attention_forward(u, d, p);
        const int width = p.mask_conv.out_channels;
        for (int o = 0; o < width; ++o) {
            for (int t = 0; t < 6; ++t) {
                std::vector<float> pvec(width);
                for (int e = 0; e < width; ++e) {
                    float ku = p.k_conv.bias[e];
                    for (int c = 0; c < u.channels(); ++c)
                        ku += p.k_conv.weight[e * u.channels() + c] * u.at(c, t);
                    float qd = p.q_conv.bias[e];
                    for (int c = 0; c < d.channels(); ++c)
                        qd += p.q_conv.weight[e * d.channels() + c] * d.at(c, t);
                    const float s = ku + qd;
                    pvec[e] = s >= 0.0f ? s : p.prelu_alpha[e] * s;
                }
                float m = p.mask_conv.bias[o];
                for (int e = 0; e < width; ++e)
                    m += p.mask_conv.weight[o * width + e] * pvec[e];
                const float mask = 1.0f / (1.0f + std::exp(-m));
                float v = p.v_conv.bias[o];
                for (int c = 0; c < d.channels(); ++c)
                    v += p.v_conv.weight[o * d.channels() + c] * d.at(c, t);
                CHECK(got.at(o, t) == doctest::Approx(mask * v).epsilon(1e-4));
            }
        }
    }

    SUBCASE("length mismatch throws") {
        CHECK_THROWS_AS(attention_forward(Frame(10, 4), Frame(8, 5), p), ConfigError);
    }
}

TEST_CASE("cache stack layout matches the independent graph enumeration") {
    for (const ModelConfig& config : {ModelConfig{}, small_config()}) {
        const CacheStack stack = make_cache_stack(config);
        const auto expected = expected_caches(config);
        REQUIRE(stack.layers.size() == expected.size());
        REQUIRE(static_cast<int>(expected.size()) == 3 * config.num_levels + 1);
        for (std::size_t i = 0; i < expected.size(); ++i) {
            CHECK(stack.layers[i].channels() == expected[i].channels);
            CHECK(stack.layers[i].history_len() == expected[i].history);
        }
        CHECK(conv_cache_count(config) == 2 * config.num_levels + 1);
    }
    // Deepest encoder level of the default model: kernel 15, dilation 64.
    const CacheStack stack = make_cache_stack(ModelConfig{});
    CHECK(stack.layers[8].history_len() == 896);
}

TEST_CASE("forward_offline shapes and determinism") {
    SUBCASE("full-size model maps 16384x8 to 16384x1") {
        const ModelWeights w = init_random(ModelConfig{}, 42);
        const Frame x = random_frame(8, 16384, 401);
        const Frame y = forward_offline(w, x);
        CHECK(y.channels() == 1);
        CHECK(y.length() == 16384);
    }
    SUBCASE("deterministic on identical input") {
        const ModelWeights w = init_random(small_config(), 9);
        const Frame x = random_frame(2, 64, 402);
        CHECK(forward_offline(w, x) == forward_offline(w, x));
    }
    SUBCASE("invalid geometry is rejected") {
        const ModelWeights w = init_random(small_config(), 9);
        CHECK_THROWS_AS(forward_offline(w, Frame(2, 12)), ContractError);
        CHECK_THROWS_AS(forward_offline(w, Frame(2, 0)), ContractError);
        CHECK_THROWS_AS(forward_offline(w, Frame(3, 16)), ConfigError);
    }
}

TEST_CASE("forward_offline with zero biases maps zero input to zero output") {
    ModelWeights w = init_random(small_config(), 10);
    for_each_tensor(w, [](const std::string& name, const std::vector<int>&,
                          std::span<float> values) {
        if (name.ends_with(".bias")) std::fill(values.begin(), values.end(), 0.0f);
    });
    const Frame y = forward_offline(w, Frame(2, 32));
    for (std::size_t i = 0; i < y.size(); ++i) CHECK(y.data()[i] == 0.0f);
}

TEST_CASE("forward_offline never changes samples before a perturbation") {
    const ModelConfig config = small_config();
    std::mt19937 rng(500);
    for (int trial = 0; trial < 8; ++trial) {
        const ModelWeights w = init_random(config, 1000 + trial);
        Frame x = random_frame(2, 64, 600 + trial);
        const Frame base = forward_offline(w, x);

        const int pos = 1 + static_cast<int>(rng() % 62);
        x.at(static_cast<int>(rng() % 2), pos) += 1.0f;
        const Frame perturbed = forward_offline(w, x);
        for (int t = 0; t < pos; ++t) CHECK(perturbed.at(0, t) == base.at(0, t));
    }
}

TEST_CASE("analytic_receptive_field") {
    SUBCASE("default config") {
        const ReceptiveField rf = analytic_receptive_field(ModelConfig{});
        CHECK(rf.dilated_stack == 1807); // 1 + 14 * 129
        CHECK(rf.decimation_aware == 305859);
    }
    SUBCASE("single level, kernel 15") {
        ModelConfig c;
        c.input_channels = 1;
        c.num_levels = 1;
        c.channel_ladder = {1, 2};
        c.dilations = {1};
        const ReceptiveField rf = analytic_receptive_field(c);
        CHECK(rf.dilated_stack == 15);
        CHECK(rf.decimation_aware == 15);
    }
    SUBCASE("decimation-aware accounting matches the measured encoder reach") {
        const ModelConfig c = small_config();
        const ReceptiveField rf = analytic_receptive_field(c);
        CHECK(rf.decimation_aware == 85); // 1 + 4*(1*1 + 2*2 + 4*4)
        CHECK(measured_encoder_reach(c, 256) == rf.decimation_aware - 1);

        ModelConfig tiny;
        tiny.input_channels = 1;
        tiny.num_levels = 2;
        tiny.encoder_kernel = 3;
        tiny.decoder_kernel = 3;
        tiny.channel_ladder = {1, 2, 3};
        tiny.bottleneck_channels = 4;
        tiny.dilations = {1, 2};
        const ReceptiveField tiny_rf = analytic_receptive_field(tiny);
        CHECK(tiny_rf.decimation_aware == 11); // 1 + 2*(1 + 4)
        CHECK(measured_encoder_reach(tiny, 64) == tiny_rf.decimation_aware - 1);
    }
}

TEST_CASE("param_count matches the channel arithmetic") {
    for (const ModelConfig& config : {ModelConfig{}, small_config()}) {
        const ModelWeights w = allocate_weights(config);
        CHECK(param_count(w) == expected_param_count(config));
    }
}

TEST_CASE("check_finite rejects poisoned tensors") {
    ModelWeights w = init_random(small_config(), 3);
    CHECK_NOTHROW(check_finite(w));
    w.encoder[0].conv1.weight[5] = std::numeric_limits<float>::quiet_NaN();
    CHECK_THROWS_AS(check_finite(w), WeightsError);
}

TEST_CASE("forward_chunk validates the cache stack") {
    const ModelConfig config = small_config();
    const ModelWeights w = init_random(config, 4);
    CacheStack wrong;
    CHECK_THROWS_AS(forward_chunk(w, Frame(2, 16), wrong), ConfigError);
}
