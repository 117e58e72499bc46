#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "icanet/fixtures.hpp"
#include "icanet/nets.hpp"
#include "oracles.hpp"

using namespace icanet;

namespace {

template <typename Fn>
void throws_containing(Fn&& fn, const std::string& needle) {
    try {
        fn();
        FAIL_CHECK("expected an exception mentioning '" << needle << "'");
    } catch (const std::exception& e) {
        const std::string msg = e.what();
        CHECK_MESSAGE(msg.find(needle) != std::string::npos,
                      "message '" << msg << "' lacks '" << needle << "'");
    }
}

struct RowExpect {
    const char* name;
    const char* kind;
    Shape output;
};

void check_trace(const NetworkDesc& net, const std::vector<RowExpect>& expect) {
    auto rows = shape_trace(net, net.input_shape);
    REQUIRE(rows.size() == expect.size());
    for (size_t i = 0; i < rows.size(); ++i) {
        CHECK(rows[i].name == expect[i].name);
        CHECK(rows[i].kind == expect[i].kind);
        CHECK_MESSAGE(rows[i].output == expect[i].output,
                      rows[i].name << ": got " << shape_str(rows[i].output) << ", want "
                                   << shape_str(expect[i].output));
    }
}

double hswish_ref(double x) { return x * std::min(std::max(x + 3.0, 0.0), 6.0) / 6.0; }

double sigmoid_ref(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Direct statement of the attention rule: directional means, shared
// bottleneck, two sigmoid gates multiplying the input.
Tensor ca_oracle(const Tensor& x, const CaWeights& w, int reduction) {
    const int c_n = x.dims[0], h = x.dims[1], wd = x.dims[2];
    const int mid = ca_mid_channels(c_n, reduction);

    std::vector<std::vector<double>> profile(h + wd, std::vector<double>(c_n, 0.0));
    for (int c = 0; c < c_n; ++c) {
        for (int y = 0; y < h; ++y) {
            double s = 0.0;
            for (int xx = 0; xx < wd; ++xx) s += x.at({c, y, xx});
            profile[y][c] = s / wd;
        }
        for (int xx = 0; xx < wd; ++xx) {
            double s = 0.0;
            for (int y = 0; y < h; ++y) s += x.at({c, y, xx});
            profile[h + xx][c] = s / h;
        }
    }

    std::vector<std::vector<double>> squeezed(h + wd, std::vector<double>(mid, 0.0));
    for (int p = 0; p < h + wd; ++p)
        for (int m = 0; m < mid; ++m) {
            double s = w.squeeze_b.data[m];
            for (int c = 0; c < c_n; ++c) s += w.squeeze_w.at({m, c}) * profile[p][c];
            squeezed[p][m] = hswish_ref(s);
        }

    auto gate = [&](const Tensor& gw, const Tensor& gb, int pos) {
        std::vector<double> g(c_n);
        for (int c = 0; c < c_n; ++c) {
            double s = gb.data[c];
            for (int m = 0; m < mid; ++m) s += gw.at({c, m}) * squeezed[pos][m];
            g[c] = sigmoid_ref(s);
        }
        return g;
    };

    Tensor out(x.dims);
    for (int y = 0; y < h; ++y) {
        auto gh = gate(w.gate_h_w, w.gate_h_b, y);
        for (int xx = 0; xx < wd; ++xx) {
            auto gw2 = gate(w.gate_w_w, w.gate_w_b, h + xx);
            for (int c = 0; c < c_n; ++c)
                out.at({c, y, xx}) = static_cast<float>(x.at({c, y, xx}) * gh[c] * gw2[c]);
        }
    }
    return out;
}

CaWeights random_ca_weights(int channels, int reduction, std::uint64_t seed) {
    const int mid = ca_mid_channels(channels, reduction);
    CaWeights w;
    w.squeeze_w = Tensor({mid, channels});
    w.squeeze_b = Tensor({mid});
    w.gate_h_w = Tensor({channels, mid});
    w.gate_h_b = Tensor({channels});
    w.gate_w_w = Tensor({channels, mid});
    w.gate_w_b = Tensor({channels});
    SplitMix64 rng(seed);
    for (Tensor* t : {&w.squeeze_w, &w.squeeze_b, &w.gate_h_w, &w.gate_h_b, &w.gate_w_w, &w.gate_w_b})
        oracle::fill_uniform(*t, rng);
    return w;
}

}  // namespace

TEST_CASE("video backbone trace is nineteen rows with the expected shapes") {
    NetworkDesc net = build_i3d(3, 4, 79, 224);
    CHECK(net.input_shape == Shape({3, 79, 224, 224}));
    check_trace(net, {
        {"conv1_7x7", "conv", {64, 40, 112, 112}},
        {"maxpool_2a", "maxpool", {64, 40, 56, 56}},
        {"conv2b_1x1", "conv", {64, 40, 56, 56}},
        {"conv2c_3x3", "conv", {192, 40, 56, 56}},
        {"maxpool_3a", "maxpool", {192, 40, 28, 28}},
        {"mixed_3b", "inception", {256, 40, 28, 28}},
        {"mixed_3c", "inception", {480, 40, 28, 28}},
        {"maxpool_4a", "maxpool", {480, 20, 14, 14}},
        {"mixed_4b", "inception", {512, 20, 14, 14}},
        {"mixed_4c", "inception", {512, 20, 14, 14}},
        {"mixed_4d", "inception", {512, 20, 14, 14}},
        {"mixed_4e", "inception", {528, 20, 14, 14}},
        {"mixed_4f", "inception", {832, 20, 14, 14}},
        {"maxpool_5a", "maxpool", {832, 10, 7, 7}},
        {"mixed_5b", "inception", {832, 10, 7, 7}},
        {"mixed_5c", "inception", {1024, 10, 7, 7}},
        {"avgpool", "avgpool", {1024, 9, 1, 1}},
        {"logits_conv", "conv", {4, 9, 1, 1}},
        {"temporal_mean", "temporal_mean", {4}},
    });
}

TEST_CASE("reduced profile folds through the same backbone") {
    NetworkDesc net = build_i3d(3, 4, 32, 112);
    auto rows = shape_trace(net, net.input_shape);
    REQUIRE(rows.size() == 19);
    CHECK(rows[0].output == Shape({64, 16, 56, 56}));
    CHECK(rows[7].output == Shape({480, 8, 7, 7}));
    CHECK(rows[13].output == Shape({832, 4, 3, 3}));
    CHECK(rows[16].output == Shape({1024, 3, 1, 1}));
    CHECK(rows[18].output == Shape({4}));
}

TEST_CASE("flow variant takes two input channels") {
    NetworkDesc net = build_i3d(2, 4, 32, 112);
    CHECK(net.input_shape == Shape({2, 32, 112, 112}));
    auto params = network_params(net);
    REQUIRE(!params.empty());
    CHECK(params[0].name == "conv1_7x7.weight");
    CHECK(params[0].dims == Shape({64, 2, 7, 7, 7}));
    auto rows = shape_trace(net, net.input_shape);
    CHECK(rows[0].output == Shape({64, 16, 56, 56}));
    CHECK(rows[18].output == Shape({4}));
}

TEST_CASE("audio network stacks thirteen convs with attention after chosen pools") {
    NetworkDesc three = build_cavgg16(VggVariant::three_ca, 4, 224);
    auto rows = shape_trace(three, three.input_shape);
    REQUIRE(rows.size() == 25);

    std::vector<std::string> ca_names;
    std::map<std::string, int> kind_counts;
    for (const auto& r : rows) {
        kind_counts[r.kind]++;
        if (r.kind == "coord_attn") ca_names.push_back(r.name);
    }
    CHECK(kind_counts["conv"] == 13);
    CHECK(kind_counts["maxpool"] == 5);
    CHECK(kind_counts["coord_attn"] == 3);
    CHECK(kind_counts["flatten"] == 1);
    CHECK(kind_counts["dense"] == 3);
    CHECK(ca_names == std::vector<std::string>({"ca1", "ca4", "ca5"}));

    CHECK(rows[0].name == "conv1_1");
    CHECK(rows[0].output == Shape({64, 224, 224}));
    CHECK(rows[rows.size() - 4].output == Shape({25088}));  // flatten of [512,7,7]
    CHECK(rows[rows.size() - 3].output == Shape({4096}));
    CHECK(rows[rows.size() - 1].output == Shape({4}));

    NetworkDesc five = build_cavgg16(VggVariant::five_ca, 4, 224);
    auto rows5 = shape_trace(five, five.input_shape);
    CHECK(rows5.size() == 27);
    int ca5 = 0;
    for (const auto& r : rows5) ca5 += r.kind == "coord_attn";
    CHECK(ca5 == 5);
}

TEST_CASE("audio network folds odd spatial sizes through its pools") {
    NetworkDesc net = build_cavgg16(VggVariant::three_ca, 4, 112);
    auto rows = shape_trace(net, net.input_shape);
    // 112 -> 56 -> 28 -> 14 -> 7 -> 3
    CHECK(rows[rows.size() - 4].output == Shape({512 * 3 * 3}));
    CHECK_THROWS_AS(build_cavgg16(VggVariant::three_ca, 4, 16), std::invalid_argument);
}

TEST_CASE("shape table lists every layer with aligned columns") {
    NetworkDesc net = build_i3d(3, 4, 79, 224);
    auto rows = shape_trace(net, net.input_shape);
    std::string table = format_shape_table(net, rows);
    CHECK(table.find("input (3,79,224,224)") != std::string::npos);
    CHECK(table.find("mixed_5c") != std::string::npos);
    CHECK(table.find("temporal_mean") != std::string::npos);
    // One header line, one column-title line, one line per layer.
    CHECK(std::count(table.begin(), table.end(), '\n') == static_cast<long>(rows.size()) + 2);
}

TEST_CASE("parameter inventory names tensors layer.role with conv fan rules") {
    NetworkDesc net = build_i3d(3, 4, 79, 224);
    auto params = network_params(net);

    std::map<std::string, ParamInfo> by_name;
    for (const auto& p : params) by_name[p.name] = p;
    // 4 plain convs + 9 blocks of 6 branch convs, weight+bias each.
    CHECK(params.size() == (4 + 9 * 6) * 2);

    const auto& stem = by_name.at("conv1_7x7.weight");
    CHECK(stem.dims == Shape({64, 3, 7, 7, 7}));
    CHECK(stem.fan_in == 3 * 343);
    CHECK(stem.fan_out == 64 * 343);
    const auto& stem_b = by_name.at("conv1_7x7.bias");
    CHECK(stem_b.dims == Shape({64}));
    CHECK(stem_b.fan_in == stem.fan_in);
    CHECK(stem_b.fan_out == stem.fan_out);

    CHECK(by_name.at("mixed_3b.b0.weight").dims == Shape({64, 192, 1, 1, 1}));
    CHECK(by_name.at("mixed_3b.b1_reduce.weight").dims == Shape({96, 192, 1, 1, 1}));
    CHECK(by_name.at("mixed_3b.b1_conv.weight").dims == Shape({128, 96, 3, 3, 3}));
    CHECK(by_name.at("mixed_3b.b2_reduce.weight").dims == Shape({16, 192, 1, 1, 1}));
    CHECK(by_name.at("mixed_3b.b2_conv.weight").dims == Shape({32, 16, 3, 3, 3}));
    CHECK(by_name.at("mixed_3b.b3_proj.weight").dims == Shape({32, 192, 1, 1, 1}));
    CHECK(by_name.at("mixed_3b.b1_conv.weight").fan_in == 96 * 27);
    CHECK(by_name.at("logits_conv.weight").dims == Shape({4, 1024, 1, 1, 1}));
}

TEST_CASE("audio network parameters include the attention bottlenecks") {
    NetworkDesc net = build_cavgg16(VggVariant::three_ca, 4, 224);
    auto params = network_params(net);
    std::map<std::string, ParamInfo> by_name;
    for (const auto& p : params) by_name[p.name] = p;
    // 13 convs + 3 dense, weight+bias, plus 3 attention blocks of 6 tensors.
    CHECK(params.size() == 16 * 2 + 3 * 6);

    CHECK(by_name.at("fc6.weight").dims == Shape({4096, 25088}));
    CHECK(by_name.at("fc6.weight").fan_in == 25088);
    CHECK(by_name.at("fc6.weight").fan_out == 4096);
    CHECK(by_name.at("conv3_2.weight").dims == Shape({256, 256, 3, 3}));

    // ca1 sits on 64 channels: mid = max(8, 64/16) = 8.
    CHECK(by_name.at("ca1.squeeze.weight").dims == Shape({8, 64}));
    CHECK(by_name.at("ca1.gate_h.weight").dims == Shape({64, 8}));
    CHECK(by_name.at("ca1.gate_w.weight").dims == Shape({64, 8}));
    // ca5 sits on 512 channels: mid = 32.
    CHECK(by_name.at("ca5.squeeze.weight").dims == Shape({32, 512}));
}

TEST_CASE("attention bottleneck width is max(8, channels/reduction)") {
    CHECK(ca_mid_channels(512, 16) == 32);
    CHECK(ca_mid_channels(256, 16) == 16);
    CHECK(ca_mid_channels(128, 16) == 8);
    CHECK(ca_mid_channels(64, 16) == 8);
    CHECK(ca_mid_channels(8, 16) == 8);
}

TEST_CASE("zero gate weights make attention an exact quarter-scale") {
    const int c_n = 6, h = 5, wd = 4;
    CaWeights w = random_ca_weights(c_n, 16, 31);
    for (Tensor* t : {&w.gate_h_w, &w.gate_h_b, &w.gate_w_w, &w.gate_w_b})
        std::fill(t->data.begin(), t->data.end(), 0.0f);

    Tensor x({c_n, h, wd});
    SplitMix64 rng(32);
    oracle::fill_uniform(x, rng, -2.0, 2.0);
    Tensor y = coordinate_attention(x, w, 16);
    REQUIRE(y.dims == x.dims);
    for (size_t i = 0; i < x.data.size(); ++i) CHECK(y.data[i] == 0.25f * x.data[i]);
}

TEST_CASE("attention matches a direct restatement of its rule") {
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        const int c_n = 4, h = 3, wd = 5;
        CaWeights w = random_ca_weights(c_n, 16, seed);
        Tensor x({c_n, h, wd});
        SplitMix64 rng(seed + 100);
        oracle::fill_uniform(x, rng, -1.5, 1.5);

        Tensor got = coordinate_attention(x, w, 16);
        Tensor want = ca_oracle(x, w, 16);
        CHECK(oracle::max_abs_diff(got, want) < 1e-6);

        // Gates are strictly inside (0,1): attention only attenuates.
        for (size_t i = 0; i < x.data.size(); ++i) {
            CHECK(std::abs(got.data[i]) <= std::abs(x.data[i]));
            if (x.data[i] != 0.0f) CHECK(std::signbit(got.data[i]) == std::signbit(x.data[i]));
        }
    }
}

TEST_CASE("attention validates weight shapes") {
    CaWeights w = random_ca_weights(8, 16, 5);
    Tensor x = Tensor::full({8, 4, 4}, 1.0f);
    w.gate_h_b = Tensor({7});
    CHECK_THROWS_AS(coordinate_attention(x, w, 16), std::invalid_argument);
}

TEST_CASE("inception block equals the composition of its public ops") {
    NetworkDesc net;
    net.name = "one_block";
    net.input_shape = {8, 3, 6, 6};
    InceptionLayer layer;
    layer.in_channels = 8;
    layer.b0 = 4;
    layer.b1 = {3, 6};
    layer.b2 = {2, 5};
    layer.b3_proj = 3;
    layer.rank = 3;
    net.num_classes = layer.out_channels();
    net.layers.push_back({"mix", layer});
    net.layers.push_back({"mean", TemporalMeanLayer{}});

    WeightStore w = synth_weights(77, net);
    Tensor x({8, 3, 6, 6});
    SplitMix64 rng(78);
    oracle::fill_uniform(x, rng);
    Tensor got = forward(net, w, x);

    auto conv_spec = [](int ci, int co, int k) {
        ConvSpec s;
        s.in_channels = ci;
        s.out_channels = co;
        s.kernel = {k, k, k};
        s.stride = {1, 1, 1};
        s.padding = {k == 3 ? 1 : 0, k == 3 ? 1 : 0, k == 3 ? 1 : 0};
        return s;
    };
    auto branch = [&](const Tensor& in, const std::string& n, const ConvSpec& s) {
        Tensor out = conv(in, w.get(n + ".weight"), w.get(n + ".bias"), s, 3);
        return activation(out, Activation::relu);
    };
    Tensor b0 = branch(x, "mix.b0", conv_spec(8, 4, 1));
    Tensor b1 = branch(branch(x, "mix.b1_reduce", conv_spec(8, 3, 1)), "mix.b1_conv", conv_spec(3, 6, 3));
    Tensor b2 = branch(branch(x, "mix.b2_reduce", conv_spec(8, 2, 1)), "mix.b2_conv", conv_spec(2, 5, 3));
    PoolSpec ps;
    ps.kind = PoolKind::max;
    ps.kernel = {3, 3, 3};
    ps.stride = {1, 1, 1};
    ps.padding = {1, 1, 1};
    Tensor b3 = branch(pool(x, ps, 3), "mix.b3_proj", conv_spec(8, 3, 1));
    Tensor cat = concat_channels({b0, b1, b2, b3});
    REQUIRE(cat.dims == Shape({18, 3, 6, 6}));

    // Temporal mean then the softmax head, in double as the network does.
    const std::int64_t inner = 3 * 6 * 6;
    Tensor logits({18});
    for (int c = 0; c < 18; ++c) {
        double s = 0.0;
        for (std::int64_t i = 0; i < inner; ++i) s += cat.data[c * inner + i];
        logits.data[c] = static_cast<float>(s / inner);
    }
    Tensor want = softmax(logits);
    CHECK(oracle::max_abs_diff(got, want) < 1e-6);
}

TEST_CASE("forward appends a softmax head unless one is explicit") {
    NetworkDesc plain;
    plain.name = "tiny";
    plain.input_shape = {6};
    plain.num_classes = 4;
    plain.layers.push_back({"logits", DenseLayer{6, 4, std::nullopt}});

    NetworkDesc taped = plain;
    taped.layers.push_back({"softmax", SoftmaxLayer{}});

    WeightStore w = synth_weights(9, plain);
    Tensor x({6});
    SplitMix64 rng(10);
    oracle::fill_uniform(x, rng);

    Tensor a = forward(plain, w, x);
    Tensor b = forward(taped, w, x);
    REQUIRE(a.dims == Shape({4}));
    CHECK(oracle::max_abs_diff(a, b) == 0.0);
    double sum = 0.0;
    for (float v : a.data) {
        CHECK(v > 0.0f);
        sum += v;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("forward validates input shape and missing weights") {
    NetworkDesc net = build_i3d(3, 4, 32, 112);
    WeightStore empty;
    Tensor wrong = Tensor::full({3, 16, 112, 112}, 0.0f);
    throws_containing([&] { forward(net, empty, wrong); }, "input");
    Tensor right = Tensor::full({3, 32, 112, 112}, 0.0f);
    throws_containing([&] { forward(net, empty, right); }, "missing tensor 'conv1_7x7.");
}
