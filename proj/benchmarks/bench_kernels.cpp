#include <benchmark/benchmark.h>

#include "icanet/flow.hpp"
#include "icanet/lfcc.hpp"
#include "icanet/nets.hpp"
#include "icanet/rng.hpp"
#include "icanet/tensor.hpp"

using namespace icanet;

namespace {

Tensor random_tensor(Shape dims, std::uint64_t seed) {
    Tensor t(std::move(dims));
    SplitMix64 rng(seed);
    for (float& v : t.data) v = static_cast<float>(rng.next_uniform(-1.0, 1.0));
    return t;
}

ConvSpec spec3d(int ci, int co, int k, int s, int p) {
    ConvSpec spec;
    spec.in_channels = ci;
    spec.out_channels = co;
    spec.kernel = {k, k, k};
    spec.stride = {s, s, s};
    spec.padding = {p, p, p};
    return spec;
}

double conv_macs(const ConvSpec& spec, const Shape& in) {
    double taps = spec.in_channels;
    for (int k : spec.kernel) taps *= k;
    double out = spec.out_channels;
    for (std::size_t a = 1; a < in.size(); ++a)
        out *= conv_output_extent(in[a], spec.padding[a - 1], spec.kernel[a - 1], spec.stride[a - 1]);
    return taps * out;
}

void bench_conv(benchmark::State& state, Shape in_dims, ConvSpec spec) {
    const Tensor in = random_tensor(in_dims, 1);
    Shape w_dims{spec.out_channels, spec.in_channels};
    for (int k : spec.kernel) w_dims.push_back(k);
    const Tensor w = random_tensor(w_dims, 2);
    const Tensor b = random_tensor(Shape{spec.out_channels}, 3);
    for (auto _ : state) {
        Tensor out = conv(in, w, b, spec, static_cast<int>(spec.kernel.size()));
        benchmark::DoNotOptimize(out.data.data());
    }
    state.counters["GMAC/s"] =
        benchmark::Counter(conv_macs(spec, in_dims) * 1e-9, benchmark::Counter::kIsIterationInvariantRate);
}

// Small-profile stages that dominate an end-to-end run.
void BM_conv_stem_small(benchmark::State& s) { bench_conv(s, {3, 32, 112, 112}, spec3d(3, 64, 7, 2, 3)); }
void BM_conv2c_small(benchmark::State& s) { bench_conv(s, {64, 16, 28, 28}, spec3d(64, 192, 3, 1, 1)); }
void BM_conv_1x1_mixed4(benchmark::State& s) { bench_conv(s, {512, 8, 7, 7}, spec3d(512, 160, 1, 1, 0)); }
void BM_conv_3x3x3_mixed3(benchmark::State& s) { bench_conv(s, {128, 16, 14, 14}, spec3d(128, 192, 3, 1, 1)); }
void BM_conv_3x3x3_mixed4(benchmark::State& s) { bench_conv(s, {112, 8, 7, 7}, spec3d(112, 224, 3, 1, 1)); }

void BM_vgg_conv2_small(benchmark::State& s) {
    ConvSpec spec;
    spec.in_channels = 128;
    spec.out_channels = 128;
    spec.kernel = {3, 3};
    spec.stride = {1, 1};
    spec.padding = {1, 1};
    bench_conv(s, {128, 28, 28}, spec);
}

void BM_lfcc_one_second(benchmark::State& state) {
    AudioSignal tone;
    tone.sample_rate = 16000;
    tone.samples.resize(16000);
    SplitMix64 rng(4);
    for (float& v : tone.samples) v = static_cast<float>(rng.next_uniform(-0.5, 0.5));
    const LfccParams params;
    for (auto _ : state) {
        Tensor f = lfcc_features(tone, params);
        benchmark::DoNotOptimize(f.data.data());
    }
}

void BM_lk_frame_pair(benchmark::State& state) {
    const int n = 112;
    Tensor a(Shape{n, n}), b(Shape{n, n});
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            const double v = 0.5 + 0.2 * std::sin(x / 3.1) * std::cos(y / 2.7) + 0.15 * std::sin((x + 2 * y) / 5.3);
            a.at({y, x}) = static_cast<float>(v);
            const double w = 0.5 + 0.2 * std::sin((x - 1.0) / 3.1) * std::cos((y - 1.0) / 2.7) +
                             0.15 * std::sin((x - 1.0 + 2.0 * (y - 1.0)) / 5.3);
            b.at({y, x}) = static_cast<float>(w);
        }
    const LkParams params;
    for (auto _ : state) {
        const auto corners = shi_tomasi_corners(a, params);
        FlowVectors fv = pyr_lk_flow(a, b, corners, params);
        benchmark::DoNotOptimize(fv.status.data());
    }
}

}  // namespace

BENCHMARK(BM_conv_stem_small)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_conv2c_small)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_conv_3x3x3_mixed3)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_conv_1x1_mixed4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_conv_3x3x3_mixed4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_vgg_conv2_small)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_lfcc_one_second)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_lk_frame_pair)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
