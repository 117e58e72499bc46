#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <set>

#include "icanet/fixtures.hpp"
#include "icanet/nets.hpp"
#include "icanet/rng.hpp"

using namespace icanet;

TEST_CASE("generator reproduces the published reference stream") {
    SplitMix64 rng(0);
    CHECK(rng.next() == 0xe220a8397b1dcdafull);
    CHECK(rng.next() == 0x6e789e6aa1b965f4ull);
    CHECK(rng.next() == 0x06c45d188009454full);
    CHECK(rng.next() == 0xf88bb8a8724c81ecull);
    SplitMix64 rng42(42);
    CHECK(rng42.next() == 0xbdd732262feb6e95ull);
    CHECK(rng42.next() == 0x28efe333b266f103ull);
}

TEST_CASE("hash reproduces the published reference values") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
    CHECK(fnv1a64("foobar") == 0x85944171f73967e8ull);
}

TEST_CASE("unit draws live in [0,1) and look uniform") {
    SplitMix64 rng(7);
    double sum = 0.0;
    for (int i = 0; i < 20000; ++i) {
        const double u = rng.next_unit();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
    }
    CHECK(sum / 20000.0 == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("bounded draws stay in range and reach both ends") {
    SplitMix64 rng(9);
    std::set<std::uint64_t> seen;
    for (int i = 0; i < 200; ++i) {
        const std::uint64_t v = rng.next_below(7);
        REQUIRE(v < 7);
        seen.insert(v);
    }
    CHECK(seen.size() == 7);
    CHECK(rng.next_below(1) == 0);
}

TEST_CASE("derived streams are reproducible and decorrelated") {
    CHECK(derive_seed(5, "alpha") == derive_seed(5, "alpha"));
    CHECK(derive_seed(5, "alpha") != derive_seed(5, "beta"));
    CHECK(derive_seed(5, "alpha") != derive_seed(6, "alpha"));

    SplitMix64 a(derive_seed(5, "alpha"));
    SplitMix64 b(derive_seed(5, "beta"));
    int same = 0;
    for (int i = 0; i < 64; ++i)
        if (a.next() == b.next()) ++same;
    CHECK(same == 0);
}

TEST_CASE("generated weights respect the fan-based bound per tensor") {
    const NetworkDesc net = build_cavgg16(VggVariant::three_ca, 4, 32);
    const WeightStore store = synth_weights(123, net);
    const auto params = network_params(net);
    CHECK(store.size() == params.size());
    for (const ParamInfo& info : params) {
        const double bound = std::sqrt(6.0 / static_cast<double>(info.fan_in + info.fan_out));
        const Tensor& t = store.get(info.name);
        REQUIRE(t.dims == info.dims);
        double lo = 0.0, hi = 0.0;
        for (float v : t.data) {
            REQUIRE(std::abs(v) <= bound);
            lo = std::min(lo, static_cast<double>(v));
            hi = std::max(hi, static_cast<double>(v));
        }
        if (t.size() > 64) {  // draws should fill the interval reasonably
            CHECK(lo < -0.5 * bound);
            CHECK(hi > 0.5 * bound);
        }
    }

    const WeightStore again = synth_weights(123, net);
    CHECK(again.get("conv1_1.weight").data == store.get("conv1_1.weight").data);
    const WeightStore other = synth_weights(124, net);
    CHECK(other.get("conv1_1.weight").data != store.get("conv1_1.weight").data);
    CHECK(store.get("conv1_1.weight").data[0] != store.get("conv1_2.weight").data[0]);
}
