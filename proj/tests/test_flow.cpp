#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <vector>

#include "icanet/flow.hpp"
#include "oracles.hpp"

using namespace icanet;

namespace {

Tensor gray_image(int h, int w, float value = 0.0f) { return Tensor::full({h, w}, value); }

// Smooth wraparound texture so a shifted copy is exact everywhere.
Tensor sinusoid(int h, int w, double wave_x, double wave_y, double shift_x = 0.0, double shift_y = 0.0) {
    Tensor img({h, w});
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            img.at({y, x}) = static_cast<float>(0.5 + 0.2 * std::sin(2.0 * std::numbers::pi * (x - shift_x) / wave_x) +
                                                0.2 * std::sin(2.0 * std::numbers::pi * (y - shift_y) / wave_y));
    return img;
}

}  // namespace

TEST_CASE("corner detector finds the four corners of a bright square") {
    Tensor img = gray_image(24, 24);
    for (int y = 9; y <= 14; ++y)
        for (int x = 9; x <= 14; ++x) img.at({y, x}) = 1.0f;

    LkParams p;
    p.max_corners = 16;
    p.min_distance = 2.0;
    auto corners = shi_tomasi_corners(img, p);
    REQUIRE(corners.size() >= 4);
    CHECK(corners.size() <= 16);

    const float expect[4][2] = {{9, 9}, {9, 14}, {14, 9}, {14, 14}};  // (y,x)
    for (const auto& [ey, ex] : expect) {
        bool hit = false;
        for (const auto& c : corners)
            if (std::abs(c.y - ey) <= 1.5f && std::abs(c.x - ex) <= 1.5f) hit = true;
        CHECK_MESSAGE(hit, "no corner near (" << ey << "," << ex << ")");
    }
}

TEST_CASE("corner detector returns nothing for a featureless image") {
    LkParams p;
    CHECK(shi_tomasi_corners(gray_image(32, 32, 0.7f), p).empty());
}

TEST_CASE("corner list respects the cap and the spacing radius") {
    Tensor img({40, 40});
    SplitMix64 rng(21);
    for (auto& v : img.data) v = static_cast<float>(rng.next_unit());
    LkParams p;
    p.max_corners = 12;
    p.min_distance = 5.0;
    auto corners = shi_tomasi_corners(img, p);
    REQUIRE(!corners.empty());
    CHECK(corners.size() <= 12);
    for (size_t i = 0; i < corners.size(); ++i)
        for (size_t j = i + 1; j < corners.size(); ++j) {
            const double dy = corners[i].y - corners[j].y, dx = corners[i].x - corners[j].x;
            CHECK(std::sqrt(dy * dy + dx * dx) >= 5.0);
        }
}

TEST_CASE("tracker recovers an integer shift on textured frames") {
    Tensor prev = sinusoid(64, 64, 9.0, 7.0);
    Tensor next = sinusoid(64, 64, 9.0, 7.0, 2.0, -3.0);  // content moves +2 in x, -3 in y
    std::vector<Point2f> pts = {{20, 20}, {32, 32}, {40, 26}, {26, 40}};

    LkParams p;
    auto flow = pyr_lk_flow(prev, next, pts, p);
    REQUIRE(flow.points.size() == pts.size());
    REQUIRE(flow.displacements.size() == pts.size());
    REQUIRE(flow.status.size() == pts.size());
    for (size_t i = 0; i < pts.size(); ++i) {
        REQUIRE(flow.status[i] == 1);
        CHECK(std::abs(flow.displacements[i].x - 2.0f) < 0.1f);
        CHECK(std::abs(flow.displacements[i].y - (-3.0f)) < 0.1f);
    }
}

TEST_CASE("tracker resolves subpixel motion") {
    Tensor prev = sinusoid(64, 64, 11.0, 9.0);
    Tensor next = sinusoid(64, 64, 11.0, 9.0, 0.3, 0.2);
    std::vector<Point2f> pts = {{24, 24}, {36, 30}};
    LkParams p;
    auto flow = pyr_lk_flow(prev, next, pts, p);
    for (size_t i = 0; i < pts.size(); ++i) {
        REQUIRE(flow.status[i] == 1);
        CHECK(std::abs(flow.displacements[i].x - 0.3f) < 0.1f);
        CHECK(std::abs(flow.displacements[i].y - 0.2f) < 0.1f);
    }
}

TEST_CASE("pyramid levels let the tracker catch motion wider than half a window") {
    Tensor prev = sinusoid(96, 96, 26.0, 22.0);
    Tensor next = sinusoid(96, 96, 26.0, 22.0, 6.5, -4.25);
    std::vector<Point2f> pts = {{40, 40}, {48, 52}};
    LkParams p;
    auto flow = pyr_lk_flow(prev, next, pts, p);
    for (size_t i = 0; i < pts.size(); ++i) {
        REQUIRE(flow.status[i] == 1);
        CHECK(std::abs(flow.displacements[i].x - 6.5f) < 0.2f);
        CHECK(std::abs(flow.displacements[i].y - (-4.25f)) < 0.2f);
    }
}

TEST_CASE("zero motion tracks to zero displacement") {
    Tensor img = sinusoid(64, 64, 9.0, 7.0);
    std::vector<Point2f> pts = {{30, 28}};
    LkParams p;
    auto flow = pyr_lk_flow(img, img, pts, p);
    REQUIRE(flow.status[0] == 1);
    CHECK(std::abs(flow.displacements[0].x) < 1e-3f);
    CHECK(std::abs(flow.displacements[0].y) < 1e-3f);
}

TEST_CASE("untrackable points are flagged invalid with zero displacement") {
    LkParams p;
    SUBCASE("featureless neighborhood") {
        Tensor flat = gray_image(64, 64, 0.4f);
        auto flow = pyr_lk_flow(flat, flat, {{32, 32}}, p);
        CHECK(flow.status[0] == 0);
        CHECK(flow.displacements[0].x == 0.0f);
        CHECK(flow.displacements[0].y == 0.0f);
    }
    SUBCASE("point too close to the border for the window") {
        Tensor img = sinusoid(64, 64, 9.0, 7.0);
        auto flow = pyr_lk_flow(img, img, {{3, 3}}, p);
        CHECK(flow.status[0] == 0);
    }
    SUBCASE("mismatched frame sizes throw") {
        CHECK_THROWS_AS(pyr_lk_flow(gray_image(32, 32), gray_image(32, 33), {{16, 16}}, p),
                        std::invalid_argument);
    }
}

TEST_CASE("rasterizer splats at the rounded source pixel with 1/20 scaling") {
    FlowVectors flow;
    flow.points = {{3.4f, 7.6f}};  // (x, y)
    flow.displacements = {{10.0f, -5.0f}};
    flow.status = {1};
    Tensor field = rasterize_flow(flow, 12, 12);
    REQUIRE(field.dims == Shape({2, 12, 12}));
    for (int c = 0; c < 2; ++c)
        for (int y = 0; y < 12; ++y)
            for (int x = 0; x < 12; ++x) {
                const float v = field.at({c, y, x});
                if (y == 8 && x == 3)
                    CHECK(v == (c == 0 ? 0.5f : -0.25f));
                else
                    CHECK(v == 0.0f);
            }
}

TEST_CASE("rasterizer clamps displacements to +-20 pixels") {
    FlowVectors flow;
    flow.points = {{5.0f, 5.0f}};
    flow.displacements = {{50.0f, -30.0f}};
    flow.status = {1};
    Tensor field = rasterize_flow(flow, 10, 10);
    CHECK(field.at({0, 5, 5}) == 1.0f);
    CHECK(field.at({1, 5, 5}) == -1.0f);
}

TEST_CASE("colliding tracks keep the smallest (y,x) source regardless of order") {
    FlowVectors ab;
    ab.points = {{3.0f, 8.4f}, {3.4f, 7.6f}};  // both round to row 8, col 3
    ab.displacements = {{4.0f, 4.0f}, {-6.0f, 2.0f}};
    ab.status = {1, 1};
    FlowVectors ba;
    ba.points = {ab.points[1], ab.points[0]};
    ba.displacements = {ab.displacements[1], ab.displacements[0]};
    ba.status = {1, 1};

    for (const auto& flow : {ab, ba}) {
        Tensor field = rasterize_flow(flow, 12, 12);
        // (y=7.6, x=3.4) < (y=8.4, x=3.0), so its displacement wins.
        CHECK(field.at({0, 8, 3}) == doctest::Approx(-6.0 / 20.0));
        CHECK(field.at({1, 8, 3}) == doctest::Approx(2.0 / 20.0));
    }
}

TEST_CASE("invalid tracks leave the field untouched") {
    FlowVectors flow;
    flow.points = {{4.0f, 4.0f}};
    flow.displacements = {{0.0f, 0.0f}};
    flow.status = {0};
    Tensor field = rasterize_flow(flow, 8, 8);
    for (float v : field.data) CHECK(v == 0.0f);
}

TEST_CASE("flow sequences track a drifting square and duplicate the last field") {
    const int n = 4, size = 48;
    std::vector<Tensor> frames;
    for (int t = 0; t < n; ++t) {
        Tensor img = gray_image(size, size);
        for (int y = 16; y < 26; ++y)
            for (int x = 16 + t; x < 26 + t; ++x) img.at({y, x}) = 1.0f;
        frames.push_back(std::move(img));
    }
    LkParams p;
    p.window = 9;
    p.min_distance = 3.0;
    Tensor seq = flow_sequence(frames, p, n);
    REQUIRE(seq.dims == Shape({2, n, size, size}));

    auto field_sum = [&](int c, int t) {
        double s = 0.0;
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x) s += std::abs(seq.at({c, t, y, x}));
        return s;
    };
    for (int t = 0; t < n - 1; ++t) CHECK(field_sum(0, t) > 0.0);
    // The final field repeats the previous one.
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x)
            for (int c = 0; c < 2; ++c) CHECK(seq.at({c, n - 1, y, x}) == seq.at({c, n - 2, y, x}));
    // Horizontal drift dominates vertical.
    CHECK(field_sum(0, 0) > field_sum(1, 0));
}

TEST_CASE("flow sequences validate the frame count") {
    std::vector<Tensor> frames(3, gray_image(32, 32, 0.5f));
    LkParams p;
    CHECK_THROWS_AS(flow_sequence(frames, p, 4), std::invalid_argument);
    CHECK_THROWS_AS(flow_sequence({gray_image(32, 32)}, p, 1), std::invalid_argument);
}
