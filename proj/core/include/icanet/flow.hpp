#pragma once

#include <cstdint>
#include <vector>

#include "icanet/tensor.hpp"

namespace icanet {

struct Point2f {
    float x = 0.0f;
    float y = 0.0f;
};

struct LkParams {
    int window = 21;            // odd square window side
    int pyramid_levels = 3;     // clamped so the window fits the top level
    int max_iters = 30;
    double epsilon = 0.01;      // stop when the update step is shorter
    int max_corners = 200;
    double quality_level = 0.01;
    double min_distance = 7.0;
};

struct FlowVectors {
    std::vector<Point2f> points;         // source positions in the first frame
    std::vector<Point2f> displacements;  // (dx,dy); zero when invalid
    std::vector<std::uint8_t> status;    // 1 tracked, 0 invalid
};

// Gray images are rank-2 tensors [H,W] with values in [0,1].

// Minimum-eigenvalue corner response over a 3x3 window of central-difference
// gradients; keeps responses above quality_level * max, strongest first
// (ties by (y,x)), greedily thinned to min_distance, capped at max_corners.
std::vector<Point2f> shi_tomasi_corners(const Tensor& image, const LkParams& params);

// Pyramidal Lucas-Kanade with bilinear sampling and forward-additive
// updates. Tracks become invalid when the gradient matrix at the finest
// level is near-singular (min eigenvalue < 1e-6) or the point leaves the
// image during iteration.
FlowVectors pyr_lk_flow(const Tensor& prev, const Tensor& next, const std::vector<Point2f>& points,
                        const LkParams& params);

// Splat valid tracks into a dense [2,H,W] field at their nearest source
// pixel (lround); collisions keep the smallest (y,x) source. Components are
// clamped to +-20 px then scaled by 1/20 into [-1,1].
Tensor rasterize_flow(const FlowVectors& flow, int height, int width);

// Gray frames -> [2, expected_frames, H, W]. Corners are re-detected on
// every frame; the last field is duplicated so field count matches frame
// count. frames.size() must equal expected_frames.
Tensor flow_sequence(const std::vector<Tensor>& frames, const LkParams& params, int expected_frames = 79);

}  // namespace icanet
