#include "icanet/flow.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace icanet {

namespace {

void check_gray(const Tensor& img, const char* op) {
    if (img.rank() != 2 || img.dims[0] < 1 || img.dims[1] < 1)
        throw std::invalid_argument(std::string(op) + ": expected a [H,W] gray image, got " + shape_str(img.dims));
}

struct GrayPlane {
    int h = 0, w = 0;
    std::vector<float> v;
};

GrayPlane to_plane(const Tensor& img) { return GrayPlane{img.dims[0], img.dims[1], img.data}; }

// Central differences, zero at the one-pixel border.
void gradients(const GrayPlane& img, GrayPlane& gx, GrayPlane& gy) {
    gx.h = gy.h = img.h;
    gx.w = gy.w = img.w;
    gx.v.assign(static_cast<std::size_t>(img.h) * img.w, 0.0f);
    gy.v.assign(static_cast<std::size_t>(img.h) * img.w, 0.0f);
    for (int y = 1; y + 1 < img.h; ++y)
        for (int x = 1; x + 1 < img.w; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * img.w + x;
            gx.v[i] = 0.5f * (img.v[i + 1] - img.v[i - 1]);
            gy.v[i] = 0.5f * (img.v[i + img.w] - img.v[i - img.w]);
        }
}

double sample_bilinear(const GrayPlane& img, double x, double y) {
    x = std::min(std::max(x, 0.0), static_cast<double>(img.w - 1));
    y = std::min(std::max(y, 0.0), static_cast<double>(img.h - 1));
    int x0 = static_cast<int>(x), y0 = static_cast<int>(y);
    if (x0 > img.w - 2) x0 = std::max(0, img.w - 2);
    if (y0 > img.h - 2) y0 = std::max(0, img.h - 2);
    const double ax = x - x0, ay = y - y0;
    const std::size_t i = static_cast<std::size_t>(y0) * img.w + x0;
    const double v00 = img.v[i];
    const double v01 = img.w > 1 ? img.v[i + 1] : v00;
    const double v10 = img.h > 1 ? img.v[i + img.w] : v00;
    const double v11 = (img.w > 1 && img.h > 1) ? img.v[i + img.w + 1] : v00;
    return (1 - ay) * ((1 - ax) * v00 + ax * v01) + ay * ((1 - ax) * v10 + ax * v11);
}

GrayPlane downsample2(const GrayPlane& img) {
    GrayPlane out;
    out.h = img.h / 2;
    out.w = img.w / 2;
    out.v.assign(static_cast<std::size_t>(out.h) * out.w, 0.0f);
    for (int y = 0; y < out.h; ++y)
        for (int x = 0; x < out.w; ++x) {
            const std::size_t i = static_cast<std::size_t>(2 * y) * img.w + 2 * x;
            out.v[static_cast<std::size_t>(y) * out.w + x] =
                0.25f * (img.v[i] + img.v[i + 1] + img.v[i + img.w] + img.v[i + img.w + 1]);
        }
    return out;
}

int usable_levels(int h, int w, const LkParams& p) {
    int levels = std::max(1, p.pyramid_levels);
    while (levels > 1) {
        const int top_h = h >> (levels - 1), top_w = w >> (levels - 1);
        if (std::min(top_h, top_w) >= p.window + 2) break;
        --levels;
    }
    return levels;
}

}  // namespace

std::vector<Point2f> shi_tomasi_corners(const Tensor& image, const LkParams& params) {
    check_gray(image, "shi_tomasi_corners");
    if (params.window < 3 || params.window % 2 == 0)
        throw std::invalid_argument("shi_tomasi_corners: window must be odd and >= 3");
    if (params.max_corners < 1 || params.quality_level <= 0.0 || params.min_distance < 0.0)
        throw std::invalid_argument("shi_tomasi_corners: bad corner parameters");
    const GrayPlane img = to_plane(image);
    GrayPlane gx, gy;
    gradients(img, gx, gy);

    const int h = img.h, w = img.w;
    std::vector<float> response(static_cast<std::size_t>(h) * w, 0.0f);
    float max_r = 0.0f;
    for (int y = 1; y + 1 < h; ++y)
        for (int x = 1; x + 1 < w; ++x) {
            double sxx = 0.0, sxy = 0.0, syy = 0.0;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    const std::size_t i = static_cast<std::size_t>(y + dy) * w + (x + dx);
                    const double a = gx.v[i], b = gy.v[i];
                    sxx += a * a;
                    sxy += a * b;
                    syy += b * b;
                }
            const double tr = 0.5 * (sxx + syy);
            const double det = std::sqrt(std::max(0.0, 0.25 * (sxx - syy) * (sxx - syy) + sxy * sxy));
            const float r = static_cast<float>(tr - det);
            response[static_cast<std::size_t>(y) * w + x] = r;
            max_r = std::max(max_r, r);
        }
    if (!(max_r > 0.0f)) return {};

    const float threshold = static_cast<float>(params.quality_level) * max_r;
    struct Candidate {
        float r;
        int y, x;
    };
    std::vector<Candidate> cands;
    for (int y = 1; y + 1 < h; ++y)
        for (int x = 1; x + 1 < w; ++x) {
            const float r = response[static_cast<std::size_t>(y) * w + x];
            if (r >= threshold) cands.push_back({r, y, x});
        }
    std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
        if (a.r != b.r) return a.r > b.r;
        if (a.y != b.y) return a.y < b.y;
        return a.x < b.x;
    });

    const double min_d2 = params.min_distance * params.min_distance;
    std::vector<Point2f> out;
    for (const Candidate& c : cands) {
        bool clear = true;
        for (const Point2f& p : out) {
            const double dx = p.x - c.x, dy = p.y - c.y;
            if (dx * dx + dy * dy < min_d2) {
                clear = false;
                break;
            }
        }
        if (!clear) continue;
        out.push_back({static_cast<float>(c.x), static_cast<float>(c.y)});
        if (static_cast<int>(out.size()) >= params.max_corners) break;
    }
    return out;
}

FlowVectors pyr_lk_flow(const Tensor& prev, const Tensor& next, const std::vector<Point2f>& points,
                        const LkParams& params) {
    check_gray(prev, "pyr_lk_flow");
    check_gray(next, "pyr_lk_flow");
    if (prev.dims != next.dims)
        throw std::invalid_argument("pyr_lk_flow: frame shapes differ, " + shape_str(prev.dims) + " vs " +
                                    shape_str(next.dims));
    if (params.window < 3 || params.window % 2 == 0)
        throw std::invalid_argument("pyr_lk_flow: window must be odd and >= 3");
    if (params.max_iters < 1 || params.epsilon <= 0.0)
        throw std::invalid_argument("pyr_lk_flow: bad iteration parameters");

    const int levels = usable_levels(prev.dims[0], prev.dims[1], params);
    std::vector<GrayPlane> pyr_prev(1, to_plane(prev)), pyr_next(1, to_plane(next));
    for (int l = 1; l < levels; ++l) {
        pyr_prev.push_back(downsample2(pyr_prev.back()));
        pyr_next.push_back(downsample2(pyr_next.back()));
    }
    std::vector<GrayPlane> grad_x(levels), grad_y(levels);
    for (int l = 0; l < levels; ++l) gradients(pyr_prev[l], grad_x[l], grad_y[l]);

    const int r = params.window / 2;
    const int taps = params.window * params.window;
    std::vector<double> tmpl(static_cast<std::size_t>(taps));
    std::vector<double> tgx(static_cast<std::size_t>(taps)), tgy(static_cast<std::size_t>(taps));

    FlowVectors out;
    out.points = points;
    out.displacements.assign(points.size(), Point2f{0.0f, 0.0f});
    out.status.assign(points.size(), 0);

    for (std::size_t pi = 0; pi < points.size(); ++pi) {
        const double px = points[pi].x, py = points[pi].y;
        if (px < r || py < r || px > prev.dims[1] - 1 - r || py > prev.dims[0] - 1 - r) continue;

        double dx = 0.0, dy = 0.0;
        bool lost = false;
        bool solvable = true;
        for (int l = levels - 1; l >= 0; --l) {
            const GrayPlane& ip = pyr_prev[l];
            const GrayPlane& in = pyr_next[l];
            const double scale = 1.0 / static_cast<double>(1 << l);
            const double cx = px * scale, cy = py * scale;

            double gxx = 0.0, gxy = 0.0, gyy = 0.0;
            int t = 0;
            for (int oy = -r; oy <= r; ++oy)
                for (int ox = -r; ox <= r; ++ox, ++t) {
                    const double sx = cx + ox, sy = cy + oy;
                    tmpl[t] = sample_bilinear(ip, sx, sy);
                    const double a = sample_bilinear(grad_x[l], sx, sy);
                    const double b = sample_bilinear(grad_y[l], sx, sy);
                    tgx[t] = a;
                    tgy[t] = b;
                    gxx += a * a;
                    gxy += a * b;
                    gyy += b * b;
                }
            const double tr = 0.5 * (gxx + gyy);
            const double disc = std::sqrt(std::max(0.0, 0.25 * (gxx - gyy) * (gxx - gyy) + gxy * gxy));
            const double min_eig = tr - disc;
            if (min_eig < 1e-6) {
                // Texture-free at this level; the finest level decides validity.
                solvable = l != 0;
                if (l == 0) break;
                dx *= 2.0;
                dy *= 2.0;
                continue;
            }
            const double det = gxx * gyy - gxy * gxy;

            for (int it = 0; it < params.max_iters; ++it) {
                const double qx = cx + dx, qy = cy + dy;
                if (qx < 0.0 || qy < 0.0 || qx > in.w - 1 || qy > in.h - 1) {
                    lost = true;
                    break;
                }
                double bx = 0.0, by = 0.0;
                t = 0;
                for (int oy = -r; oy <= r; ++oy)
                    for (int ox = -r; ox <= r; ++ox, ++t) {
                        const double diff = tmpl[t] - sample_bilinear(in, qx + ox, qy + oy);
                        bx += diff * tgx[t];
                        by += diff * tgy[t];
                    }
                const double ux = (gyy * bx - gxy * by) / det;
                const double uy = (gxx * by - gxy * bx) / det;
                dx += ux;
                dy += uy;
                if (std::sqrt(ux * ux + uy * uy) < params.epsilon) break;
            }
            if (lost) break;
            if (l > 0) {
                dx *= 2.0;
                dy *= 2.0;
            }
        }
        if (lost || !solvable) continue;
        const double fx = px + dx, fy = py + dy;
        if (fx < 0.0 || fy < 0.0 || fx > prev.dims[1] - 1 || fy > prev.dims[0] - 1) continue;
        out.displacements[pi] = {static_cast<float>(dx), static_cast<float>(dy)};
        out.status[pi] = 1;
    }
    return out;
}

Tensor rasterize_flow(const FlowVectors& flow, int height, int width) {
    if (height < 1 || width < 1) throw std::invalid_argument("rasterize_flow: bad field size");
    if (flow.points.size() != flow.displacements.size() || flow.points.size() != flow.status.size())
        throw std::invalid_argument("rasterize_flow: inconsistent track arrays");
    Tensor field(Shape{2, height, width});
    const std::int64_t plane = static_cast<std::int64_t>(height) * width;
    // Source coordinates of the track occupying each cell, for collision ties.
    std::vector<Point2f> owner(static_cast<std::size_t>(plane), Point2f{-1.0f, -1.0f});
    std::vector<bool> taken(static_cast<std::size_t>(plane), false);
    for (std::size_t i = 0; i < flow.points.size(); ++i) {
        if (!flow.status[i]) continue;
        const Point2f p = flow.points[i];
        const long col = std::lround(static_cast<double>(p.x));
        const long row = std::lround(static_cast<double>(p.y));
        if (col < 0 || row < 0 || col >= width || row >= height) continue;
        const std::size_t cell = static_cast<std::size_t>(row) * width + col;
        if (taken[cell]) {
            const Point2f o = owner[cell];
            if (p.y > o.y || (p.y == o.y && p.x >= o.x)) continue;
        }
        taken[cell] = true;
        owner[cell] = p;
        const double dx = std::min(std::max(static_cast<double>(flow.displacements[i].x), -20.0), 20.0);
        const double dy = std::min(std::max(static_cast<double>(flow.displacements[i].y), -20.0), 20.0);
        field.data[cell] = static_cast<float>(dx / 20.0);
        field.data[plane + cell] = static_cast<float>(dy / 20.0);
    }
    return field;
}

Tensor flow_sequence(const std::vector<Tensor>& frames, const LkParams& params, int expected_frames) {
    if (static_cast<int>(frames.size()) != expected_frames)
        throw std::invalid_argument("flow_sequence: got " + std::to_string(frames.size()) + " frames, expected " +
                                    std::to_string(expected_frames));
    if (expected_frames < 2) throw std::invalid_argument("flow_sequence: needs at least 2 frames");
    for (const Tensor& f : frames) {
        check_gray(f, "flow_sequence");
        if (f.dims != frames[0].dims)
            throw std::invalid_argument("flow_sequence: frame shapes differ, " + shape_str(f.dims) + " vs " +
                                        shape_str(frames[0].dims));
    }
    const int h = frames[0].dims[0], w = frames[0].dims[1];
    const int n = expected_frames;
    Tensor out(Shape{2, n, h, w});
    const std::int64_t plane = static_cast<std::int64_t>(h) * w;
    for (int t = 0; t + 1 < n; ++t) {
        const auto corners = shi_tomasi_corners(frames[t], params);
        const FlowVectors fv = pyr_lk_flow(frames[t], frames[t + 1], corners, params);
        const Tensor field = rasterize_flow(fv, h, w);
        for (int c = 0; c < 2; ++c)
            std::copy(field.data.begin() + c * plane, field.data.begin() + (c + 1) * plane,
                      out.data.begin() + (static_cast<std::int64_t>(c) * n + t) * plane);
    }
    // Duplicate the last field so the temporal extent matches the frame count.
    for (int c = 0; c < 2; ++c) {
        const auto src = out.data.begin() + (static_cast<std::int64_t>(c) * n + (n - 2)) * plane;
        std::copy(src, src + plane, out.data.begin() + (static_cast<std::int64_t>(c) * n + (n - 1)) * plane);
    }
    return out;
}

}  // namespace icanet
