#include "icanet/colormap.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace icanet {

namespace {

// Degree-6 polynomial fit of the map, one coefficient row per power of t.
constexpr double kPoly[7][3] = {
    {0.2777273272234177, 0.005407344544966578, 0.3340998053353061},
    {0.1050930431085774, 1.404613529898575, 1.384590162594685},
    {-0.3308618287255563, 0.214847559468213, 0.09509516302823659},
    {-4.634230498983486, -5.799100973351585, -19.33244095627987},
    {6.228269936347081, 14.17993336680509, 56.69055260068105},
    {4.776384997670288, -13.74514537774601, -65.35303263337234},
    {-5.435455855934631, 4.645852612178535, 26.3124352495832},
};

double poly_eval(int channel, double t) {
    double v = kPoly[6][channel];
    for (int p = 5; p >= 0; --p) v = v * t + kPoly[p][channel];
    return std::min(1.0, std::max(0.0, v));
}

}  // namespace

const Colormap& default_colormap() {
    static const Colormap map = [] {
        Colormap m;
        for (int i = 0; i < 256; ++i) {
            const double t = static_cast<double>(i) / 255.0;
            for (int c = 0; c < 3; ++c) m.rgb[i][c] = static_cast<float>(poly_eval(c, t));
        }
        return m;
    }();
    return map;
}

Colormap load_colormap(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_colormap: cannot open " + path);
    Colormap map;
    std::string line;
    int row = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (row >= 256) throw std::runtime_error("load_colormap: " + path + " has more than 256 entries");
        std::istringstream ls(line);
        double r, g, b;
        if (!(ls >> r >> g >> b))
            throw std::runtime_error("load_colormap: " + path + " line " + std::to_string(row + 1) +
                                     ": expected three reals");
        for (double v : {r, g, b})
            if (!(v >= 0.0 && v <= 1.0))
                throw std::runtime_error("load_colormap: " + path + " line " + std::to_string(row + 1) +
                                         ": component outside [0,1]");
        map.rgb[row] = {static_cast<float>(r), static_cast<float>(g), static_cast<float>(b)};
        ++row;
    }
    if (row != 256)
        throw std::runtime_error("load_colormap: " + path + " has " + std::to_string(row) + " entries, expected 256");
    return map;
}

void save_colormap(const Colormap& map, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_colormap: cannot open " + path);
    char buf[64];
    for (int i = 0; i < 256; ++i) {
        std::snprintf(buf, sizeof(buf), "%.9f %.9f %.9f\n", map.rgb[i][0], map.rgb[i][1], map.rgb[i][2]);
        out << buf;
    }
    if (!out) throw std::runtime_error("save_colormap: write failed for " + path);
}

Tensor render_spectrogram(const Tensor& features, const Colormap& map, int size) {
    if (features.rank() != 2)
        throw std::invalid_argument("render_spectrogram: features must be [frames,features], got " +
                                    shape_str(features.dims));
    if (size <= 0) throw std::invalid_argument("render_spectrogram: size must be positive");
    const int frames = features.dims[0], feats = features.dims[1];

    float lo = features.data[0], hi = features.data[0];
    for (float v : features.data) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const bool flat = !(hi > lo);
    const double span = flat ? 1.0 : static_cast<double>(hi) - lo;

    Tensor img(Shape{3, size, size});
    const std::int64_t plane = static_cast<std::int64_t>(size) * size;
    for (int y = 0; y < size; ++y) {
        // Feature index 0 renders at the bottom of the image.
        const int f = static_cast<int>((static_cast<std::int64_t>(size - 1 - y) * feats) / size);
        for (int x = 0; x < size; ++x) {
            const int t = static_cast<int>((static_cast<std::int64_t>(x) * frames) / size);
            const double raw = features.data[static_cast<std::size_t>(t) * feats + f];
            const double v = flat ? 0.5 : (raw - lo) / span;
            const int idx = static_cast<int>(std::lround(v * 255.0));
            const auto& rgb = map.rgb[std::min(255, std::max(0, idx))];
            const std::int64_t off = static_cast<std::int64_t>(y) * size + x;
            img.data[off] = rgb[0];
            img.data[plane + off] = rgb[1];
            img.data[2 * plane + off] = rgb[2];
        }
    }
    return img;
}

}  // namespace icanet
