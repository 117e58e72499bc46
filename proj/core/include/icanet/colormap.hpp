#pragma once

#include <array>
#include <string>

#include "icanet/tensor.hpp"

namespace icanet {

// 256-entry RGB lookup table, components in [0,1].
struct Colormap {
    std::array<std::array<float, 3>, 256> rgb{};
};

// Perceptually uniform dark-blue -> green -> yellow map evaluated from a
// degree-6 polynomial fit; identical data ships in core/data/viridis256.txt.
const Colormap& default_colormap();

// File format: 256 lines, each "r g b" as reals in [0,1].
Colormap load_colormap(const std::string& path);
void save_colormap(const Colormap& map, const std::string& path);

// features [T,F] -> image [3,size,size]. Min-max normalized per call
// (constant input maps to 0.5), nearest-neighbor resampled, time along x,
// feature index 0 at the bottom row, lround(v*255) into the LUT.
Tensor render_spectrogram(const Tensor& features, const Colormap& map, int size = 224);

}  // namespace icanet
