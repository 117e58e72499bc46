#include "icanet/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace icanet {

std::int64_t shape_volume(const Shape& dims) {
    std::int64_t n = 1;
    for (int d : dims) {
        if (d <= 0) throw std::invalid_argument("shape_volume: non-positive dim in " + shape_str(dims));
        n *= d;
    }
    return n;
}

std::string shape_str(const Shape& dims) {
    std::string s = "(";
    for (std::size_t i = 0; i < dims.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(dims[i]);
    }
    s += ")";
    return s;
}

Tensor::Tensor(Shape d) : dims(std::move(d)), data(static_cast<std::size_t>(shape_volume(dims)), 0.0f) {}

Tensor::Tensor(Shape d, std::vector<float> values) : dims(std::move(d)), data(std::move(values)) {
    if (static_cast<std::int64_t>(data.size()) != shape_volume(dims))
        throw std::invalid_argument("Tensor: value count " + std::to_string(data.size()) +
                                    " does not match shape " + shape_str(dims));
}

Tensor Tensor::full(Shape d, float value) {
    Tensor t(std::move(d));
    std::fill(t.data.begin(), t.data.end(), value);
    return t;
}

namespace {

std::int64_t flat_index(const Shape& dims, std::initializer_list<int> idx) {
    if (static_cast<int>(idx.size()) != static_cast<int>(dims.size()))
        throw std::invalid_argument("Tensor::at: rank mismatch");
    std::int64_t off = 0;
    int axis = 0;
    for (int i : idx) {
        if (i < 0 || i >= dims[axis])
            throw std::out_of_range("Tensor::at: index " + std::to_string(i) + " out of range on axis " +
                                    std::to_string(axis) + " of " + shape_str(dims));
        off = off * dims[axis] + i;
        ++axis;
    }
    return off;
}

}  // namespace

float& Tensor::at(std::initializer_list<int> idx) { return data[static_cast<std::size_t>(flat_index(dims, idx))]; }
float Tensor::at(std::initializer_list<int> idx) const { return data[static_cast<std::size_t>(flat_index(dims, idx))]; }

int conv_output_extent(int extent, int pad, int kernel, int stride) {
    if (extent <= 0 || kernel <= 0 || stride <= 0 || pad < 0)
        throw std::invalid_argument("conv_output_extent: bad geometry (extent " + std::to_string(extent) +
                                    ", pad " + std::to_string(pad) + ", kernel " + std::to_string(kernel) +
                                    ", stride " + std::to_string(stride) + ")");
    int padded = extent + 2 * pad;
    if (padded < kernel)
        throw std::invalid_argument("conv_output_extent: kernel " + std::to_string(kernel) +
                                    " exceeds padded extent " + std::to_string(padded));
    return (padded - kernel) / stride + 1;
}

namespace {

struct Geometry {
    int channels = 1;
    int in[3] = {1, 1, 1};
    int out[3] = {1, 1, 1};
    int kernel[3] = {1, 1, 1};
    int stride[3] = {1, 1, 1};
    int pad[3] = {0, 0, 0};
};

// Normalizes rank-2/3 spatial parameters to three axes (t,y,x), with the
// leading axis degenerate for rank 2.
Geometry make_geometry(const Shape& input, const std::vector<int>& kernel, const std::vector<int>& stride,
                       const std::vector<int>& padding, int rank, const char* op) {
    if (rank != 2 && rank != 3)
        throw std::invalid_argument(std::string(op) + ": rank must be 2 or 3, got " + std::to_string(rank));
    if (static_cast<int>(input.size()) != rank + 1)
        throw std::invalid_argument(std::string(op) + ": input " + shape_str(input) + " is not rank " +
                                    std::to_string(rank + 1));
    if (static_cast<int>(kernel.size()) != rank || static_cast<int>(stride.size()) != rank ||
        static_cast<int>(padding.size()) != rank)
        throw std::invalid_argument(std::string(op) + ": kernel/stride/padding must each have " +
                                    std::to_string(rank) + " entries");
    Geometry g;
    g.channels = input[0];
    int base = 3 - rank;
    for (int a = 0; a < rank; ++a) {
        g.in[base + a] = input[1 + a];
        g.kernel[base + a] = kernel[a];
        g.stride[base + a] = stride[a];
        g.pad[base + a] = padding[a];
    }
    for (int a = 0; a < 3; ++a) g.out[a] = conv_output_extent(g.in[a], g.pad[a], g.kernel[a], g.stride[a]);
    return g;
}

// Output range [lo,hi) for which in = out*stride + k - pad lands in bounds.
void valid_out_range(int k, int pad, int stride, int in_extent, int out_extent, int& lo, int& hi) {
    int shift = k - pad;
    lo = 0;
    if (shift < 0) lo = (-shift + stride - 1) / stride;
    hi = out_extent;
    int last = in_extent - 1 - shift;
    if (last < 0)
        hi = 0;
    else
        hi = std::min(hi, last / stride + 1);
    if (hi < lo) hi = lo;
}

}  // namespace

Tensor conv(const Tensor& input, const Tensor& weights, const Tensor& bias, const ConvSpec& spec, int rank) {
    Geometry g = make_geometry(input.dims, spec.kernel, spec.stride, spec.padding, rank, "conv");
    if (g.channels != spec.in_channels)
        throw std::invalid_argument("conv: input has " + std::to_string(g.channels) + " channels, spec expects " +
                                    std::to_string(spec.in_channels));
    Shape want_w;
    want_w.push_back(spec.out_channels);
    want_w.push_back(spec.in_channels);
    for (int k : spec.kernel) want_w.push_back(k);
    if (weights.dims != want_w)
        throw std::invalid_argument("conv: weights " + shape_str(weights.dims) + ", expected " + shape_str(want_w));
    if (!bias.dims.empty() && bias.dims != Shape{spec.out_channels})
        throw std::invalid_argument("conv: bias " + shape_str(bias.dims) + ", expected (" +
                                    std::to_string(spec.out_channels) + ")");

    const int ci_n = spec.in_channels, co_n = spec.out_channels;
    const int it = g.in[0], iy = g.in[1], ix = g.in[2];
    const int ot = g.out[0], oy = g.out[1], ox = g.out[2];
    const int kt = g.kernel[0], ky = g.kernel[1], kx = g.kernel[2];
    const int st = g.stride[0], sy = g.stride[1], sx = g.stride[2];
    const int pt = g.pad[0], py = g.pad[1], px = g.pad[2];

    Shape out_dims;
    out_dims.push_back(co_n);
    if (rank == 3) out_dims.push_back(ot);
    out_dims.push_back(oy);
    out_dims.push_back(ox);
    Tensor out(out_dims);

    const std::int64_t in_plane = static_cast<std::int64_t>(it) * iy * ix;
    const std::int64_t out_plane = static_cast<std::int64_t>(ot) * oy * ox;
    const std::int64_t w_per_co = static_cast<std::int64_t>(ci_n) * kt * ky * kx;
    const float* in_base = input.data.data();
    const float* w_base = weights.data.data();

    // Accumulate whole output planes for a block of output channels in double,
    // visiting taps in (ci, kt, ky, kx) order per output element.
    // Pointwise stride-1 convolutions see the planes as flat arrays.
    const bool pointwise = kt == 1 && ky == 1 && kx == 1 && st == 1 && sy == 1 && sx == 1 && pt == 0 && py == 0 &&
                           px == 0;

    constexpr int kBlock = 4;
    std::vector<double> acc(static_cast<std::size_t>(kBlock) * out_plane);
    for (int co0 = 0; co0 < co_n; co0 += kBlock) {
        const int nb = std::min(kBlock, co_n - co0);
        std::fill(acc.begin(), acc.end(), 0.0);
        for (int ci = 0; ci < ci_n; ++ci) {
            const float* in_c = in_base + ci * in_plane;
            if (pointwise) {
                for (int b = 0; b < nb; ++b) {
                    const double wb = w_base[(co0 + b) * w_per_co + ci];
                    double* a = acc.data() + b * out_plane;
                    for (std::int64_t i = 0; i < out_plane; ++i) a[i] += wb * in_c[i];
                }
                continue;
            }
            for (int t = 0; t < kt; ++t) {
                int tlo, thi;
                valid_out_range(t, pt, st, it, ot, tlo, thi);
                for (int y = 0; y < ky; ++y) {
                    int ylo, yhi;
                    valid_out_range(y, py, sy, iy, oy, ylo, yhi);
                    for (int x = 0; x < kx; ++x) {
                        int xlo, xhi;
                        valid_out_range(x, px, sx, ix, ox, xlo, xhi);
                        if (xhi <= xlo) continue;
                        double w[kBlock];
                        for (int b = 0; b < nb; ++b)
                            w[b] = w_base[(co0 + b) * w_per_co +
                                          ((static_cast<std::int64_t>(ci) * kt + t) * ky + y) * kx + x];
                        const int count = xhi - xlo;
                        for (int to = tlo; to < thi; ++to) {
                            const int ti = to * st + t - pt;
                            for (int yo = ylo; yo < yhi; ++yo) {
                                const int yi = yo * sy + y - py;
                                const float* row = in_c + (static_cast<std::int64_t>(ti) * iy + yi) * ix +
                                                   (x - px) + static_cast<std::int64_t>(xlo) * sx;
                                double* a0 = acc.data() + (static_cast<std::int64_t>(to) * oy + yo) * ox + xlo;
                                if (sx == 1 && count >= 16) {
                                    for (int b = 0; b < nb; ++b) {
                                        double* a = a0 + b * out_plane;
                                        const double wb = w[b];
                                        for (int i = 0; i < count; ++i) a[i] += wb * row[i];
                                    }
                                } else if (sx == 1) {
                                    for (int b = 0; b < nb; ++b) {
                                        double* a = a0 + b * out_plane;
                                        const double wb = w[b];
                                        int i = 0;
                                        for (; i + 4 <= count; i += 4) {
                                            a[i] += wb * row[i];
                                            a[i + 1] += wb * row[i + 1];
                                            a[i + 2] += wb * row[i + 2];
                                            a[i + 3] += wb * row[i + 3];
                                        }
                                        for (; i < count; ++i) a[i] += wb * row[i];
                                    }
                                } else {
                                    for (int b = 0; b < nb; ++b) {
                                        double* a = a0 + b * out_plane;
                                        const double wb = w[b];
                                        for (int i = 0; i < count; ++i) a[i] += wb * row[static_cast<std::int64_t>(i) * sx];
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        for (int b = 0; b < nb; ++b) {
            const double add = bias.dims.empty() ? 0.0 : bias.data[co0 + b];
            const double* a = acc.data() + b * out_plane;
            float* dst = out.data.data() + (co0 + b) * out_plane;
            for (std::int64_t i = 0; i < out_plane; ++i) dst[i] = static_cast<float>(a[i] + add);
        }
    }
    return out;
}

Tensor pool(const Tensor& input, const PoolSpec& spec, int rank) {
    Geometry g = make_geometry(input.dims, spec.kernel, spec.stride, spec.padding, rank, "pool");
    const int it = g.in[0], iy = g.in[1], ix = g.in[2];
    const int ot = g.out[0], oy = g.out[1], ox = g.out[2];

    Shape out_dims;
    out_dims.push_back(g.channels);
    if (rank == 3) out_dims.push_back(ot);
    out_dims.push_back(oy);
    out_dims.push_back(ox);
    Tensor out(out_dims);

    const std::int64_t in_plane = static_cast<std::int64_t>(it) * iy * ix;
    const std::int64_t out_plane = static_cast<std::int64_t>(ot) * oy * ox;
    for (int c = 0; c < g.channels; ++c) {
        const float* src = input.data.data() + c * in_plane;
        float* dst = out.data.data() + c * out_plane;
        for (int to = 0; to < ot; ++to) {
            const int t0 = std::max(0, to * g.stride[0] - g.pad[0]);
            const int t1 = std::min(it, to * g.stride[0] - g.pad[0] + g.kernel[0]);
            for (int yo = 0; yo < oy; ++yo) {
                const int y0 = std::max(0, yo * g.stride[1] - g.pad[1]);
                const int y1 = std::min(iy, yo * g.stride[1] - g.pad[1] + g.kernel[1]);
                for (int xo = 0; xo < ox; ++xo) {
                    const int x0 = std::max(0, xo * g.stride[2] - g.pad[2]);
                    const int x1 = std::min(ix, xo * g.stride[2] - g.pad[2] + g.kernel[2]);
                    float result;
                    if (spec.kind == PoolKind::max) {
                        float m = -std::numeric_limits<float>::infinity();
                        for (int t = t0; t < t1; ++t)
                            for (int y = y0; y < y1; ++y) {
                                const float* row = src + (static_cast<std::int64_t>(t) * iy + y) * ix;
                                for (int x = x0; x < x1; ++x) m = std::max(m, row[x]);
                            }
                        result = m;
                    } else {
                        double sum = 0.0;
                        std::int64_t count = 0;
                        for (int t = t0; t < t1; ++t)
                            for (int y = y0; y < y1; ++y) {
                                const float* row = src + (static_cast<std::int64_t>(t) * iy + y) * ix;
                                for (int x = x0; x < x1; ++x) sum += row[x];
                                count += x1 - x0;
                            }
                        result = count ? static_cast<float>(sum / static_cast<double>(count)) : 0.0f;
                    }
                    dst[(static_cast<std::int64_t>(to) * oy + yo) * ox + xo] = result;
                }
            }
        }
    }
    return out;
}

Tensor dense(const Tensor& input, const Tensor& weights, const Tensor& bias) {
    if (input.rank() != 1) throw std::invalid_argument("dense: input must be rank 1, got " + shape_str(input.dims));
    if (weights.rank() != 2 || weights.dims[1] != input.dims[0])
        throw std::invalid_argument("dense: weights " + shape_str(weights.dims) + " incompatible with input " +
                                    shape_str(input.dims));
    const int m = weights.dims[0], n = weights.dims[1];
    if (!bias.dims.empty() && bias.dims != Shape{m})
        throw std::invalid_argument("dense: bias " + shape_str(bias.dims) + ", expected (" + std::to_string(m) + ")");
    Tensor out(Shape{m});
    for (int i = 0; i < m; ++i) {
        const float* w = weights.data.data() + static_cast<std::int64_t>(i) * n;
        double sum = bias.dims.empty() ? 0.0 : bias.data[i];
        for (int j = 0; j < n; ++j) sum += static_cast<double>(w[j]) * input.data[j];
        out.data[i] = static_cast<float>(sum);
    }
    return out;
}

Tensor activation(const Tensor& input, Activation kind) {
    Tensor out(input.dims);
    switch (kind) {
        case Activation::relu:
            for (std::size_t i = 0; i < input.data.size(); ++i) out.data[i] = std::max(0.0f, input.data[i]);
            break;
        case Activation::sigmoid:
            for (std::size_t i = 0; i < input.data.size(); ++i)
                out.data[i] = static_cast<float>(1.0 / (1.0 + std::exp(-static_cast<double>(input.data[i]))));
            break;
        case Activation::hswish:
            for (std::size_t i = 0; i < input.data.size(); ++i) {
                const float x = input.data[i];
                const float r = std::min(std::max(x + 3.0f, 0.0f), 6.0f);
                out.data[i] = x * r / 6.0f;
            }
            break;
    }
    return out;
}

Tensor softmax(const Tensor& input) {
    if (input.data.empty()) throw std::invalid_argument("softmax: empty input");
    Tensor out(input.dims);
    float mx = input.data[0];
    for (float v : input.data) mx = std::max(mx, v);
    double sum = 0.0;
    for (std::size_t i = 0; i < input.data.size(); ++i) {
        const double e = std::exp(static_cast<double>(input.data[i]) - mx);
        out.data[i] = static_cast<float>(e);
        sum += e;
    }
    for (float& v : out.data) v = static_cast<float>(v / sum);
    return out;
}

Tensor concat_channels(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_channels: no inputs");
    Shape tail(parts[0].dims.begin() + 1, parts[0].dims.end());
    int channels = 0;
    for (const Tensor& p : parts) {
        if (p.rank() < 1) throw std::invalid_argument("concat_channels: rank-0 input");
        Shape t(p.dims.begin() + 1, p.dims.end());
        if (t != tail)
            throw std::invalid_argument("concat_channels: trailing dims " + shape_str(t) + " do not match " +
                                        shape_str(tail));
        channels += p.dims[0];
    }
    Shape out_dims{channels};
    out_dims.insert(out_dims.end(), tail.begin(), tail.end());
    Tensor out(out_dims);
    float* dst = out.data.data();
    for (const Tensor& p : parts) {
        std::copy(p.data.begin(), p.data.end(), dst);
        dst += p.data.size();
    }
    return out;
}

}  // namespace icanet
