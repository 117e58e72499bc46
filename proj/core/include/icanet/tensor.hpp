#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

namespace icanet {

// Dense row-major float tensor. No batch axis anywhere in this codebase:
// rank-3 activations are [C,H,W], rank-4 are [C,T,H,W].
using Shape = std::vector<int>;

std::int64_t shape_volume(const Shape& dims);
std::string shape_str(const Shape& dims);

struct Tensor {
    Shape dims;
    std::vector<float> data;

    Tensor() = default;
    explicit Tensor(Shape d);
    Tensor(Shape d, std::vector<float> values);

    static Tensor full(Shape d, float value);

    int rank() const { return static_cast<int>(dims.size()); }
    std::int64_t size() const { return static_cast<std::int64_t>(data.size()); }

    float& at(std::initializer_list<int> idx);
    float at(std::initializer_list<int> idx) const;
};

enum class Activation { relu, sigmoid, hswish };

// out_extent = floor((extent + 2*pad - kernel) / stride) + 1, required >= 1.
int conv_output_extent(int extent, int pad, int kernel, int stride);

struct ConvSpec {
    int in_channels = 0;
    int out_channels = 0;
    std::vector<int> kernel;   // one entry per spatial axis
    std::vector<int> stride;
    std::vector<int> padding;  // zero-fill
};

enum class PoolKind { max, avg };

struct PoolSpec {
    PoolKind kind = PoolKind::max;
    std::vector<int> kernel;
    std::vector<int> stride;
    std::vector<int> padding;
};

// Cross-correlation (no kernel flip), float storage, double accumulation.
// rank 2: input [C,H,W], weights [Co,Ci,Kh,Kw]; rank 3: input [C,T,H,W],
// weights [Co,Ci,Kt,Kh,Kw]. bias is [Co] or empty for none.
Tensor conv(const Tensor& input, const Tensor& weights, const Tensor& bias,
            const ConvSpec& spec, int rank);

// Max pool ignores padded cells entirely; avg pool divides by the in-bounds
// cell count of each window.
Tensor pool(const Tensor& input, const PoolSpec& spec, int rank);

// input [N], weights [M,N], bias [M] or empty -> [M].
Tensor dense(const Tensor& input, const Tensor& weights, const Tensor& bias);

Tensor activation(const Tensor& input, Activation kind);

// Max-subtracted, any rank, normalizes over the whole tensor.
Tensor softmax(const Tensor& input);

// Concatenate along axis 0 (channels); all trailing dims must match.
Tensor concat_channels(const std::vector<Tensor>& parts);

}  // namespace icanet
