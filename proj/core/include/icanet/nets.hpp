#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "icanet/data_io.hpp"
#include "icanet/tensor.hpp"

namespace icanet {

// Layer descriptions. Activations belonging to a conv/dense layer are fused
// attributes of that layer; standalone activation layers remain available.

struct ConvLayer {
    ConvSpec spec;
    int rank = 2;
    std::optional<Activation> act;
};

struct PoolLayer {
    PoolSpec spec;
    int rank = 2;
};

struct DenseLayer {
    int in_features = 0;
    int out_features = 0;
    std::optional<Activation> act;
};

struct ActivationLayer {
    Activation kind = Activation::relu;
};

struct SoftmaxLayer {};

struct FlattenLayer {};

// Mean over all non-channel axes: [C,T,H,W] -> [C].
struct TemporalMeanLayer {};

// Pools each spatial axis to a per-channel profile, squeezes them through a
// shared bottleneck (mid = max(8, C/reduction)) with hswish, then gates the
// input with two sigmoid attention maps. Output shape equals input shape.
struct CoordAttnLayer {
    int channels = 0;
    int reduction = 16;
};

struct InceptionBranch {
    int reduce = 0;  // 1x1(x1) channels ahead of the 3x3(x3) conv
    int out = 0;
};

// Four parallel branches concatenated on channels: 1x1 conv, reduce+3x3,
// reduce+3x3, 3x3 max pool + 1x1 projection. All strides 1, shape-preserving.
struct InceptionLayer {
    int in_channels = 0;
    int b0 = 0;
    InceptionBranch b1;
    InceptionBranch b2;
    int b3_proj = 0;
    int rank = 3;

    int out_channels() const { return b0 + b1.out + b2.out + b3_proj; }
};

using LayerParams = std::variant<ConvLayer, PoolLayer, DenseLayer, ActivationLayer, SoftmaxLayer, FlattenLayer,
                                 TemporalMeanLayer, CoordAttnLayer, InceptionLayer>;

struct LayerSpec {
    std::string name;
    LayerParams params;
};

struct NetworkDesc {
    std::string name;
    Shape input_shape;
    int num_classes = 4;
    std::vector<LayerSpec> layers;
};

enum class VggVariant { three_ca, five_ca };

// 13-conv VGG16 for [3,size,size] spectrogram images with coordinate
// attention after pooling stages {1,4,5} (three_ca) or all five (five_ca),
// then 4096-4096-num_classes dense layers. size must be at least 32; odd
// extents shrink by the usual floor((n-2)/2)+1 pooling rule.
NetworkDesc build_cavgg16(VggVariant variant, int num_classes = 4, int input_size = 224);

// Inflated Inception-V1 backbone for [in_channels,frames,size,size] inputs
// (3 for RGB, 2 for flow), ending in a 1x1x1 logits conv and temporal mean.
NetworkDesc build_i3d(int in_channels, int num_classes = 4, int frames = 79, int spatial = 224);

struct TraceRow {
    std::string name;
    std::string kind;
    Shape output;
};

// Propagates an input shape through every layer; throws on any mismatch.
std::vector<TraceRow> shape_trace(const NetworkDesc& net, const Shape& input_shape);
std::string format_shape_table(const NetworkDesc& net, const std::vector<TraceRow>& rows);

struct ParamInfo {
    std::string name;  // "<layer>.<role>" as stored in weight containers
    Shape dims;
    std::int64_t fan_in = 0;
    std::int64_t fan_out = 0;
};

// Every trainable tensor of the network, in layer order.
std::vector<ParamInfo> network_params(const NetworkDesc& net);

// Runs the network. Output is the class distribution: softmax is applied to
// the final activation unless the last layer already is a softmax.
Tensor forward(const NetworkDesc& net, const WeightStore& weights, const Tensor& input);

// Standalone coordinate attention op (used by forward, exposed for tests).
struct CaWeights {
    Tensor squeeze_w, squeeze_b;  // [mid,C], [mid]
    Tensor gate_h_w, gate_h_b;    // [C,mid], [C]
    Tensor gate_w_w, gate_w_b;    // [C,mid], [C]
};
Tensor coordinate_attention(const Tensor& input, const CaWeights& w, int reduction = 16);

int ca_mid_channels(int channels, int reduction);

}  // namespace icanet
