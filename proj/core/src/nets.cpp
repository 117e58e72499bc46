#include "icanet/nets.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace icanet {

namespace {

std::vector<int> rep(int value, int rank) { return std::vector<int>(static_cast<std::size_t>(rank), value); }

ConvLayer make_conv(int rank, int in_c, int out_c, int kernel, int stride, int pad, std::optional<Activation> act) {
    ConvLayer l;
    l.rank = rank;
    l.spec.in_channels = in_c;
    l.spec.out_channels = out_c;
    l.spec.kernel = rep(kernel, rank);
    l.spec.stride = rep(stride, rank);
    l.spec.padding = rep(pad, rank);
    l.act = act;
    return l;
}

PoolLayer make_pool(int rank, PoolKind kind, std::vector<int> kernel, std::vector<int> stride,
                    std::vector<int> padding) {
    PoolLayer l;
    l.rank = rank;
    l.spec.kind = kind;
    l.spec.kernel = std::move(kernel);
    l.spec.stride = std::move(stride);
    l.spec.padding = std::move(padding);
    return l;
}

InceptionLayer make_inception(int in_c, int b0, int b1r, int b1, int b2r, int b2, int b3) {
    InceptionLayer l;
    l.in_channels = in_c;
    l.b0 = b0;
    l.b1 = {b1r, b1};
    l.b2 = {b2r, b2};
    l.b3_proj = b3;
    l.rank = 3;
    return l;
}

}  // namespace

int ca_mid_channels(int channels, int reduction) {
    if (channels < 1 || reduction < 1) throw std::invalid_argument("ca_mid_channels: bad arguments");
    return std::max(8, channels / reduction);
}

NetworkDesc build_cavgg16(VggVariant variant, int num_classes, int input_size) {
    if (num_classes < 2) throw std::invalid_argument("build_cavgg16: num_classes must be >= 2");
    if (input_size < 32)
        throw std::invalid_argument("build_cavgg16: input_size must be at least 32, got " +
                                    std::to_string(input_size));

    NetworkDesc net;
    net.name = variant == VggVariant::three_ca ? "cavgg16_3ca" : "cavgg16_5ca";
    net.input_shape = {3, input_size, input_size};
    net.num_classes = num_classes;

    const bool five = variant == VggVariant::five_ca;
    const int block_convs[5] = {2, 2, 3, 3, 3};
    const int block_channels[5] = {64, 128, 256, 512, 512};
    const bool attended[5] = {true, five, five, true, true};

    int in_c = 3;
    int spatial = input_size;
    for (int b = 0; b < 5; ++b) {
        const int out_c = block_channels[b];
        for (int i = 0; i < block_convs[b]; ++i) {
            const std::string name = "conv" + std::to_string(b + 1) + "_" + std::to_string(i + 1);
            net.layers.push_back({name, make_conv(2, i == 0 ? in_c : out_c, out_c, 3, 1, 1, Activation::relu)});
        }
        net.layers.push_back(
            {"pool" + std::to_string(b + 1), make_pool(2, PoolKind::max, rep(2, 2), rep(2, 2), rep(0, 2))});
        spatial = conv_output_extent(spatial, 0, 2, 2);
        if (attended[b]) {
            CoordAttnLayer ca;
            ca.channels = out_c;
            net.layers.push_back({"ca" + std::to_string(b + 1), ca});
        }
        in_c = out_c;
    }

    const int flat = 512 * spatial * spatial;
    net.layers.push_back({"flatten", FlattenLayer{}});
    net.layers.push_back({"fc6", DenseLayer{flat, 4096, Activation::relu}});
    net.layers.push_back({"fc7", DenseLayer{4096, 4096, Activation::relu}});
    net.layers.push_back({"logits", DenseLayer{4096, num_classes, std::nullopt}});
    return net;
}

NetworkDesc build_i3d(int in_channels, int num_classes, int frames, int spatial) {
    if (in_channels < 1) throw std::invalid_argument("build_i3d: in_channels must be positive");
    if (num_classes < 2) throw std::invalid_argument("build_i3d: num_classes must be >= 2");
    if (frames < 8) throw std::invalid_argument("build_i3d: needs at least 8 frames, got " + std::to_string(frames));
    if (spatial < 32)
        throw std::invalid_argument("build_i3d: spatial extent too small, got " + std::to_string(spatial));

    NetworkDesc net;
    net.name = in_channels == 2 ? "i3d_flow" : "i3d_rgb";
    net.input_shape = {in_channels, frames, spatial, spatial};
    net.num_classes = num_classes;

    int t = frames, s = spatial;
    auto conv_shape = [&](int kernel, int stride, int pad) {
        t = conv_output_extent(t, pad, kernel, stride);
        s = conv_output_extent(s, pad, kernel, stride);
    };

    net.layers.push_back({"conv1_7x7", make_conv(3, in_channels, 64, 7, 2, 3, Activation::relu)});
    conv_shape(7, 2, 3);
    net.layers.push_back({"maxpool_2a", make_pool(3, PoolKind::max, {1, 3, 3}, {1, 2, 2}, {0, 1, 1})});
    s = conv_output_extent(s, 1, 3, 2);
    net.layers.push_back({"conv2b_1x1", make_conv(3, 64, 64, 1, 1, 0, Activation::relu)});
    net.layers.push_back({"conv2c_3x3", make_conv(3, 64, 192, 3, 1, 1, Activation::relu)});
    net.layers.push_back({"maxpool_3a", make_pool(3, PoolKind::max, {1, 3, 3}, {1, 2, 2}, {0, 1, 1})});
    s = conv_output_extent(s, 1, 3, 2);
    net.layers.push_back({"mixed_3b", make_inception(192, 64, 96, 128, 16, 32, 32)});
    net.layers.push_back({"mixed_3c", make_inception(256, 128, 128, 192, 32, 96, 64)});
    net.layers.push_back({"maxpool_4a", make_pool(3, PoolKind::max, {3, 3, 3}, {2, 2, 2}, {1, 1, 1})});
    conv_shape(3, 2, 1);
    net.layers.push_back({"mixed_4b", make_inception(480, 192, 96, 208, 16, 48, 64)});
    net.layers.push_back({"mixed_4c", make_inception(512, 160, 112, 224, 24, 64, 64)});
    net.layers.push_back({"mixed_4d", make_inception(512, 128, 128, 256, 24, 64, 64)});
    net.layers.push_back({"mixed_4e", make_inception(512, 112, 144, 288, 32, 64, 64)});
    net.layers.push_back({"mixed_4f", make_inception(528, 256, 160, 320, 32, 128, 128)});
    net.layers.push_back({"maxpool_5a", make_pool(3, PoolKind::max, {2, 2, 2}, {2, 2, 2}, {0, 0, 0})});
    conv_shape(2, 2, 0);
    net.layers.push_back({"mixed_5b", make_inception(832, 256, 160, 320, 32, 128, 128)});
    net.layers.push_back({"mixed_5c", make_inception(832, 384, 192, 384, 48, 128, 128)});
    // Global spatial average; the temporal axis keeps a short window.
    net.layers.push_back({"avgpool", make_pool(3, PoolKind::avg, {2, s, s}, {1, 1, 1}, {0, 0, 0})});
    net.layers.push_back({"logits_conv", make_conv(3, 1024, num_classes, 1, 1, 0, std::nullopt)});
    net.layers.push_back({"temporal_mean", TemporalMeanLayer{}});
    return net;
}

namespace {

struct ShapeVisitor {
    Shape in;
    const std::string& layer_name;

    Shape fail(const std::string& msg) const {
        throw std::invalid_argument("shape_trace: layer '" + layer_name + "': " + msg + " (input " + shape_str(in) +
                                    ")");
    }

    Shape spatial_op(const std::vector<int>& kernel, const std::vector<int>& stride, const std::vector<int>& padding,
                     int rank, int out_channels) const {
        if (static_cast<int>(in.size()) != rank + 1) return fail("expected rank " + std::to_string(rank + 1));
        Shape out{out_channels};
        for (int a = 0; a < rank; ++a)
            out.push_back(conv_output_extent(in[1 + a], padding[a], kernel[a], stride[a]));
        return out;
    }

    Shape operator()(const ConvLayer& l) const {
        if (in.empty() || in[0] != l.spec.in_channels)
            return fail("expected " + std::to_string(l.spec.in_channels) + " input channels");
        return spatial_op(l.spec.kernel, l.spec.stride, l.spec.padding, l.rank, l.spec.out_channels);
    }
    Shape operator()(const PoolLayer& l) const {
        if (in.empty()) return fail("empty input");
        return spatial_op(l.spec.kernel, l.spec.stride, l.spec.padding, l.rank, in[0]);
    }
    Shape operator()(const DenseLayer& l) const {
        if (in.size() != 1 || in[0] != l.in_features)
            return fail("expected rank-1 input of " + std::to_string(l.in_features));
        return Shape{l.out_features};
    }
    Shape operator()(const ActivationLayer&) const { return in; }
    Shape operator()(const SoftmaxLayer&) const { return in; }
    Shape operator()(const FlattenLayer&) const { return Shape{static_cast<int>(shape_volume(in))}; }
    Shape operator()(const TemporalMeanLayer&) const {
        if (in.size() < 2) return fail("needs a channel axis plus at least one reduced axis");
        return Shape{in[0]};
    }
    Shape operator()(const CoordAttnLayer& l) const {
        if (in.size() != 3 || in[0] != l.channels)
            return fail("expected [" + std::to_string(l.channels) + ",H,W]");
        return in;
    }
    Shape operator()(const InceptionLayer& l) const {
        if (static_cast<int>(in.size()) != l.rank + 1 || in[0] != l.in_channels)
            return fail("expected rank " + std::to_string(l.rank + 1) + " input with " +
                        std::to_string(l.in_channels) + " channels");
        Shape out = in;
        out[0] = l.out_channels();
        return out;
    }
};

struct KindVisitor {
    std::string operator()(const ConvLayer&) const { return "conv"; }
    std::string operator()(const PoolLayer& l) const { return l.spec.kind == PoolKind::max ? "maxpool" : "avgpool"; }
    std::string operator()(const DenseLayer&) const { return "dense"; }
    std::string operator()(const ActivationLayer&) const { return "activation"; }
    std::string operator()(const SoftmaxLayer&) const { return "softmax"; }
    std::string operator()(const FlattenLayer&) const { return "flatten"; }
    std::string operator()(const TemporalMeanLayer&) const { return "temporal_mean"; }
    std::string operator()(const CoordAttnLayer&) const { return "coord_attn"; }
    std::string operator()(const InceptionLayer&) const { return "inception"; }
};

}  // namespace

std::vector<TraceRow> shape_trace(const NetworkDesc& net, const Shape& input_shape) {
    std::vector<TraceRow> rows;
    rows.reserve(net.layers.size());
    Shape cur = input_shape;
    for (const LayerSpec& layer : net.layers) {
        cur = std::visit(ShapeVisitor{cur, layer.name}, layer.params);
        rows.push_back({layer.name, std::visit(KindVisitor{}, layer.params), cur});
    }
    return rows;
}

std::string format_shape_table(const NetworkDesc& net, const std::vector<TraceRow>& rows) {
    std::size_t name_w = 5, kind_w = 4;
    for (const TraceRow& r : rows) {
        name_w = std::max(name_w, r.name.size());
        kind_w = std::max(kind_w, r.kind.size());
    }
    auto pad = [](const std::string& s, std::size_t w) { return s + std::string(w - s.size(), ' '); };
    std::string out = net.name + "  input " + shape_str(net.input_shape) + "\n";
    out += pad("layer", name_w) + "  " + pad("kind", kind_w) + "  output\n";
    for (const TraceRow& r : rows) out += pad(r.name, name_w) + "  " + pad(r.kind, kind_w) + "  " + shape_str(r.output) + "\n";
    return out;
}

namespace {

void conv_params(std::vector<ParamInfo>& out, const std::string& name, const ConvSpec& spec) {
    std::int64_t k_vol = 1;
    for (int k : spec.kernel) k_vol *= k;
    Shape w{spec.out_channels, spec.in_channels};
    for (int k : spec.kernel) w.push_back(k);
    const std::int64_t fan_in = spec.in_channels * k_vol, fan_out = spec.out_channels * k_vol;
    out.push_back({name + ".weight", w, fan_in, fan_out});
    out.push_back({name + ".bias", Shape{spec.out_channels}, fan_in, fan_out});
}

void dense_params(std::vector<ParamInfo>& out, const std::string& name, int in_f, int out_f) {
    out.push_back({name + ".weight", Shape{out_f, in_f}, in_f, out_f});
    out.push_back({name + ".bias", Shape{out_f}, in_f, out_f});
}

ConvSpec inception_conv(int rank, int in_c, int out_c, int kernel) {
    ConvSpec s;
    s.in_channels = in_c;
    s.out_channels = out_c;
    s.kernel = rep(kernel, rank);
    s.stride = rep(1, rank);
    s.padding = rep(kernel == 3 ? 1 : 0, rank);
    return s;
}

struct ParamVisitor {
    std::vector<ParamInfo>& out;
    const std::string& name;

    void operator()(const ConvLayer& l) const { conv_params(out, name, l.spec); }
    void operator()(const DenseLayer& l) const { dense_params(out, name, l.in_features, l.out_features); }
    void operator()(const CoordAttnLayer& l) const {
        const int mid = ca_mid_channels(l.channels, l.reduction);
        dense_params(out, name + ".squeeze", l.channels, mid);
        dense_params(out, name + ".gate_h", mid, l.channels);
        dense_params(out, name + ".gate_w", mid, l.channels);
    }
    void operator()(const InceptionLayer& l) const {
        conv_params(out, name + ".b0", inception_conv(l.rank, l.in_channels, l.b0, 1));
        conv_params(out, name + ".b1_reduce", inception_conv(l.rank, l.in_channels, l.b1.reduce, 1));
        conv_params(out, name + ".b1_conv", inception_conv(l.rank, l.b1.reduce, l.b1.out, 3));
        conv_params(out, name + ".b2_reduce", inception_conv(l.rank, l.in_channels, l.b2.reduce, 1));
        conv_params(out, name + ".b2_conv", inception_conv(l.rank, l.b2.reduce, l.b2.out, 3));
        conv_params(out, name + ".b3_proj", inception_conv(l.rank, l.in_channels, l.b3_proj, 1));
    }
    void operator()(const PoolLayer&) const {}
    void operator()(const ActivationLayer&) const {}
    void operator()(const SoftmaxLayer&) const {}
    void operator()(const FlattenLayer&) const {}
    void operator()(const TemporalMeanLayer&) const {}
};

}  // namespace

std::vector<ParamInfo> network_params(const NetworkDesc& net) {
    std::vector<ParamInfo> out;
    for (const LayerSpec& layer : net.layers) std::visit(ParamVisitor{out, layer.name}, layer.params);
    return out;
}

Tensor coordinate_attention(const Tensor& input, const CaWeights& w, int reduction) {
    if (input.rank() != 3) throw std::invalid_argument("coordinate_attention: expected [C,H,W] input");
    const int c_n = input.dims[0], h = input.dims[1], wd = input.dims[2];
    const int mid = ca_mid_channels(c_n, reduction);
    if (w.squeeze_w.dims != Shape{mid, c_n} || w.squeeze_b.dims != Shape{mid})
        throw std::invalid_argument("coordinate_attention: squeeze weights must be [" + std::to_string(mid) + "," +
                                    std::to_string(c_n) + "]");
    for (const Tensor* g : {&w.gate_h_w, &w.gate_w_w})
        if (g->dims != Shape{c_n, mid})
            throw std::invalid_argument("coordinate_attention: gate weights must be [" + std::to_string(c_n) + "," +
                                        std::to_string(mid) + "]");
    if (w.gate_h_b.dims != Shape{c_n} || w.gate_w_b.dims != Shape{c_n})
        throw std::invalid_argument("coordinate_attention: gate biases must be [" + std::to_string(c_n) + "]");

    const std::int64_t plane = static_cast<std::int64_t>(h) * wd;
    // Directional profiles: mean over the other spatial axis.
    std::vector<double> zh(static_cast<std::size_t>(c_n) * h, 0.0), zw(static_cast<std::size_t>(c_n) * wd, 0.0);
    for (int c = 0; c < c_n; ++c) {
        const float* src = input.data.data() + c * plane;
        for (int y = 0; y < h; ++y) {
            double sum = 0.0;
            for (int x = 0; x < wd; ++x) sum += src[static_cast<std::int64_t>(y) * wd + x];
            zh[static_cast<std::size_t>(c) * h + y] = sum / wd;
        }
        for (int x = 0; x < wd; ++x) {
            double sum = 0.0;
            for (int y = 0; y < h; ++y) sum += src[static_cast<std::int64_t>(y) * wd + x];
            zw[static_cast<std::size_t>(c) * wd + x] = sum / h;
        }
    }

    // Shared squeeze over the concatenated [C, H+W] profile, then hswish.
    const int len = h + wd;
    std::vector<double> f(static_cast<std::size_t>(mid) * len, 0.0);
    for (int m = 0; m < mid; ++m) {
        const float* row = w.squeeze_w.data.data() + static_cast<std::int64_t>(m) * c_n;
        for (int p = 0; p < len; ++p) {
            double sum = w.squeeze_b.data[m];
            if (p < h)
                for (int c = 0; c < c_n; ++c) sum += row[c] * zh[static_cast<std::size_t>(c) * h + p];
            else
                for (int c = 0; c < c_n; ++c) sum += row[c] * zw[static_cast<std::size_t>(c) * wd + (p - h)];
            const double r = std::min(std::max(sum + 3.0, 0.0), 6.0);
            f[static_cast<std::size_t>(m) * len + p] = sum * r / 6.0;
        }
    }

    auto gate = [&](const Tensor& gw, const Tensor& gb, int offset, int extent, std::vector<double>& out_gate) {
        out_gate.assign(static_cast<std::size_t>(c_n) * extent, 0.0);
        for (int c = 0; c < c_n; ++c) {
            const float* row = gw.data.data() + static_cast<std::int64_t>(c) * mid;
            for (int p = 0; p < extent; ++p) {
                double sum = gb.data[c];
                for (int m = 0; m < mid; ++m) sum += row[m] * f[static_cast<std::size_t>(m) * len + offset + p];
                out_gate[static_cast<std::size_t>(c) * extent + p] = 1.0 / (1.0 + std::exp(-sum));
            }
        }
    };
    std::vector<double> gh, gw_gate;
    gate(w.gate_h_w, w.gate_h_b, 0, h, gh);
    gate(w.gate_w_w, w.gate_w_b, h, wd, gw_gate);

    Tensor out(input.dims);
    for (int c = 0; c < c_n; ++c)
        for (int y = 0; y < h; ++y) {
            const double gy = gh[static_cast<std::size_t>(c) * h + y];
            const float* src = input.data.data() + c * plane + static_cast<std::int64_t>(y) * wd;
            float* dst = out.data.data() + c * plane + static_cast<std::int64_t>(y) * wd;
            for (int x = 0; x < wd; ++x)
                dst[x] = static_cast<float>(src[x] * gy * gw_gate[static_cast<std::size_t>(c) * wd + x]);
        }
    return out;
}

namespace {

struct ForwardVisitor {
    const WeightStore& weights;
    const std::string& name;
    Tensor& cur;

    void operator()(const ConvLayer& l) const {
        cur = conv(cur, weights.get(name + ".weight"), weights.get(name + ".bias"), l.spec, l.rank);
        if (l.act) cur = activation(cur, *l.act);
    }
    void operator()(const PoolLayer& l) const { cur = pool(cur, l.spec, l.rank); }
    void operator()(const DenseLayer& l) const {
        cur = dense(cur, weights.get(name + ".weight"), weights.get(name + ".bias"));
        if (l.act) cur = activation(cur, *l.act);
    }
    void operator()(const ActivationLayer& l) const { cur = activation(cur, l.kind); }
    void operator()(const SoftmaxLayer&) const { cur = softmax(cur); }
    void operator()(const FlattenLayer&) const {
        cur.dims = Shape{static_cast<int>(shape_volume(cur.dims))};
    }
    void operator()(const TemporalMeanLayer&) const {
        const int c_n = cur.dims.empty() ? 0 : cur.dims[0];
        if (c_n < 1 || cur.rank() < 2) throw std::invalid_argument("temporal_mean: bad input " + shape_str(cur.dims));
        const std::int64_t inner = cur.size() / c_n;
        Tensor out(Shape{c_n});
        for (int c = 0; c < c_n; ++c) {
            double sum = 0.0;
            const float* src = cur.data.data() + c * inner;
            for (std::int64_t i = 0; i < inner; ++i) sum += src[i];
            out.data[c] = static_cast<float>(sum / static_cast<double>(inner));
        }
        cur = std::move(out);
    }
    void operator()(const CoordAttnLayer& l) const {
        CaWeights w{weights.get(name + ".squeeze.weight"), weights.get(name + ".squeeze.bias"),
                    weights.get(name + ".gate_h.weight"), weights.get(name + ".gate_h.bias"),
                    weights.get(name + ".gate_w.weight"), weights.get(name + ".gate_w.bias")};
        cur = coordinate_attention(cur, w, l.reduction);
    }
    void operator()(const InceptionLayer& l) const {
        auto branch_conv = [&](const Tensor& in, const std::string& suffix, const ConvSpec& spec) {
            Tensor out = conv(in, weights.get(name + suffix + ".weight"), weights.get(name + suffix + ".bias"), spec,
                              l.rank);
            return activation(out, Activation::relu);
        };
        const Tensor b0 = branch_conv(cur, ".b0", inception_conv(l.rank, l.in_channels, l.b0, 1));
        Tensor b1 = branch_conv(cur, ".b1_reduce", inception_conv(l.rank, l.in_channels, l.b1.reduce, 1));
        b1 = branch_conv(b1, ".b1_conv", inception_conv(l.rank, l.b1.reduce, l.b1.out, 3));
        Tensor b2 = branch_conv(cur, ".b2_reduce", inception_conv(l.rank, l.in_channels, l.b2.reduce, 1));
        b2 = branch_conv(b2, ".b2_conv", inception_conv(l.rank, l.b2.reduce, l.b2.out, 3));
        PoolSpec pool_spec;
        pool_spec.kind = PoolKind::max;
        pool_spec.kernel = rep(3, l.rank);
        pool_spec.stride = rep(1, l.rank);
        pool_spec.padding = rep(1, l.rank);
        Tensor b3 = pool(cur, pool_spec, l.rank);
        b3 = branch_conv(b3, ".b3_proj", inception_conv(l.rank, l.in_channels, l.b3_proj, 1));
        cur = concat_channels({b0, b1, b2, b3});
    }
};

}  // namespace

Tensor forward(const NetworkDesc& net, const WeightStore& weights, const Tensor& input) {
    if (input.dims != net.input_shape)
        throw std::invalid_argument("forward: " + net.name + " expects input " + shape_str(net.input_shape) +
                                    ", got " + shape_str(input.dims));
    Tensor cur = input;
    for (const LayerSpec& layer : net.layers) std::visit(ForwardVisitor{weights, layer.name, cur}, layer.params);
    if (net.layers.empty() || !std::holds_alternative<SoftmaxLayer>(net.layers.back().params)) cur = softmax(cur);
    if (cur.size() != net.num_classes)
        throw std::logic_error("forward: " + net.name + " produced " + std::to_string(cur.size()) +
                               " values for " + std::to_string(net.num_classes) + " classes");
    return cur;
}

}  // namespace icanet
