#pragma once

#include <string>
#include <vector>

#include "mmf/autodiff.hpp"
#include "mmf/attention.hpp"

namespace mmf {

struct EncoderConfig {
    int64_t image_size = 32;  // square, single channel
    int64_t stem_patch = 4;
    int64_t channels = 32;
    int blocks = 2;

    void validate() const {
        if (image_size <= 0 || stem_patch <= 0 || channels <= 0 || blocks < 0) {
            throw config_error("encoder config has non-positive fields");
        }
        if (image_size % stem_patch != 0) {
            throw config_error("image size " + std::to_string(image_size) +
                               " not divisible by stem patch " + std::to_string(stem_patch));
        }
    }

    int64_t grid() const { return image_size / stem_patch; }
    int64_t tokens() const { return grid() * grid(); }
};

// ConvNeXt-style block at toy scale: depthwise 3x3 conv, layer norm, inverted
// bottleneck (pointwise expand 4x, gelu, pointwise reduce), residual add.
template <typename T>
struct EncoderBlockParamsT {
    ad::ValueT<T> dw_kernel;          // [channels, 9]
    ad::ValueT<T> ln_gain, ln_bias;   // [channels]
    ad::ValueT<T> pw1_w, pw1_b;       // [channels, 4*channels], [4*channels]
    ad::ValueT<T> pw2_w, pw2_b;       // [4*channels, channels], [channels]
};

template <typename T>
struct EncoderParamsT {
    ad::ValueT<T> stem_w, stem_b;  // [stem_patch^2, channels], [channels]
    std::vector<EncoderBlockParamsT<T>> blocks;
};

using EncoderBlockParams = EncoderBlockParamsT<float>;
using EncoderParams = EncoderParamsT<float>;

// Weights uniform(-a, a) with a = sqrt(6/(fan_in+fan_out)) taken per matrix
// (fan_in = rows, fan_out = cols); biases and layer-norm offsets zero, gains
// one. Draw order: stem, then per block dw, pw1, pw2.
inline EncoderParams init_encoder(const EncoderConfig& cfg, Rng& rng) {
    cfg.validate();
    EncoderParams p;
    p.stem_w = ad::leaf(xavier_init(cfg.stem_patch * cfg.stem_patch, cfg.channels, rng));
    p.stem_b = ad::leaf(Tensor::zeros({cfg.channels}));
    p.blocks.resize(static_cast<size_t>(cfg.blocks));
    for (auto& b : p.blocks) {
        b.dw_kernel = ad::leaf(xavier_init(cfg.channels, 9, rng));
        b.ln_gain = ad::leaf(Tensor::full({cfg.channels}, 1.0f));
        b.ln_bias = ad::leaf(Tensor::zeros({cfg.channels}));
        b.pw1_w = ad::leaf(xavier_init(cfg.channels, 4 * cfg.channels, rng));
        b.pw1_b = ad::leaf(Tensor::zeros({4 * cfg.channels}));
        b.pw2_w = ad::leaf(xavier_init(4 * cfg.channels, cfg.channels, rng));
        b.pw2_b = ad::leaf(Tensor::zeros({cfg.channels}));
    }
    return p;
}

template <typename U, typename T>
EncoderParamsT<U> cast_encoder_params(const EncoderParamsT<T>& p) {
    EncoderParamsT<U> out;
    out.stem_w = ad::leaf(tensor_cast<U>(p.stem_w->value));
    out.stem_b = ad::leaf(tensor_cast<U>(p.stem_b->value));
    out.blocks.reserve(p.blocks.size());
    for (const auto& b : p.blocks) {
        EncoderBlockParamsT<U> ob;
        ob.dw_kernel = ad::leaf(tensor_cast<U>(b.dw_kernel->value));
        ob.ln_gain = ad::leaf(tensor_cast<U>(b.ln_gain->value));
        ob.ln_bias = ad::leaf(tensor_cast<U>(b.ln_bias->value));
        ob.pw1_w = ad::leaf(tensor_cast<U>(b.pw1_w->value));
        ob.pw1_b = ad::leaf(tensor_cast<U>(b.pw1_b->value));
        ob.pw2_w = ad::leaf(tensor_cast<U>(b.pw2_w->value));
        ob.pw2_b = ad::leaf(tensor_cast<U>(b.pw2_b->value));
        out.blocks.push_back(std::move(ob));
    }
    return out;
}

// [1,S,S] image -> [(S/p)^2, channels] token sequence, spatial grid flattened
// row-major. The image enters the graph as the given node, so callers choose
// whether gradients flow into pixels.
template <typename T>
ad::ValueT<T> encode_image(const ad::ValueT<T>& img, const EncoderParamsT<T>& p,
                           const EncoderConfig& cfg) {
    cfg.validate();
    if (img->value.rank() != 3 || img->value.shape[0] != 1 ||
        img->value.shape[1] != cfg.image_size || img->value.shape[2] != cfg.image_size) {
        throw dimension_error("encoder expects image [1," + std::to_string(cfg.image_size) + "," +
                              std::to_string(cfg.image_size) + "], got " +
                              img->value.shape_string());
    }
    const int64_t g = cfg.grid();
    auto x = ad::linear(ad::patchify(img, cfg.stem_patch), p.stem_w, p.stem_b);
    for (const auto& b : p.blocks) {
        auto y = ad::depthwise_conv3x3(x, b.dw_kernel, g, g);
        y = ad::layer_norm(y, b.ln_gain, b.ln_bias);
        y = ad::linear(y, b.pw1_w, b.pw1_b);
        y = ad::gelu(y);
        y = ad::linear(y, b.pw2_w, b.pw2_b);
        x = ad::add(x, y);
    }
    return x;
}

}  // namespace mmf
