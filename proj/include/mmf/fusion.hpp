#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "mmf/attention.hpp"

namespace mmf {

// One pre-norm transformer block: x + MHSA(LN(x)) followed by a two-layer
// feed-forward sublayer with gelu, again with layer norm and residual.
template <typename T>
struct TfBlockParamsT {
    AttentionParamsT<T> attn;
    ad::ValueT<T> ln1_gain, ln1_bias;
    ad::ValueT<T> ln2_gain, ln2_bias;
    ad::ValueT<T> ff_w1, ff_b1;  // [d, d_ff], [d_ff]
    ad::ValueT<T> ff_w2, ff_b2;  // [d_ff, d], [d]
};

// The cross-attention-to-concatenation block: each stream attends to the
// other (queries from the opposite side), the two results are concatenated
// along the sequence axis, and a transformer block processes the whole thing.
template <typename T>
struct FusionBlockParamsT {
    AttentionParamsT<T> attn_ab;  // queries from B, keys/values from A
    AttentionParamsT<T> attn_ba;  // queries from A, keys/values from B
    TfBlockParamsT<T> tf;
};

template <typename T>
struct FusedFeaturesT {
    ad::ValueT<T> token_seq;  // [N_A + N_B, d]
    ad::ValueT<T> pooled;     // [d], mean over tokens
};

using TfBlockParams = TfBlockParamsT<float>;
using FusionBlockParams = FusionBlockParamsT<float>;
using FusedFeatures = FusedFeaturesT<float>;

inline constexpr int kTfFfExpansion = 4;

// Draw order: attn, ln1 (gain then bias), ff_w1, ff_b1, ff_w2, ff_b2, ln2.
inline TfBlockParams init_tf_block(int64_t d_model, int heads, Rng& rng) {
    TfBlockParams p;
    p.attn = init_attention(AttentionConfig::evenly_split(d_model, heads), rng);
    const int64_t d_ff = kTfFfExpansion * d_model;
    p.ln1_gain = ad::leaf(Tensor::full({d_model}, 1.0f));
    p.ln1_bias = ad::leaf(Tensor::zeros({d_model}));
    p.ff_w1 = ad::leaf(xavier_init(d_model, d_ff, rng));
    p.ff_b1 = ad::leaf(Tensor::zeros({d_ff}));
    p.ff_w2 = ad::leaf(xavier_init(d_ff, d_model, rng));
    p.ff_b2 = ad::leaf(Tensor::zeros({d_model}));
    p.ln2_gain = ad::leaf(Tensor::full({d_model}, 1.0f));
    p.ln2_bias = ad::leaf(Tensor::zeros({d_model}));
    return p;
}

inline FusionBlockParams init_fusion_block(int64_t d_model, int heads, Rng& rng) {
    FusionBlockParams p;
    p.attn_ab = init_attention(AttentionConfig::evenly_split(d_model, heads), rng);
    p.attn_ba = init_attention(AttentionConfig::evenly_split(d_model, heads), rng);
    p.tf = init_tf_block(d_model, heads, rng);
    return p;
}

template <typename U, typename T>
TfBlockParamsT<U> cast_tf_block(const TfBlockParamsT<T>& p) {
    TfBlockParamsT<U> out;
    out.attn = cast_attention_params<U>(p.attn);
    out.ln1_gain = ad::leaf(tensor_cast<U>(p.ln1_gain->value));
    out.ln1_bias = ad::leaf(tensor_cast<U>(p.ln1_bias->value));
    out.ln2_gain = ad::leaf(tensor_cast<U>(p.ln2_gain->value));
    out.ln2_bias = ad::leaf(tensor_cast<U>(p.ln2_bias->value));
    out.ff_w1 = ad::leaf(tensor_cast<U>(p.ff_w1->value));
    out.ff_b1 = ad::leaf(tensor_cast<U>(p.ff_b1->value));
    out.ff_w2 = ad::leaf(tensor_cast<U>(p.ff_w2->value));
    out.ff_b2 = ad::leaf(tensor_cast<U>(p.ff_b2->value));
    return out;
}

template <typename U, typename T>
FusionBlockParamsT<U> cast_fusion_block(const FusionBlockParamsT<T>& p) {
    FusionBlockParamsT<U> out;
    out.attn_ab = cast_attention_params<U>(p.attn_ab);
    out.attn_ba = cast_attention_params<U>(p.attn_ba);
    out.tf = cast_tf_block<U>(p.tf);
    return out;
}

template <typename T>
ad::ValueT<T> transformer_block(const ad::ValueT<T>& x, const TfBlockParamsT<T>& p) {
    auto n1 = ad::layer_norm(x, p.ln1_gain, p.ln1_bias);
    auto h = ad::add(x, mhsa(n1, n1, p.attn));
    auto n2 = ad::layer_norm(h, p.ln2_gain, p.ln2_bias);
    auto ff = ad::linear(ad::gelu(ad::linear(n2, p.ff_w1, p.ff_b1)), p.ff_w2, p.ff_b2);
    return ad::add(h, ff);
}

// The two cross-attention streams before Tf: Z_(A) = MHSA(Q_B, K_A, V_A) and
// Z_(B) = MHSA(Q_A, K_B, V_B). Exposed separately so tests can look at the
// pre-Tf concatenation.
template <typename T>
std::pair<ad::ValueT<T>, ad::ValueT<T>> cross_attention_streams(const ad::ValueT<T>& a,
                                                                const ad::ValueT<T>& b,
                                                                const FusionBlockParamsT<T>& p) {
    if (a->value.cols() != b->value.cols()) {
        throw dimension_error("fusion input width mismatch: " + a->value.shape_string() + " vs " +
                              b->value.shape_string());
    }
    auto z_a = mhsa(b, a, p.attn_ab);  // N_B rows
    auto z_b = mhsa(a, b, p.attn_ba);  // N_A rows
    return {z_a, z_b};
}

template <typename T>
FusedFeaturesT<T> cross_attend_concat(const ad::ValueT<T>& a, const ad::ValueT<T>& b,
                                      const FusionBlockParamsT<T>& p) {
    auto [z_a, z_b] = cross_attention_streams(a, b, p);
    auto tokens = transformer_block(ad::concat_rows(z_a, z_b), p.tf);
    FusedFeaturesT<T> out;
    out.token_seq = tokens;
    out.pooled = ad::mean_rows(tokens);
    return out;
}

// Three-stage wiring: stage 1 fuses the two image streams; the stage-1 pooled
// vector doubles as the image summary handed to the embedding prompt; stage 3
// fuses the stage-1 tokens with the projected non-image token.
template <typename T>
struct MultistageResult {
    FusedFeaturesT<T> image_fused;  // stage 1
    ad::ValueT<T> fused;            // stage 3 pooled vector, [d]
};

template <typename T>
MultistageResult<T> multistage_fuse(const ad::ValueT<T>& mri_tokens,
                                    const ad::ValueT<T>& pet_tokens,
                                    const ad::ValueT<T>& nonimage_token,  // [1, 64]
                                    const ad::ValueT<T>& proj_w, const ad::ValueT<T>& proj_b,
                                    const FusionBlockParamsT<T>& p1,
                                    const FusionBlockParamsT<T>& p2) {
    if (nonimage_token->value.rows() != 1 || nonimage_token->value.cols() != proj_w->value.rows()) {
        throw dimension_error("non-image token must be [1," +
                              std::to_string(proj_w->value.rows()) + "], got " +
                              nonimage_token->value.shape_string());
    }
    MultistageResult<T> r;
    r.image_fused = cross_attend_concat(mri_tokens, pet_tokens, p1);
    auto projected = ad::linear(nonimage_token, proj_w, proj_b);  // [1, d]
    auto stage3 = cross_attend_concat(r.image_fused.token_seq, projected, p2);
    r.fused = stage3.pooled;
    return r;
}

// First k pooled coordinates rounded to 3 decimals, for textual inclusion in
// prompts.
inline std::vector<double> image_summary(const Tensor& pooled, int k = 8) {
    if (k > pooled.numel()) {
        throw dimension_error("image summary size " + std::to_string(k) +
                              " exceeds feature width " + std::to_string(pooled.numel()));
    }
    std::vector<double> out(static_cast<size_t>(k));
    for (int i = 0; i < k; ++i) {
        out[static_cast<size_t>(i)] =
            std::round(static_cast<double>(pooled.data[static_cast<size_t>(i)]) * 1000.0) / 1000.0;
    }
    return out;
}

}  // namespace mmf
