#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "mmf/encoder.hpp"
#include "mmf/fusion.hpp"

namespace mmf {

struct ModelConfig {
    int num_classes = 4;  // 2, 3 or 4 depending on the task
    int64_t d_model = 32;
    int heads = 2;
    EncoderConfig encoder;
    PosMode pos_mode = PosMode::kSum;
    std::pair<int64_t, int64_t> mlp_hidden{128, 64};

    void validate() const {
        if (num_classes < 2 || num_classes > 4) {
            throw config_error("num_classes must be 2, 3 or 4, got " +
                               std::to_string(num_classes));
        }
        encoder.validate();
        if (encoder.channels != d_model) {
            throw config_error("encoder channels (" + std::to_string(encoder.channels) +
                               ") must equal d_model (" + std::to_string(d_model) + ")");
        }
        if (token_width() % heads != 0) {
            throw config_error("token width " + std::to_string(token_width()) +
                               " not divisible by heads " + std::to_string(heads));
        }
    }

    // Token width after positional encoding; concat mode appends a d_model
    // wide table and doubles it. Fusion, projection and head all run at this
    // width.
    int64_t token_width() const {
        return pos_mode == PosMode::kSum ? d_model : 2 * d_model;
    }

    static ModelConfig defaults() {
        ModelConfig c;
        c.encoder.channels = c.d_model;
        return c;
    }
};

inline constexpr int64_t kFeatureTokenWidth = 64;

template <typename T>
struct ModelParamsT {
    EncoderParamsT<T> mri_encoder, pet_encoder;
    PositionTable pos_table;  // fixed sinusoid, not learned
    FusionBlockParamsT<T> fuse1, fuse2;
    ad::ValueT<T> nonimage_w, nonimage_b;  // [64, width], [width]
    ad::ValueT<T> head_w1, head_b1;        // [width, h1]
    ad::ValueT<T> head_w2, head_b2;        // [h1, h2]
    ad::ValueT<T> head_w3, head_b3;        // [h2, num_classes]
};

using ModelParams = ModelParamsT<float>;

// Draw order: mri encoder, pet encoder, fuse1, fuse2, non-image projection,
// head. The two encoders never share parameters; they are drawn from disjoint
// stream positions of the same seed.
inline ModelParams init_model(const ModelConfig& cfg, uint64_t seed) {
    cfg.validate();
    Rng rng(splitmix64(seed));
    ModelParams p;
    p.mri_encoder = init_encoder(cfg.encoder, rng);
    p.pet_encoder = init_encoder(cfg.encoder, rng);
    p.pos_table = PositionTable::sinusoidal(cfg.encoder.tokens(), cfg.d_model, cfg.pos_mode);
    const int64_t w = cfg.token_width();
    p.fuse1 = init_fusion_block(w, cfg.heads, rng);
    p.fuse2 = init_fusion_block(w, cfg.heads, rng);
    p.nonimage_w = ad::leaf(xavier_init(kFeatureTokenWidth, w, rng));
    p.nonimage_b = ad::leaf(Tensor::zeros({w}));
    p.head_w1 = ad::leaf(xavier_init(w, cfg.mlp_hidden.first, rng));
    p.head_b1 = ad::leaf(Tensor::zeros({cfg.mlp_hidden.first}));
    p.head_w2 = ad::leaf(xavier_init(cfg.mlp_hidden.first, cfg.mlp_hidden.second, rng));
    p.head_b2 = ad::leaf(Tensor::zeros({cfg.mlp_hidden.second}));
    p.head_w3 = ad::leaf(xavier_init(cfg.mlp_hidden.second, cfg.num_classes, rng));
    p.head_b3 = ad::leaf(Tensor::zeros({cfg.num_classes}));
    return p;
}

// Visits every learned tensor in a stable order with a stable name; the order
// defines the checkpoint layout, the SGD update order and the gradcheck
// parameter list.
template <typename T>
void visit_params(ModelParamsT<T>& p,
                  const std::function<void(const std::string&, ad::ValueT<T>&)>& fn) {
    auto visit_attention = [&](const std::string& prefix, AttentionParamsT<T>& a) {
        for (size_t h = 0; h < a.heads.size(); ++h) {
            const std::string hp = prefix + ".h" + std::to_string(h);
            fn(hp + ".wq", a.heads[h].wq);
            fn(hp + ".wk", a.heads[h].wk);
            fn(hp + ".wv", a.heads[h].wv);
        }
        fn(prefix + ".w_out", a.w_out);
    };
    auto visit_tf = [&](const std::string& prefix, TfBlockParamsT<T>& t) {
        visit_attention(prefix + ".attn", t.attn);
        fn(prefix + ".ln1_gain", t.ln1_gain);
        fn(prefix + ".ln1_bias", t.ln1_bias);
        fn(prefix + ".ln2_gain", t.ln2_gain);
        fn(prefix + ".ln2_bias", t.ln2_bias);
        fn(prefix + ".ff_w1", t.ff_w1);
        fn(prefix + ".ff_b1", t.ff_b1);
        fn(prefix + ".ff_w2", t.ff_w2);
        fn(prefix + ".ff_b2", t.ff_b2);
    };
    auto visit_fusion = [&](const std::string& prefix, FusionBlockParamsT<T>& f) {
        visit_attention(prefix + ".ab", f.attn_ab);
        visit_attention(prefix + ".ba", f.attn_ba);
        visit_tf(prefix + ".tf", f.tf);
    };
    auto visit_encoder = [&](const std::string& prefix, EncoderParamsT<T>& e) {
        fn(prefix + ".stem_w", e.stem_w);
        fn(prefix + ".stem_b", e.stem_b);
        for (size_t b = 0; b < e.blocks.size(); ++b) {
            const std::string bp = prefix + ".block" + std::to_string(b);
            fn(bp + ".dw_kernel", e.blocks[b].dw_kernel);
            fn(bp + ".ln_gain", e.blocks[b].ln_gain);
            fn(bp + ".ln_bias", e.blocks[b].ln_bias);
            fn(bp + ".pw1_w", e.blocks[b].pw1_w);
            fn(bp + ".pw1_b", e.blocks[b].pw1_b);
            fn(bp + ".pw2_w", e.blocks[b].pw2_w);
            fn(bp + ".pw2_b", e.blocks[b].pw2_b);
        }
    };
    visit_encoder("mri_encoder", p.mri_encoder);
    visit_encoder("pet_encoder", p.pet_encoder);
    visit_fusion("fuse1", p.fuse1);
    visit_fusion("fuse2", p.fuse2);
    fn("nonimage_proj.w", p.nonimage_w);
    fn("nonimage_proj.b", p.nonimage_b);
    fn("head.w1", p.head_w1);
    fn("head.b1", p.head_b1);
    fn("head.w2", p.head_w2);
    fn("head.b2", p.head_b2);
    fn("head.w3", p.head_w3);
    fn("head.b3", p.head_b3);
}

template <typename T>
std::vector<std::pair<std::string, ad::ValueT<T>>> named_params(ModelParamsT<T>& p) {
    std::vector<std::pair<std::string, ad::ValueT<T>>> out;
    visit_params<T>(p, [&](const std::string& name, ad::ValueT<T>& v) {
        out.emplace_back(name, v);
    });
    return out;
}

template <typename U>
ModelParamsT<U> cast_model_params(const ModelParams& p) {
    ModelParamsT<U> out;
    out.mri_encoder = cast_encoder_params<U>(p.mri_encoder);
    out.pet_encoder = cast_encoder_params<U>(p.pet_encoder);
    out.pos_table = p.pos_table;
    out.fuse1 = cast_fusion_block<U>(p.fuse1);
    out.fuse2 = cast_fusion_block<U>(p.fuse2);
    out.nonimage_w = ad::leaf(tensor_cast<U>(p.nonimage_w->value));
    out.nonimage_b = ad::leaf(tensor_cast<U>(p.nonimage_b->value));
    out.head_w1 = ad::leaf(tensor_cast<U>(p.head_w1->value));
    out.head_b1 = ad::leaf(tensor_cast<U>(p.head_b1->value));
    out.head_w2 = ad::leaf(tensor_cast<U>(p.head_w2->value));
    out.head_b2 = ad::leaf(tensor_cast<U>(p.head_b2->value));
    out.head_w3 = ad::leaf(tensor_cast<U>(p.head_w3->value));
    out.head_b3 = ad::leaf(tensor_cast<U>(p.head_b3->value));
    return out;
}

// Full forward pass: encode both images, positional-encode, run the
// multistage fusion, and classify the fused vector with the three-layer MLP
// head. Returns raw logits [1, num_classes]; softmax lives in the loss and in
// prediction scores.
template <typename T>
ad::ValueT<T> model_forward(const ad::ValueT<T>& mri, const ad::ValueT<T>& pet,
                            const ad::ValueT<T>& token, const ModelParamsT<T>& p,
                            const ModelConfig& cfg) {
    auto mri_tokens = positional_encode(encode_image(mri, p.mri_encoder, cfg.encoder), p.pos_table);
    auto pet_tokens = positional_encode(encode_image(pet, p.pet_encoder, cfg.encoder), p.pos_table);
    auto fused = multistage_fuse(mri_tokens, pet_tokens, token, p.nonimage_w, p.nonimage_b,
                                 p.fuse1, p.fuse2);
    // pooled [d] -> [1, d] row for the affine head
    auto x = ad::make_node<T>(TensorT<T>({1, fused.fused->value.numel()}, fused.fused->value.data),
                              {fused.fused}, [](ad::NodeT<T>& self) {
                                  auto& par = *self.parents[0];
                                  if (!par.requires_grad) return;
                                  par.ensure_grad();
                                  for (int64_t i = 0; i < self.grad.numel(); ++i)
                                      par.grad.data[i] += self.grad.data[i];
                              });
    x = ad::relu(ad::linear(x, p.head_w1, p.head_b1));
    x = ad::relu(ad::linear(x, p.head_w2, p.head_b2));
    return ad::linear(x, p.head_w3, p.head_b3);
}

// Convenience wrapper turning plain tensors into graph constants.
template <typename T>
ad::ValueT<T> model_forward(const TensorT<T>& mri, const TensorT<T>& pet, const TensorT<T>& token,
                            const ModelParamsT<T>& p, const ModelConfig& cfg) {
    TensorT<T> tok = token;
    if (tok.rank() == 1) tok.shape = {1, tok.numel()};
    return model_forward(ad::constant(mri), ad::constant(pet), ad::constant(std::move(tok)), p,
                         cfg);
}

// Argmax with ties broken toward the lowest index.
inline int predict(const Tensor& logits) {
    int best = 0;
    for (int64_t i = 1; i < logits.numel(); ++i) {
        if (logits.data[static_cast<size_t>(i)] > logits.data[static_cast<size_t>(best)]) {
            best = static_cast<int>(i);
        }
    }
    return best;
}

// Softmax probabilities of a logit row, computed in double.
std::vector<double> softmax_probs(const Tensor& logits);

// Binary checkpoint: magic/version header, a JSON description naming each
// tensor, then the tensors in visit order in the same container format the
// dataset uses. Round-trips bit-exactly.
void save_model(const ModelParams& params, const ModelConfig& config,
                const std::filesystem::path& path);
std::pair<ModelParams, ModelConfig> load_model(const std::filesystem::path& path);

}  // namespace mmf
