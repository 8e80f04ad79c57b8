#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "mmf/autodiff.hpp"
#include "mmf/rng.hpp"

namespace mmf {

struct AttentionConfig {
    int64_t d_model = 0;
    int64_t d_q = 0;
    int64_t d_k = 0;  // must equal d_q
    int64_t d_v = 0;
    int heads = 1;

    void validate() const {
        if (d_q != d_k) {
            throw dimension_error("attention config requires d_q == d_k, got " +
                                  std::to_string(d_q) + " vs " + std::to_string(d_k));
        }
        if (d_model <= 0 || d_q <= 0 || d_v <= 0 || heads < 1) {
            throw config_error("attention config has non-positive dimensions");
        }
    }

    // Concatenated width fed to the output projection.
    int64_t concat_width() const { return static_cast<int64_t>(heads) * d_v; }

    // The usual even split d_q = d_v = d_model / heads.
    static AttentionConfig evenly_split(int64_t d_model, int heads) {
        if (heads < 1 || d_model % heads != 0) {
            throw config_error("d_model " + std::to_string(d_model) + " not divisible by heads " +
                               std::to_string(heads));
        }
        AttentionConfig c;
        c.d_model = d_model;
        c.d_q = c.d_k = c.d_v = d_model / heads;
        c.heads = heads;
        return c;
    }
};

// One head's projections; each matrix takes the full d_model input width.
template <typename T>
struct HeadParamsT {
    ad::ValueT<T> wq;  // [d_model, d_q]
    ad::ValueT<T> wk;  // [d_model, d_k]
    ad::ValueT<T> wv;  // [d_model, d_v]
};

template <typename T>
struct AttentionParamsT {
    std::vector<HeadParamsT<T>> heads;
    ad::ValueT<T> w_out;  // [heads*d_v, d_model]
};

using HeadParams = HeadParamsT<float>;
using AttentionParams = AttentionParamsT<float>;

// Xavier-uniform bound for a [rows, cols] weight matrix.
inline double xavier_bound(int64_t rows, int64_t cols) {
    return std::sqrt(6.0 / static_cast<double>(rows + cols));
}

inline Tensor xavier_init(int64_t rows, int64_t cols, Rng& rng) {
    Tensor t({rows, cols});
    const double a = xavier_bound(rows, cols);
    for (auto& v : t.data) v = static_cast<float>(rng.uniform(-a, a));
    return t;
}

// Draw order: per head wq, wk, wv; then w_out.
inline AttentionParams init_attention(const AttentionConfig& cfg, Rng& rng) {
    cfg.validate();
    AttentionParams p;
    p.heads.resize(static_cast<size_t>(cfg.heads));
    for (auto& h : p.heads) {
        h.wq = ad::leaf(xavier_init(cfg.d_model, cfg.d_q, rng));
        h.wk = ad::leaf(xavier_init(cfg.d_model, cfg.d_k, rng));
        h.wv = ad::leaf(xavier_init(cfg.d_model, cfg.d_v, rng));
    }
    p.w_out = ad::leaf(xavier_init(cfg.concat_width(), cfg.d_model, rng));
    return p;
}

template <typename U, typename T>
HeadParamsT<U> cast_head_params(const HeadParamsT<T>& h) {
    return {ad::leaf(tensor_cast<U>(h.wq->value)), ad::leaf(tensor_cast<U>(h.wk->value)),
            ad::leaf(tensor_cast<U>(h.wv->value))};
}

template <typename U, typename T>
AttentionParamsT<U> cast_attention_params(const AttentionParamsT<T>& p) {
    AttentionParamsT<U> out;
    out.heads.reserve(p.heads.size());
    for (const auto& h : p.heads) out.heads.push_back(cast_head_params<U>(h));
    out.w_out = ad::leaf(tensor_cast<U>(p.w_out->value));
    return out;
}

// ---------------------------------------------------------------------------
// Positional encoding

enum class PosMode { kSum, kConcat };

inline std::string pos_mode_name(PosMode m) { return m == PosMode::kSum ? "sum" : "concat"; }

inline PosMode pos_mode_from_name(const std::string& s) {
    if (s == "sum") return PosMode::kSum;
    if (s == "concat") return PosMode::kConcat;
    throw config_error("unknown positional mode '" + s + "' (expected sum or concat)");
}

struct PositionTable {
    Tensor table;  // [n_max, d_p]
    PosMode mode = PosMode::kSum;

    int64_t n_max() const { return table.rows(); }
    int64_t d_p() const { return table.cols(); }

    // Fixed sinusoidal table:
    //   table[pos, 2i]   = sin(pos / 10000^(2i/d_p))
    //   table[pos, 2i+1] = cos(pos / 10000^(2i/d_p))
    static PositionTable sinusoidal(int64_t n_max, int64_t d_p, PosMode mode) {
        PositionTable pt;
        pt.mode = mode;
        pt.table = Tensor({n_max, d_p});
        for (int64_t pos = 0; pos < n_max; ++pos) {
            for (int64_t j = 0; j < d_p; ++j) {
                const int64_t i = j / 2;
                const double rate = std::pow(10000.0, 2.0 * static_cast<double>(i) /
                                                          static_cast<double>(d_p));
                const double angle = static_cast<double>(pos) / rate;
                pt.table.data[static_cast<size_t>(pos * d_p + j)] =
                    static_cast<float>((j % 2 == 0) ? std::sin(angle) : std::cos(angle));
            }
        }
        return pt;
    }
};

// Adds (sum mode) or appends (concat mode) the first N table rows to a token
// sequence. The table enters the graph as a constant.
template <typename T>
ad::ValueT<T> positional_encode(const ad::ValueT<T>& x, const PositionTable& pt) {
    const int64_t n = x->value.rows(), d = x->value.cols();
    if (n > pt.n_max()) {
        throw capacity_error("sequence length " + std::to_string(n) +
                             " exceeds position table capacity " + std::to_string(pt.n_max()));
    }
    if (pt.mode == PosMode::kSum && pt.d_p() != d) {
        throw dimension_error("sum-mode positional encoding needs d_p == d, got d_p=" +
                              std::to_string(pt.d_p()) + " d=" + std::to_string(d));
    }
    TensorT<T> rows({n, pt.d_p()});
    for (int64_t i = 0; i < n * pt.d_p(); ++i)
        rows.data[static_cast<size_t>(i)] = static_cast<T>(pt.table.data[static_cast<size_t>(i)]);
    auto pos = ad::constant(std::move(rows));
    return pt.mode == PosMode::kSum ? ad::add(x, pos) : ad::concat_cols(x, pos);
}

// ---------------------------------------------------------------------------
// Attention

// Raw attention weights Softmax(Q K^T / sqrt(d_q)) for one head; row-stochastic.
template <typename T>
ad::ValueT<T> attention_weights(const ad::ValueT<T>& q_src, const ad::ValueT<T>& kv_src,
                                const HeadParamsT<T>& h) {
    auto q = ad::matmul(q_src, h.wq);
    auto k = ad::matmul(kv_src, h.wk);
    const int64_t d_q = h.wq->value.cols();
    auto scores = ad::scale(ad::matmul(q, ad::transpose(k)), 1.0 / std::sqrt(static_cast<double>(d_q)));
    return ad::softmax_rows(scores);
}

// Single-head scaled dot-product attention: Softmax(Q K^T / sqrt(d_q)) V.
template <typename T>
ad::ValueT<T> self_attention(const ad::ValueT<T>& z, const HeadParamsT<T>& h) {
    auto a = attention_weights(z, z, h);
    return ad::matmul(a, ad::matmul(z, h.wv));
}

// Multi-head attention with separate query and key/value sources: queries are
// projected from q_src, keys and values from kv_src; per-head outputs are
// concatenated along the feature axis and fused by the output projection.
// q_src == kv_src gives ordinary multi-head self-attention.
template <typename T>
ad::ValueT<T> mhsa(const ad::ValueT<T>& q_src, const ad::ValueT<T>& kv_src,
                   const AttentionParamsT<T>& p) {
    if (q_src->value.cols() != kv_src->value.cols()) {
        throw dimension_error("mhsa source width mismatch: " + q_src->value.shape_string() +
                              " vs " + kv_src->value.shape_string());
    }
    ad::ValueT<T> cat;
    for (const auto& h : p.heads) {
        auto a = attention_weights(q_src, kv_src, h);
        auto z = ad::matmul(a, ad::matmul(kv_src, h.wv));
        cat = cat ? ad::concat_cols(cat, z) : z;
    }
    return ad::matmul(cat, p.w_out);
}

}  // namespace mmf
