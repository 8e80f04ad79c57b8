#pragma once

#include <functional>
#include <memory>
#include <unordered_set>
#include <vector>

#include "mmf/errors.hpp"
#include "mmf/kernels.hpp"
#include "mmf/tensor.hpp"

// Reverse-mode differentiation over a define-by-run graph. Each op computes
// its forward value through the kernels and records a backward closure that
// accumulates into the parents' gradients. Graphs are single-threaded; the
// kernels inside an op may parallelize internally.

namespace mmf::ad {

template <typename T>
struct NodeT {
    TensorT<T> value;
    TensorT<T> grad;  // allocated on demand, same shape as value
    bool requires_grad = false;
    std::vector<std::shared_ptr<NodeT>> parents;
    std::function<void(NodeT&)> backward_fn;

    void ensure_grad() {
        if (grad.data.empty()) grad = TensorT<T>::zeros(value.shape);
    }
};

template <typename T>
using ValueT = std::shared_ptr<NodeT<T>>;

using Value = ValueT<float>;

template <typename T>
ValueT<T> constant(TensorT<T> v) {
    auto n = std::make_shared<NodeT<T>>();
    n->value = std::move(v);
    return n;
}

// Differentiable leaf (parameter or input whose gradient is wanted).
template <typename T>
ValueT<T> leaf(TensorT<T> v) {
    auto n = constant(std::move(v));
    n->requires_grad = true;
    return n;
}

template <typename T>
ValueT<T> make_node(TensorT<T> v, std::vector<ValueT<T>> parents,
                    std::function<void(NodeT<T>&)> backward) {
    auto n = std::make_shared<NodeT<T>>();
    n->value = std::move(v);
    for (const auto& p : parents) {
        if (p->requires_grad) {
            n->requires_grad = true;
            break;
        }
    }
    n->parents = std::move(parents);
    if (n->requires_grad) n->backward_fn = std::move(backward);
    return n;
}

// ---------------------------------------------------------------------------
// Ops

template <typename T>
ValueT<T> matmul(const ValueT<T>& a, const ValueT<T>& b) {
    const auto& av = a->value;
    const auto& bv = b->value;
    if (av.rank() != 2 || bv.rank() != 2 || av.cols() != bv.rows()) {
        throw dimension_error("matmul shape mismatch: " + av.shape_string() + " x " +
                              bv.shape_string());
    }
    const int64_t m = av.rows(), k = av.cols(), n = bv.cols();
    TensorT<T> out({m, n});
    kernels::matmul(av.data.data(), bv.data.data(), out.data.data(), m, k, n);
    return make_node<T>(std::move(out), {a, b}, [m, k, n](NodeT<T>& self) {
        auto& pa = *self.parents[0];
        auto& pb = *self.parents[1];
        const T* g = self.grad.data.data();
        if (pa.requires_grad) {
            pa.ensure_grad();
            // dA = dC * B^T
            std::vector<T> bt(static_cast<size_t>(k * n));
            kernels::transpose(pb.value.data.data(), bt.data(), k, n);
            std::vector<T> da(static_cast<size_t>(m * k));
            kernels::matmul(g, bt.data(), da.data(), m, n, k);
            for (size_t i = 0; i < da.size(); ++i) pa.grad.data[i] += da[i];
        }
        if (pb.requires_grad) {
            pb.ensure_grad();
            // dB = A^T * dC
            std::vector<T> at(static_cast<size_t>(m * k));
            kernels::transpose(pa.value.data.data(), at.data(), m, k);
            std::vector<T> db(static_cast<size_t>(k * n));
            kernels::matmul(at.data(), g, db.data(), k, m, n);
            for (size_t i = 0; i < db.size(); ++i) pb.grad.data[i] += db[i];
        }
    });
}

template <typename T>
ValueT<T> transpose(const ValueT<T>& x) {
    x->value.require_rank(2);
    const int64_t m = x->value.rows(), n = x->value.cols();
    TensorT<T> out({n, m});
    kernels::transpose(x->value.data.data(), out.data.data(), m, n);
    return make_node<T>(std::move(out), {x}, [m, n](NodeT<T>& self) {
        auto& p = *self.parents[0];
        if (!p.requires_grad) return;
        p.ensure_grad();
        std::vector<T> gt(static_cast<size_t>(m * n));
        kernels::transpose(self.grad.data.data(), gt.data(), n, m);
        for (size_t i = 0; i < gt.size(); ++i) p.grad.data[i] += gt[i];
    });
}

namespace detail {

// Shapes usable by the binary elementwise ops: exact match, or one side a
// one-element scalar tensor.
template <typename T>
void check_elementwise(const TensorT<T>& a, const TensorT<T>& b) {
    if (a.same_shape(b) || a.numel() == 1 || b.numel() == 1) return;
    throw dimension_error("elementwise shape mismatch: " + a.shape_string() + " vs " +
                          b.shape_string());
}

}  // namespace detail

template <typename T>
ValueT<T> add(const ValueT<T>& a, const ValueT<T>& b) {
    detail::check_elementwise(a->value, b->value);
    const bool as = a->value.numel() == 1, bs = b->value.numel() == 1;
    const auto& big = (a->value.numel() >= b->value.numel()) ? a->value : b->value;
    TensorT<T> out(big.shape);
    for (int64_t i = 0; i < out.numel(); ++i) {
        out.data[i] = a->value.data[as ? 0 : i] + b->value.data[bs ? 0 : i];
    }
    return make_node<T>(std::move(out), {a, b}, [as, bs](NodeT<T>& self) {
        auto& pa = *self.parents[0];
        auto& pb = *self.parents[1];
        if (pa.requires_grad) {
            pa.ensure_grad();
            for (int64_t i = 0; i < self.grad.numel(); ++i)
                pa.grad.data[as ? 0 : i] += self.grad.data[i];
        }
        if (pb.requires_grad) {
            pb.ensure_grad();
            for (int64_t i = 0; i < self.grad.numel(); ++i)
                pb.grad.data[bs ? 0 : i] += self.grad.data[i];
        }
    });
}

template <typename T>
ValueT<T> mul(const ValueT<T>& a, const ValueT<T>& b) {
    detail::check_elementwise(a->value, b->value);
    const bool as = a->value.numel() == 1, bs = b->value.numel() == 1;
    const auto& big = (a->value.numel() >= b->value.numel()) ? a->value : b->value;
    TensorT<T> out(big.shape);
    for (int64_t i = 0; i < out.numel(); ++i) {
        out.data[i] = a->value.data[as ? 0 : i] * b->value.data[bs ? 0 : i];
    }
    return make_node<T>(std::move(out), {a, b}, [as, bs](NodeT<T>& self) {
        auto& pa = *self.parents[0];
        auto& pb = *self.parents[1];
        if (pa.requires_grad) {
            pa.ensure_grad();
            for (int64_t i = 0; i < self.grad.numel(); ++i)
                pa.grad.data[as ? 0 : i] += self.grad.data[i] * pb.value.data[bs ? 0 : i];
        }
        if (pb.requires_grad) {
            pb.ensure_grad();
            for (int64_t i = 0; i < self.grad.numel(); ++i)
                pb.grad.data[bs ? 0 : i] += self.grad.data[i] * pa.value.data[as ? 0 : i];
        }
    });
}

template <typename T>
ValueT<T> scale(const ValueT<T>& x, double c) {
    TensorT<T> out(x->value.shape);
    const T tc = static_cast<T>(c);
    for (int64_t i = 0; i < out.numel(); ++i) out.data[i] = x->value.data[i] * tc;
    return make_node<T>(std::move(out), {x}, [tc](NodeT<T>& self) {
        auto& p = *self.parents[0];
        if (!p.requires_grad) return;
        p.ensure_grad();
        for (int64_t i = 0; i < self.grad.numel(); ++i) p.grad.data[i] += self.grad.data[i] * tc;
    });
}

// y[i,j] = x[i,j] + bias[j]; the row-vector bias used by affine layers.
template <typename T>
ValueT<T> add_rows(const ValueT<T>& x, const ValueT<T>& bias) {
    const int64_t m = x->value.rows(), n = x->value.cols();
    if (bias->value.numel() != n) {
        throw dimension_error("add_rows: bias " + bias->value.shape_string() +
                              " does not match row width " + std::to_string(n));
    }
    TensorT<T> out(x->value.shape);
    for (int64_t i = 0; i < m; ++i)
        for (int64_t j = 0; j < n; ++j)
            out.data[i * n + j] = x->value.data[i * n + j] + bias->value.data[j];
    return make_node<T>(std::move(out), {x, bias}, [m, n](NodeT<T>& self) {
        auto& px = *self.parents[0];
        auto& pb = *self.parents[1];
        if (px.requires_grad) {
            px.ensure_grad();
            for (int64_t i = 0; i < m * n; ++i) px.grad.data[i] += self.grad.data[i];
        }
        if (pb.requires_grad) {
            pb.ensure_grad();
            for (int64_t i = 0; i < m; ++i)
                for (int64_t j = 0; j < n; ++j) pb.grad.data[j] += self.grad.data[i * n + j];
        }
    });
}

template <typename T>
ValueT<T> relu(const ValueT<T>& x) {
    TensorT<T> out(x->value.shape);
    for (int64_t i = 0; i < out.numel(); ++i)
        out.data[i] = x->value.data[i] > T(0) ? x->value.data[i] : T(0);
    return make_node<T>(std::move(out), {x}, [](NodeT<T>& self) {
        auto& p = *self.parents[0];
        if (!p.requires_grad) return;
        p.ensure_grad();
        for (int64_t i = 0; i < self.grad.numel(); ++i)
            if (p.value.data[i] > T(0)) p.grad.data[i] += self.grad.data[i];
    });
}

template <typename T>
ValueT<T> gelu(const ValueT<T>& x) {
    TensorT<T> out(x->value.shape);
    kernels::gelu(x->value.data.data(), out.data.data(), out.numel());
    return make_node<T>(std::move(out), {x}, [](NodeT<T>& self) {
        auto& p = *self.parents[0];
        if (!p.requires_grad) return;
        p.ensure_grad();
        for (int64_t i = 0; i < self.grad.numel(); ++i)
            p.grad.data[i] += self.grad.data[i] * kernels::serial::gelu_tanh_grad(p.value.data[i]);
    });
}

inline constexpr double kLayerNormEps = 1e-5;

// Last-axis layer norm; x is [n] or [m,n], gain/bias are [n].
template <typename T>
ValueT<T> layer_norm(const ValueT<T>& x, const ValueT<T>& gain, const ValueT<T>& bias) {
    const int64_t m = x->value.rows(), n = x->value.cols();
    if (gain->value.numel() != n || bias->value.numel() != n) {
        throw dimension_error("layer_norm: gain/bias width must be " + std::to_string(n));
    }
    TensorT<T> out(x->value.shape);
    kernels::layer_norm_rows(x->value.data.data(), gain->value.data.data(),
                             bias->value.data.data(), out.data.data(), m, n,
                             static_cast<T>(kLayerNormEps));
    return make_node<T>(std::move(out), {x, gain, bias}, [m, n](NodeT<T>& self) {
        auto& px = *self.parents[0];
        auto& pg = *self.parents[1];
        auto& pb = *self.parents[2];
        const T eps = static_cast<T>(kLayerNormEps);
        std::vector<T> xhat(static_cast<size_t>(n));
        for (int64_t i = 0; i < m; ++i) {
            const T* xi = px.value.data.data() + i * n;
            const T* gi = self.grad.data.data() + i * n;
            T mean = T(0);
            for (int64_t j = 0; j < n; ++j) mean += xi[j];
            mean /= static_cast<T>(n);
            T var = T(0);
            for (int64_t j = 0; j < n; ++j) {
                const T d = xi[j] - mean;
                var += d * d;
            }
            var /= static_cast<T>(n);
            const T inv = T(1) / std::sqrt(var + eps);
            for (int64_t j = 0; j < n; ++j) xhat[j] = (xi[j] - mean) * inv;

            if (pg.requires_grad) {
                pg.ensure_grad();
                for (int64_t j = 0; j < n; ++j) pg.grad.data[j] += gi[j] * xhat[j];
            }
            if (pb.requires_grad) {
                pb.ensure_grad();
                for (int64_t j = 0; j < n; ++j) pb.grad.data[j] += gi[j];
            }
            if (px.requires_grad) {
                px.ensure_grad();
                // dxhat = dy * gain; dx = inv*(dxhat - mean(dxhat) - xhat*mean(dxhat*xhat))
                T s1 = T(0), s2 = T(0);
                for (int64_t j = 0; j < n; ++j) {
                    const T dxh = gi[j] * pg.value.data[j];
                    s1 += dxh;
                    s2 += dxh * xhat[j];
                }
                s1 /= static_cast<T>(n);
                s2 /= static_cast<T>(n);
                for (int64_t j = 0; j < n; ++j) {
                    const T dxh = gi[j] * pg.value.data[j];
                    px.grad.data[i * n + j] += inv * (dxh - s1 - xhat[j] * s2);
                }
            }
        }
    });
}

template <typename T>
ValueT<T> softmax_rows(const ValueT<T>& x) {
    const int64_t m = x->value.rows(), n = x->value.cols();
    TensorT<T> out(x->value.shape);
    kernels::softmax_rows(x->value.data.data(), out.data.data(), m, n);
    return make_node<T>(std::move(out), {x}, [m, n](NodeT<T>& self) {
        auto& p = *self.parents[0];
        if (!p.requires_grad) return;
        p.ensure_grad();
        // dx = y * (dy - sum(dy * y)) per row
        for (int64_t i = 0; i < m; ++i) {
            const T* y = self.value.data.data() + i * n;
            const T* g = self.grad.data.data() + i * n;
            T dot = T(0);
            for (int64_t j = 0; j < n; ++j) dot += g[j] * y[j];
            for (int64_t j = 0; j < n; ++j) p.grad.data[i * n + j] += y[j] * (g[j] - dot);
        }
    });
}

// -log softmax(logits)[label]; logits are [c] or [1,c], output is scalar.
template <typename T>
ValueT<T> cross_entropy(const ValueT<T>& logits, int64_t label) {
    const int64_t c = logits->value.numel();
    if (logits->value.rows() != 1) {
        throw dimension_error("cross_entropy expects a single logit row, got " +
                              logits->value.shape_string());
    }
    if (label < 0 || label >= c) {
        throw index_error("cross_entropy label " + std::to_string(label) + " out of range [0," +
                          std::to_string(c) + ")");
    }
    const T* z = logits->value.data.data();
    T mx = z[0];
    for (int64_t j = 1; j < c; ++j) mx = z[j] > mx ? z[j] : mx;
    T sum = T(0);
    for (int64_t j = 0; j < c; ++j) sum += std::exp(z[j] - mx);
    const T loss = std::log(sum) - (z[label] - mx);
    return make_node<T>(TensorT<T>::scalar(loss), {logits}, [c, label](NodeT<T>& self) {
        auto& p = *self.parents[0];
        if (!p.requires_grad) return;
        p.ensure_grad();
        const T g = self.grad.data[0];
        const T* z = p.value.data.data();
        T mx = z[0];
        for (int64_t j = 1; j < c; ++j) mx = z[j] > mx ? z[j] : mx;
        T sum = T(0);
        for (int64_t j = 0; j < c; ++j) sum += std::exp(z[j] - mx);
        for (int64_t j = 0; j < c; ++j) {
            T soft = std::exp(z[j] - mx) / sum;
            if (j == label) soft -= T(1);
            p.grad.data[j] += g * soft;
        }
    });
}

template <typename T>
ValueT<T> sum(const ValueT<T>& x) {
    T s = T(0);
    for (T v : x->value.data) s += v;
    return make_node<T>(TensorT<T>::scalar(s), {x}, [](NodeT<T>& self) {
        auto& p = *self.parents[0];
        if (!p.requires_grad) return;
        p.ensure_grad();
        const T g = self.grad.data[0];
        for (int64_t i = 0; i < p.grad.numel(); ++i) p.grad.data[i] += g;
    });
}

// Column means: [m,n] -> [n].
template <typename T>
ValueT<T> mean_rows(const ValueT<T>& x) {
    const int64_t m = x->value.rows(), n = x->value.cols();
    TensorT<T> out({n});
    for (int64_t i = 0; i < m; ++i)
        for (int64_t j = 0; j < n; ++j) out.data[j] += x->value.data[i * n + j];
    for (int64_t j = 0; j < n; ++j) out.data[j] /= static_cast<T>(m);
    return make_node<T>(std::move(out), {x}, [m, n](NodeT<T>& self) {
        auto& p = *self.parents[0];
        if (!p.requires_grad) return;
        p.ensure_grad();
        const T inv = T(1) / static_cast<T>(m);
        for (int64_t i = 0; i < m; ++i)
            for (int64_t j = 0; j < n; ++j) p.grad.data[i * n + j] += self.grad.data[j] * inv;
    });
}

// Sequence-axis concatenation: [ma,n] + [mb,n] -> [ma+mb,n].
template <typename T>
ValueT<T> concat_rows(const ValueT<T>& a, const ValueT<T>& b) {
    const int64_t n = a->value.cols();
    if (b->value.cols() != n) {
        throw dimension_error("concat_rows width mismatch: " + a->value.shape_string() + " vs " +
                              b->value.shape_string());
    }
    const int64_t ma = a->value.rows(), mb = b->value.rows();
    TensorT<T> out({ma + mb, n});
    std::copy(a->value.data.begin(), a->value.data.end(), out.data.begin());
    std::copy(b->value.data.begin(), b->value.data.end(), out.data.begin() + ma * n);
    return make_node<T>(std::move(out), {a, b}, [ma, mb, n](NodeT<T>& self) {
        auto& pa = *self.parents[0];
        auto& pb = *self.parents[1];
        if (pa.requires_grad) {
            pa.ensure_grad();
            for (int64_t i = 0; i < ma * n; ++i) pa.grad.data[i] += self.grad.data[i];
        }
        if (pb.requires_grad) {
            pb.ensure_grad();
            for (int64_t i = 0; i < mb * n; ++i) pb.grad.data[i] += self.grad.data[ma * n + i];
        }
    });
}

// Feature-axis concatenation: [m,na] + [m,nb] -> [m,na+nb].
template <typename T>
ValueT<T> concat_cols(const ValueT<T>& a, const ValueT<T>& b) {
    const int64_t m = a->value.rows();
    if (b->value.rows() != m) {
        throw dimension_error("concat_cols row mismatch: " + a->value.shape_string() + " vs " +
                              b->value.shape_string());
    }
    const int64_t na = a->value.cols(), nb = b->value.cols();
    TensorT<T> out({m, na + nb});
    for (int64_t i = 0; i < m; ++i) {
        std::copy(a->value.data.begin() + i * na, a->value.data.begin() + (i + 1) * na,
                  out.data.begin() + i * (na + nb));
        std::copy(b->value.data.begin() + i * nb, b->value.data.begin() + (i + 1) * nb,
                  out.data.begin() + i * (na + nb) + na);
    }
    return make_node<T>(std::move(out), {a, b}, [m, na, nb](NodeT<T>& self) {
        auto& pa = *self.parents[0];
        auto& pb = *self.parents[1];
        for (int64_t i = 0; i < m; ++i) {
            const T* g = self.grad.data.data() + i * (na + nb);
            if (pa.requires_grad) {
                pa.ensure_grad();
                for (int64_t j = 0; j < na; ++j) pa.grad.data[i * na + j] += g[j];
            }
            if (pb.requires_grad) {
                pb.ensure_grad();
                for (int64_t j = 0; j < nb; ++j) pb.grad.data[i * nb + j] += g[na + j];
            }
        }
    });
}

// Depthwise 3x3 conv over tokens laid out as an (h, w) grid: x is [h*w, c],
// kernel is [c, 9], zero padding.
template <typename T>
ValueT<T> depthwise_conv3x3(const ValueT<T>& x, const ValueT<T>& kernel, int64_t h, int64_t w) {
    const int64_t c = x->value.cols();
    if (x->value.rows() != h * w) {
        throw dimension_error("depthwise_conv3x3: token count " +
                              std::to_string(x->value.rows()) + " != grid " + std::to_string(h) +
                              "x" + std::to_string(w));
    }
    if (kernel->value.rows() != c || kernel->value.cols() != 9) {
        throw dimension_error("depthwise_conv3x3: kernel must be [" + std::to_string(c) +
                              ",9], got " + kernel->value.shape_string());
    }
    TensorT<T> out(x->value.shape);
    kernels::depthwise_conv3x3(x->value.data.data(), kernel->value.data.data(), out.data.data(), h,
                               w, c);
    return make_node<T>(std::move(out), {x, kernel}, [h, w, c](NodeT<T>& self) {
        auto& px = *self.parents[0];
        auto& pk = *self.parents[1];
        const T* g = self.grad.data.data();
        const T* xv = px.value.data.data();
        const T* kv = pk.value.data.data();
        if (px.requires_grad) px.ensure_grad();
        if (pk.requires_grad) pk.ensure_grad();
        for (int64_t r = 0; r < h; ++r) {
            for (int64_t cc = 0; cc < w; ++cc) {
                for (int64_t ch = 0; ch < c; ++ch) {
                    const T go = g[(r * w + cc) * c + ch];
                    for (int64_t dy = -1; dy <= 1; ++dy) {
                        const int64_t rr = r + dy;
                        if (rr < 0 || rr >= h) continue;
                        for (int64_t dx = -1; dx <= 1; ++dx) {
                            const int64_t cx = cc + dx;
                            if (cx < 0 || cx >= w) continue;
                            const int64_t ki = ch * 9 + (dy + 1) * 3 + (dx + 1);
                            const int64_t xi = (rr * w + cx) * c + ch;
                            if (px.requires_grad) px.grad.data[xi] += go * kv[ki];
                            if (pk.requires_grad) pk.grad.data[ki] += go * xv[xi];
                        }
                    }
                }
            }
        }
    });
}

// [1,S,S] image -> [(S/p)^2, p*p] patches, patch grid row-major, pixels within
// a patch row-major.
template <typename T>
ValueT<T> patchify(const ValueT<T>& img, int64_t p) {
    img->value.require_rank(3);
    const int64_t s = img->value.shape[1];
    if (img->value.shape[0] != 1 || img->value.shape[2] != s) {
        throw dimension_error("patchify expects [1,S,S], got " + img->value.shape_string());
    }
    if (s % p != 0) {
        throw dimension_error("patchify: image size " + std::to_string(s) +
                              " not divisible by patch " + std::to_string(p));
    }
    const int64_t g = s / p;
    TensorT<T> out({g * g, p * p});
    for (int64_t pr = 0; pr < g; ++pr)
        for (int64_t pc = 0; pc < g; ++pc)
            for (int64_t dy = 0; dy < p; ++dy)
                for (int64_t dx = 0; dx < p; ++dx)
                    out.data[(pr * g + pc) * p * p + dy * p + dx] =
                        img->value.data[(pr * p + dy) * s + pc * p + dx];
    return make_node<T>(std::move(out), {img}, [s, p, g](NodeT<T>& self) {
        auto& pi = *self.parents[0];
        if (!pi.requires_grad) return;
        pi.ensure_grad();
        for (int64_t pr = 0; pr < g; ++pr)
            for (int64_t pc = 0; pc < g; ++pc)
                for (int64_t dy = 0; dy < p; ++dy)
                    for (int64_t dx = 0; dx < p; ++dx)
                        pi.grad.data[(pr * p + dy) * s + pc * p + dx] +=
                            self.grad.data[(pr * g + pc) * p * p + dy * p + dx];
    });
}

// x*W + b as one call; b may be null.
template <typename T>
ValueT<T> linear(const ValueT<T>& x, const ValueT<T>& w, const ValueT<T>& b) {
    auto y = matmul(x, w);
    return b ? add_rows(y, b) : y;
}

// ---------------------------------------------------------------------------
// Reverse sweep

template <typename T>
void topo_sort(const ValueT<T>& root, std::vector<NodeT<T>*>& order) {
    std::unordered_set<NodeT<T>*> visited;
    std::vector<std::pair<NodeT<T>*, size_t>> stack;
    stack.push_back({root.get(), 0});
    visited.insert(root.get());
    while (!stack.empty()) {
        auto& [node, idx] = stack.back();
        if (idx < node->parents.size()) {
            NodeT<T>* parent = node->parents[idx++].get();
            if (parent->requires_grad && !visited.count(parent)) {
                visited.insert(parent);
                stack.push_back({parent, 0});
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
}

// Populates gradients for every node reachable from the scalar loss;
// accumulation is additive, so shared nodes collect from all consumers.
template <typename T>
void backward(const ValueT<T>& loss) {
    if (loss->value.numel() != 1) {
        throw contract_error("backward requires a scalar loss, got shape " +
                             loss->value.shape_string());
    }
    if (!loss->requires_grad) return;
    std::vector<NodeT<T>*> order;
    topo_sort(loss, order);
    loss->ensure_grad();
    loss->grad.data[0] = T(1);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        NodeT<T>* n = *it;
        if (n->backward_fn && !n->grad.data.empty()) n->backward_fn(*n);
    }
}

template <typename T>
void zero_grad(const ValueT<T>& v) {
    v->grad = TensorT<T>();
}

}  // namespace mmf::ad
