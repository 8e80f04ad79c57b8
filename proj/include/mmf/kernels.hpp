#pragma once

#include <cmath>
#include <cstdint>

#ifdef _OPENMP
#include <omp.h>
#endif

// Numeric kernels behind the autodiff ops. Every kernel exists twice: a
// serial reference version under kernels::serial, and the default OpenMP
// version at kernels:: scope. The parallel variants split work across
// independent output elements only and keep each element's reduction order
// identical to the serial code, so the two produce bit-identical results for
// any thread count. tools/bench_kernels compares their throughput.

namespace mmf::kernels {

// Work threshold (in flop-ish units) below which the parallel variants stay
// on one thread; spawning a team for tiny tensors costs more than it saves.
inline constexpr int64_t kParallelMinWork = 1 << 14;

namespace serial {

// c[m,n] = a[m,k] * b[k,n]; c is overwritten.
template <typename T>
void matmul(const T* a, const T* b, T* c, int64_t m, int64_t k, int64_t n) {
    for (int64_t i = 0; i < m; ++i) {
        T* ci = c + i * n;
        for (int64_t j = 0; j < n; ++j) ci[j] = T(0);
        const T* ai = a + i * k;
        for (int64_t p = 0; p < k; ++p) {
            const T av = ai[p];
            const T* bp = b + p * n;
            for (int64_t j = 0; j < n; ++j) ci[j] += av * bp[j];
        }
    }
}

template <typename T>
void transpose(const T* x, T* y, int64_t m, int64_t n) {
    for (int64_t i = 0; i < m; ++i)
        for (int64_t j = 0; j < n; ++j) y[j * m + i] = x[i * n + j];
}

// Row-wise softmax with max subtraction.
template <typename T>
void softmax_rows(const T* x, T* y, int64_t m, int64_t n) {
    for (int64_t i = 0; i < m; ++i) {
        const T* xi = x + i * n;
        T* yi = y + i * n;
        T mx = xi[0];
        for (int64_t j = 1; j < n; ++j) mx = xi[j] > mx ? xi[j] : mx;
        T sum = T(0);
        for (int64_t j = 0; j < n; ++j) {
            yi[j] = std::exp(xi[j] - mx);
            sum += yi[j];
        }
        for (int64_t j = 0; j < n; ++j) yi[j] /= sum;
    }
}

// Normalizes each length-n row to mean 0 / variance 1 (biased variance,
// epsilon added under the square root), then applies gain and bias.
template <typename T>
void layer_norm_rows(const T* x, const T* gain, const T* bias, T* y, int64_t m, int64_t n, T eps) {
    for (int64_t i = 0; i < m; ++i) {
        const T* xi = x + i * n;
        T* yi = y + i * n;
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
        for (int64_t j = 0; j < n; ++j) yi[j] = (xi[j] - mean) * inv * gain[j] + bias[j];
    }
}

template <typename T>
T gelu_tanh(T v) {
    // tanh approximation: 0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3))).
    const T kAlpha = T(0.7978845608028654);
    const T kBeta = T(0.044715);
    return T(0.5) * v * (T(1) + std::tanh(kAlpha * (v + kBeta * v * v * v)));
}

template <typename T>
T gelu_tanh_grad(T v) {
    const T kAlpha = T(0.7978845608028654);
    const T kBeta = T(0.044715);
    const T u = kAlpha * (v + kBeta * v * v * v);
    const T t = std::tanh(u);
    const T du = kAlpha * (T(1) + T(3) * kBeta * v * v);
    return T(0.5) * (T(1) + t) + T(0.5) * v * (T(1) - t * t) * du;
}

template <typename T>
void gelu(const T* x, T* y, int64_t n) {
    for (int64_t i = 0; i < n; ++i) y[i] = gelu_tanh(x[i]);
}

// One output row of the depthwise 3x3 convolution; reads input rows r-1..r+1
// from the full grid. Shared by the serial and parallel drivers below.
template <typename T>
void depthwise_conv3x3_row(const T* x, const T* kernel, T* y_row, int64_t r, int64_t h, int64_t w,
                           int64_t channels) {
    for (int64_t c = 0; c < w; ++c) {
        T* yo = y_row + c * channels;
        for (int64_t ch = 0; ch < channels; ++ch) {
            T acc = T(0);
            const T* kc = kernel + ch * 9;
            for (int64_t dy = -1; dy <= 1; ++dy) {
                const int64_t rr = r + dy;
                if (rr < 0 || rr >= h) continue;
                for (int64_t dx = -1; dx <= 1; ++dx) {
                    const int64_t cc = c + dx;
                    if (cc < 0 || cc >= w) continue;
                    acc += x[(rr * w + cc) * channels + ch] * kc[(dy + 1) * 3 + (dx + 1)];
                }
            }
            yo[ch] = acc;
        }
    }
}

// Depthwise 3x3 convolution over a (h, w) grid stored row-major as
// x[(r*w + c)*channels + ch], zero padding, kernel[ch*9 + (dy+1)*3 + (dx+1)].
template <typename T>
void depthwise_conv3x3(const T* x, const T* kernel, T* y, int64_t h, int64_t w, int64_t channels) {
    for (int64_t r = 0; r < h; ++r) {
        depthwise_conv3x3_row(x, kernel, y + r * w * channels, r, h, w, channels);
    }
}

}  // namespace serial

template <typename T>
void matmul(const T* a, const T* b, T* c, int64_t m, int64_t k, int64_t n) {
#pragma omp parallel for schedule(static) if (m * k * n >= kParallelMinWork && m > 1)
    for (int64_t i = 0; i < m; ++i) {
        serial::matmul(a + i * k, b, c + i * n, 1, k, n);
    }
}

template <typename T>
void transpose(const T* x, T* y, int64_t m, int64_t n) {
#pragma omp parallel for schedule(static) if (m * n >= kParallelMinWork && m > 1)
    for (int64_t i = 0; i < m; ++i) {
        for (int64_t j = 0; j < n; ++j) y[j * m + i] = x[i * n + j];
    }
}

template <typename T>
void softmax_rows(const T* x, T* y, int64_t m, int64_t n) {
#pragma omp parallel for schedule(static) if (m * n >= kParallelMinWork && m > 1)
    for (int64_t i = 0; i < m; ++i) {
        serial::softmax_rows(x + i * n, y + i * n, 1, n);
    }
}

template <typename T>
void layer_norm_rows(const T* x, const T* gain, const T* bias, T* y, int64_t m, int64_t n, T eps) {
#pragma omp parallel for schedule(static) if (m * n >= kParallelMinWork && m > 1)
    for (int64_t i = 0; i < m; ++i) {
        serial::layer_norm_rows(x + i * n, gain, bias, y + i * n, 1, n, eps);
    }
}

template <typename T>
void gelu(const T* x, T* y, int64_t n) {
#pragma omp parallel for schedule(static) if (n >= kParallelMinWork)
    for (int64_t i = 0; i < n; ++i) y[i] = serial::gelu_tanh(x[i]);
}

template <typename T>
void depthwise_conv3x3(const T* x, const T* kernel, T* y, int64_t h, int64_t w, int64_t channels) {
#pragma omp parallel for schedule(static) if (h * w * channels * 9 >= kParallelMinWork && h > 1)
    for (int64_t r = 0; r < h; ++r) {
        serial::depthwise_conv3x3_row(x, kernel, y + r * w * channels, r, h, w, channels);
    }
}

}  // namespace mmf::kernels
