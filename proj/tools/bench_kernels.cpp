// Compares the serial reference kernels against the OpenMP variants and
// checks that both produce identical bits. Sizes are modest so a run stays
// under a few seconds even on one core.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "mmf/kernels.hpp"
#include "mmf/rng.hpp"

using mmf::Rng;

namespace {

std::vector<float> random_vec(size_t n, Rng& rng) {
    std::vector<float> v(n);
    for (auto& x : v) x = static_cast<float>(rng.uniform(-1.0, 1.0));
    return v;
}

template <typename F>
double time_best_of(int reps, F&& fn) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        fn();
        const auto t1 = std::chrono::steady_clock::now();
        best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
    }
    return best;
}

void row(const char* name, double serial_s, double parallel_s, bool bitwise_equal) {
    std::printf("%-24s %10.3f ms %10.3f ms %8.2fx   %s\n", name, serial_s * 1e3, parallel_s * 1e3,
                serial_s / parallel_s, bitwise_equal ? "bit-equal" : "MISMATCH");
}

}  // namespace

int main() {
#ifdef _OPENMP
    std::printf("OpenMP enabled, max threads %d\n\n", omp_get_max_threads());
#else
    std::printf("OpenMP disabled (serial build)\n\n");
#endif
    std::printf("%-24s %13s %13s %9s\n", "kernel", "serial", "openmp", "speedup");

    Rng rng(42);
    const int reps = 5;

    {
        const int64_t m = 256, k = 256, n = 256;
        auto a = random_vec(static_cast<size_t>(m * k), rng);
        auto b = random_vec(static_cast<size_t>(k * n), rng);
        std::vector<float> c0(static_cast<size_t>(m * n)), c1(c0.size());
        const double ts = time_best_of(
            reps, [&] { mmf::kernels::serial::matmul(a.data(), b.data(), c0.data(), m, k, n); });
        const double tp =
            time_best_of(reps, [&] { mmf::kernels::matmul(a.data(), b.data(), c1.data(), m, k, n); });
        row("matmul 256x256x256", ts, tp,
            std::memcmp(c0.data(), c1.data(), c0.size() * sizeof(float)) == 0);
    }

    {
        const int64_t m = 2048, n = 512;
        auto x = random_vec(static_cast<size_t>(m * n), rng);
        std::vector<float> y0(x.size()), y1(x.size());
        const double ts = time_best_of(
            reps, [&] { mmf::kernels::serial::softmax_rows(x.data(), y0.data(), m, n); });
        const double tp =
            time_best_of(reps, [&] { mmf::kernels::softmax_rows(x.data(), y1.data(), m, n); });
        row("softmax 2048x512", ts, tp,
            std::memcmp(y0.data(), y1.data(), y0.size() * sizeof(float)) == 0);
    }

    {
        const int64_t m = 2048, n = 512;
        auto x = random_vec(static_cast<size_t>(m * n), rng);
        auto g = random_vec(static_cast<size_t>(n), rng);
        auto b = random_vec(static_cast<size_t>(n), rng);
        std::vector<float> y0(x.size()), y1(x.size());
        const double ts = time_best_of(reps, [&] {
            mmf::kernels::serial::layer_norm_rows(x.data(), g.data(), b.data(), y0.data(), m, n,
                                                  1e-5f);
        });
        const double tp = time_best_of(reps, [&] {
            mmf::kernels::layer_norm_rows(x.data(), g.data(), b.data(), y1.data(), m, n, 1e-5f);
        });
        row("layer_norm 2048x512", ts, tp,
            std::memcmp(y0.data(), y1.data(), y0.size() * sizeof(float)) == 0);
    }

    {
        const int64_t n = 1 << 22;
        auto x = random_vec(static_cast<size_t>(n), rng);
        std::vector<float> y0(x.size()), y1(x.size());
        const double ts =
            time_best_of(reps, [&] { mmf::kernels::serial::gelu(x.data(), y0.data(), n); });
        const double tp = time_best_of(reps, [&] { mmf::kernels::gelu(x.data(), y1.data(), n); });
        row("gelu 4M", ts, tp, std::memcmp(y0.data(), y1.data(), y0.size() * sizeof(float)) == 0);
    }

    {
        const int64_t h = 128, w = 128, c = 64;
        auto x = random_vec(static_cast<size_t>(h * w * c), rng);
        auto k = random_vec(static_cast<size_t>(c * 9), rng);
        std::vector<float> y0(x.size()), y1(x.size());
        const double ts = time_best_of(reps, [&] {
            mmf::kernels::serial::depthwise_conv3x3(x.data(), k.data(), y0.data(), h, w, c);
        });
        const double tp = time_best_of(
            reps, [&] { mmf::kernels::depthwise_conv3x3(x.data(), k.data(), y1.data(), h, w, c); });
        row("dwconv3x3 128x128x64", ts, tp,
            std::memcmp(y0.data(), y1.data(), y0.size() * sizeof(float)) == 0);
    }

    return 0;
}
