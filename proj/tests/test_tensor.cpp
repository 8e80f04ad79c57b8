#include <doctest.h>

#include <cmath>
#include <cstring>

#include "mmf/kernels.hpp"
#include "mmf/rng.hpp"
#include "mmf/tensor.hpp"

using namespace mmf;

TEST_CASE("tensor shape bookkeeping") {
    Tensor t({2, 3});
    CHECK(t.numel() == 6);
    CHECK(t.rows() == 2);
    CHECK(t.cols() == 3);
    CHECK_THROWS_AS(Tensor({0, 3}), dimension_error);
    CHECK_THROWS_AS(Tensor({2, 2}, {1.0f, 2.0f, 3.0f}), dimension_error);
}

TEST_CASE("matmul hand-checked cases") {
    // identity * x == x
    Tensor i2 = Tensor::identity(2);
    Tensor x({2, 2}, {3, 4, 5, 6});
    std::vector<float> out(4);
    kernels::serial::matmul(i2.data.data(), x.data.data(), out.data(), 2, 2, 2);
    CHECK(std::memcmp(out.data(), x.data.data(), 4 * sizeof(float)) == 0);

    // [[1,2],[3,4]] x [[5],[6]] = [[17],[39]]
    Tensor a({2, 2}, {1, 2, 3, 4});
    Tensor b({2, 1}, {5, 6});
    std::vector<float> c(2);
    kernels::serial::matmul(a.data.data(), b.data.data(), c.data(), 2, 2, 1);
    CHECK(c[0] == doctest::Approx(17.0f));
    CHECK(c[1] == doctest::Approx(39.0f));

    // zero matrix annihilates
    Tensor z = Tensor::zeros({2, 2});
    kernels::serial::matmul(z.data.data(), x.data.data(), out.data(), 2, 2, 2);
    for (float v : out) CHECK(v == 0.0f);
}

TEST_CASE("matmul associativity at 1e-4 relative error") {
    Rng rng(9);
    for (int trial = 0; trial < 5; ++trial) {
        const int64_t m = 4, k = 5, n = 3, q = 6;
        std::vector<float> a(m * k), b(k * n), c(n * q);
        for (auto& v : a) v = static_cast<float>(rng.uniform(-1, 1));
        for (auto& v : b) v = static_cast<float>(rng.uniform(-1, 1));
        for (auto& v : c) v = static_cast<float>(rng.uniform(-1, 1));
        std::vector<float> ab(m * n), ab_c(m * q), bc(k * q), a_bc(m * q);
        kernels::serial::matmul(a.data(), b.data(), ab.data(), m, k, n);
        kernels::serial::matmul(ab.data(), c.data(), ab_c.data(), m, n, q);
        kernels::serial::matmul(b.data(), c.data(), bc.data(), k, n, q);
        kernels::serial::matmul(a.data(), bc.data(), a_bc.data(), m, k, q);
        for (size_t i = 0; i < ab_c.size(); ++i) {
            const double denom = std::max(1e-6, std::abs(static_cast<double>(ab_c[i])));
            CHECK(std::abs(ab_c[i] - a_bc[i]) / denom < 1e-4);
        }
    }
}

TEST_CASE("softmax rows") {
    SUBCASE("symmetry") {
        float x[2] = {0, 0}, y[2];
        kernels::serial::softmax_rows(x, y, 1, 2);
        CHECK(y[0] == doctest::Approx(0.5));
        CHECK(y[1] == doctest::Approx(0.5));
    }
    SUBCASE("closed form for [ln 2, 0]") {
        float x[2] = {std::log(2.0f), 0.0f}, y[2];
        kernels::serial::softmax_rows(x, y, 1, 2);
        CHECK(y[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-6));
        CHECK(y[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-6));
    }
    SUBCASE("no overflow at magnitude 1e3") {
        float x[2] = {1000.0f, 0.0f}, y[2];
        kernels::serial::softmax_rows(x, y, 1, 2);
        CHECK(std::isfinite(y[0]));
        CHECK(y[0] == doctest::Approx(1.0));
        CHECK(y[1] == doctest::Approx(0.0));
    }
    SUBCASE("rows sum to 1 for arbitrary finite input") {
        Rng rng(3);
        for (int trial = 0; trial < 10; ++trial) {
            const int64_t m = 7, n = 9;
            std::vector<float> x(m * n), y(m * n);
            for (auto& v : x) v = static_cast<float>(rng.uniform(-1000, 1000));
            kernels::serial::softmax_rows(x.data(), y.data(), m, n);
            for (int64_t i = 0; i < m; ++i) {
                double s = 0;
                for (int64_t j = 0; j < n; ++j) {
                    CHECK(y[i * n + j] >= 0.0f);
                    s += y[i * n + j];
                }
                CHECK(std::abs(s - 1.0) < 1e-6);
            }
        }
    }
}

TEST_CASE("layer norm rows") {
    const float gain1[4] = {1, 1, 1, 1}, bias0[4] = {0, 0, 0, 0};
    SUBCASE("constant row collapses to bias") {
        float x[4] = {5, 5, 5, 5}, y[4];
        const float bias[4] = {0.5f, -0.5f, 1.0f, 0.0f};
        kernels::serial::layer_norm_rows(x, gain1, bias, y, 1, 4, 1e-5f);
        for (int j = 0; j < 4; ++j) CHECK(y[j] == doctest::Approx(bias[j]).epsilon(1e-5));
    }
    SUBCASE("[1,-1] normalizes to itself") {
        float x[2] = {1, -1}, y[2];
        kernels::serial::layer_norm_rows(x, gain1, bias0, y, 1, 2, 1e-5f);
        CHECK(y[0] == doctest::Approx(1.0).epsilon(1e-4));
        CHECK(y[1] == doctest::Approx(-1.0).epsilon(1e-4));
    }
    SUBCASE("zero gain yields the bias") {
        float x[3] = {3, 1, 4}, y[3];
        const float gain[3] = {0, 0, 0}, bias[3] = {7, 8, 9};
        kernels::serial::layer_norm_rows(x, gain, bias, y, 1, 3, 1e-5f);
        CHECK(y[0] == 7.0f);
        CHECK(y[1] == 8.0f);
        CHECK(y[2] == 9.0f);
    }
}

TEST_CASE("gelu tanh approximation") {
    CHECK(kernels::serial::gelu_tanh(0.0f) == 0.0f);
    // large positive ~ identity, large negative ~ 0
    CHECK(kernels::serial::gelu_tanh(10.0f) == doctest::Approx(10.0f).epsilon(1e-4));
    CHECK(std::abs(kernels::serial::gelu_tanh(-10.0f)) < 1e-4);
}

TEST_CASE("parallel kernels match serial bit for bit") {
    Rng rng(17);
    SUBCASE("matmul") {
        const int64_t sizes[3][3] = {{3, 5, 7}, {33, 17, 129}, {64, 64, 64}};
        for (const auto& mkn : sizes) {
            const int64_t m = mkn[0], k = mkn[1], n = mkn[2];
            std::vector<float> a(m * k), b(k * n), c0(m * n), c1(m * n);
            for (auto& v : a) v = static_cast<float>(rng.uniform(-2, 2));
            for (auto& v : b) v = static_cast<float>(rng.uniform(-2, 2));
            kernels::serial::matmul(a.data(), b.data(), c0.data(), m, k, n);
            kernels::matmul(a.data(), b.data(), c1.data(), m, k, n);
            CHECK(std::memcmp(c0.data(), c1.data(), c0.size() * sizeof(float)) == 0);
        }
    }
    SUBCASE("softmax, layer_norm, gelu, conv") {
        const int64_t m = 70, n = 40;
        std::vector<float> x(m * n), g(n), b(n), y0(m * n), y1(m * n);
        for (auto& v : x) v = static_cast<float>(rng.uniform(-30, 30));
        for (auto& v : g) v = static_cast<float>(rng.uniform(0.5, 2));
        for (auto& v : b) v = static_cast<float>(rng.uniform(-1, 1));

        kernels::serial::softmax_rows(x.data(), y0.data(), m, n);
        kernels::softmax_rows(x.data(), y1.data(), m, n);
        CHECK(std::memcmp(y0.data(), y1.data(), y0.size() * sizeof(float)) == 0);

        kernels::serial::layer_norm_rows(x.data(), g.data(), b.data(), y0.data(), m, n, 1e-5f);
        kernels::layer_norm_rows(x.data(), g.data(), b.data(), y1.data(), m, n, 1e-5f);
        CHECK(std::memcmp(y0.data(), y1.data(), y0.size() * sizeof(float)) == 0);

        kernels::serial::gelu(x.data(), y0.data(), m * n);
        kernels::gelu(x.data(), y1.data(), m * n);
        CHECK(std::memcmp(y0.data(), y1.data(), y0.size() * sizeof(float)) == 0);

        const int64_t h = 10, w = 7, c = 40;
        std::vector<float> kern(c * 9);
        for (auto& v : kern) v = static_cast<float>(rng.uniform(-1, 1));
        kernels::serial::depthwise_conv3x3(x.data(), kern.data(), y0.data(), h, w, c);
        kernels::depthwise_conv3x3(x.data(), kern.data(), y1.data(), h, w, c);
        CHECK(std::memcmp(y0.data(), y1.data(), y0.size() * sizeof(float)) == 0);
    }
}

TEST_CASE("rng reproducibility") {
    Rng a(123), b(123), c(124);
    bool all_equal = true, any_diff = false;
    for (int i = 0; i < 100; ++i) {
        const uint64_t va = a.next_u64(), vb = b.next_u64(), vc = c.next_u64();
        all_equal = all_equal && (va == vb);
        any_diff = any_diff || (va != vc);
    }
    CHECK(all_equal);
    CHECK(any_diff);

    // splitmix64_at indexes the stream without iterating.
    CHECK(splitmix64_at(7, 1) == splitmix64(7));
    CHECK(splitmix64_at(7, 3) == splitmix64(7 + 2 * kSplitmixGamma));
}

TEST_CASE("rng uniform and normal stay in sane ranges") {
    Rng rng(5);
    double sum = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const double u = rng.uniform(-1.0, 1.0);
        CHECK(u >= -1.0);
        CHECK(u < 1.0);
        sum += rng.normal();
    }
    CHECK(std::abs(sum / 1000.0) < 0.15);  // mean of 1000 standard normals
    for (int i = 0; i < 200; ++i) {
        const int64_t v = rng.uniform_int(2, 4);
        CHECK(v >= 2);
        CHECK(v <= 4);
    }
}
