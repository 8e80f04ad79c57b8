#include <doctest.h>

#include <cmath>

#include "mmf/autodiff.hpp"
#include "mmf/gradcheck.hpp"
#include "mmf/rng.hpp"

using namespace mmf;
using ad::ValueT;

namespace {

TensorT<double> random_tensor(std::vector<int64_t> shape, Rng& rng, double lo = -1, double hi = 1) {
    TensorT<double> t(std::move(shape));
    for (auto& v : t.data) v = rng.uniform(lo, hi);
    return t;
}

}  // namespace

TEST_CASE("sum backward gives ones") {
    auto x = ad::leaf(Tensor({2, 3}, {1, 2, 3, 4, 5, 6}));
    auto loss = ad::sum(x);
    ad::backward(loss);
    CHECK(loss->value.data[0] == 21.0f);
    for (float g : x->grad.data) CHECK(g == 1.0f);
}

TEST_CASE("x dot x backward gives 2x") {
    auto x = ad::leaf(Tensor({3}, {1.5f, -2.0f, 0.5f}));
    auto loss = ad::sum(ad::mul(x, x));
    ad::backward(loss);
    for (size_t i = 0; i < 3; ++i) {
        CHECK(x->grad.data[i] == doctest::Approx(2.0f * x->value.data[i]));
    }
}

TEST_CASE("shared nodes accumulate additively") {
    auto x = ad::leaf(Tensor({2}, {3.0f, 4.0f}));
    auto y = ad::add(x, x);  // dy/dx = 2
    auto loss = ad::sum(y);
    ad::backward(loss);
    CHECK(x->grad.data[0] == 2.0f);
    CHECK(x->grad.data[1] == 2.0f);
}

TEST_CASE("backward rejects non-scalar loss") {
    auto x = ad::leaf(Tensor({2}, {1.0f, 2.0f}));
    auto y = ad::add(x, x);
    CHECK_THROWS_AS(ad::backward(y), contract_error);
}

TEST_CASE("elementwise basics") {
    auto x = ad::leaf(Tensor({2}, {-1.0f, 2.0f}));
    auto r = ad::relu(x);
    CHECK(r->value.data[0] == 0.0f);
    CHECK(r->value.data[1] == 2.0f);

    auto zero = ad::constant(Tensor({2}, {0.0f, 0.0f}));
    auto same = ad::add(x, zero);
    CHECK(same->value.data[0] == x->value.data[0]);
    CHECK(same->value.data[1] == x->value.data[1]);

    auto g = ad::gelu(ad::constant(Tensor::scalar(0.0f)));
    CHECK(g->value.data[0] == 0.0f);

    auto bad = ad::constant(Tensor({3}, {1, 2, 3}));
    CHECK_THROWS_AS(ad::add(x, bad), dimension_error);

    // scalar broadcast
    auto s = ad::constant(Tensor::scalar(10.0f));
    auto scaled = ad::mul(x, s);
    CHECK(scaled->value.data[0] == -10.0f);
    CHECK(scaled->value.data[1] == 20.0f);
}

TEST_CASE("matmul shape errors name both shapes") {
    auto a = ad::leaf(Tensor({2, 3}));
    auto b = ad::leaf(Tensor({2, 2}));
    try {
        ad::matmul(a, b);
        FAIL("expected dimension_error");
    } catch (const dimension_error& e) {
        const std::string msg = e.what();
        CHECK(msg.find("[2,3]") != std::string::npos);
        CHECK(msg.find("[2,2]") != std::string::npos);
    }
}

TEST_CASE("cross entropy values") {
    SUBCASE("uniform logits give ln 2") {
        auto logits = ad::leaf(Tensor({2}, {0.0f, 0.0f}));
        auto loss = ad::cross_entropy(logits, 0);
        CHECK(loss->value.data[0] == doctest::Approx(std::log(2.0)).epsilon(1e-6));
    }
    SUBCASE("confident correct logit is near zero loss") {
        auto logits = ad::leaf(Tensor({2}, {10.0f, -10.0f}));
        auto loss = ad::cross_entropy(logits, 0);
        CHECK(loss->value.data[0] < 1e-6f);
    }
    SUBCASE("direct formula evaluation for [1,2,3] label 2") {
        auto logits = ad::leaf(Tensor({3}, {1.0f, 2.0f, 3.0f}));
        auto loss = ad::cross_entropy(logits, 2);
        CHECK(loss->value.data[0] == doctest::Approx(0.40760596444438079).epsilon(1e-6));
    }
    SUBCASE("label out of range") {
        auto logits = ad::leaf(Tensor({3}, {1.0f, 2.0f, 3.0f}));
        CHECK_THROWS_AS(ad::cross_entropy(logits, 3), index_error);
        CHECK_THROWS_AS(ad::cross_entropy(logits, -1), index_error);
    }
}

TEST_CASE("gradcheck: linear function is exact") {
    auto f = [](const std::vector<ValueT<double>>& leaves) {
        return ad::sum(ad::scale(leaves[0], 3.0));
    };
    Rng rng(1);
    std::vector<std::pair<std::string, TensorT<double>>> params = {
        {"x", random_tensor({4, 3}, rng)}};
    auto report = gradcheck(params, f);
    CHECK(report.max_rel_err < 1e-8);
}

TEST_CASE("gradcheck: softmax + cross entropy composite") {
    auto g = [](const std::vector<ValueT<double>>& leaves) {
        auto probs = ad::softmax_rows(leaves[0]);            // [2,4]
        auto logits = ad::matmul(leaves[1], probs);          // [1,2]x[2,4] -> [1,4]
        return ad::cross_entropy(logits, 1);
    };
    Rng rng(2);
    std::vector<std::pair<std::string, TensorT<double>>> params = {
        {"x", random_tensor({2, 4}, rng, -2, 2)}, {"w", random_tensor({1, 2}, rng)}};
    auto report = gradcheck(params, g);
    CHECK(report.max_rel_err < 1e-4);
}

TEST_CASE("gradcheck: every op on random small tensors, 10 seeds") {
    for (uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(seed);
        std::vector<std::pair<std::string, TensorT<double>>> params = {
            {"a", random_tensor({3, 4}, rng)},    // matmul lhs
            {"b", random_tensor({4, 5}, rng)},    // matmul rhs
            {"c", random_tensor({3, 5}, rng)},    // elementwise partner
            {"gain", random_tensor({5}, rng, 0.5, 1.5)},
            {"bias", random_tensor({5}, rng)},
            {"k", random_tensor({5, 9}, rng)},    // depthwise kernel (grid 1x3? no: 3 rows)
        };
        auto f = [](const std::vector<ValueT<double>>& leaves) {
            auto prod = ad::matmul(leaves[0], leaves[1]);               // [3,5]
            auto mixed = ad::mul(ad::add(prod, leaves[2]), leaves[2]);  // elementwise
            auto normed = ad::layer_norm(mixed, leaves[3], leaves[4]);  // layer norm
            auto conv = ad::depthwise_conv3x3(normed, leaves[5], 3, 1); // 3x1 grid, 5 channels
            auto act = ad::gelu(ad::add(conv, ad::relu(ad::scale(normed, 0.5))));
            auto soft = ad::softmax_rows(act);
            auto pooled = ad::mean_rows(ad::concat_rows(soft, ad::transpose(ad::transpose(soft))));
            auto wide = ad::concat_cols(soft, soft);                    // [3,10]
            auto joined = ad::add(ad::sum(wide), ad::sum(pooled));
            return ad::mul(joined, joined);
        };
        auto report = gradcheck(params, f, 1e-4);
        INFO("seed ", seed, " worst ", report.worst_param, " err ", report.max_rel_err);
        CHECK(report.max_rel_err < 1e-3);
    }
}

TEST_CASE("patchify layout and backward") {
    // 4x4 image, patch 2: patch (0,0) holds pixels (0,0),(0,1),(1,0),(1,1)
    Tensor img({1, 4, 4});
    for (int i = 0; i < 16; ++i) img.data[static_cast<size_t>(i)] = static_cast<float>(i);
    auto node = ad::leaf(img);
    auto patches = ad::patchify(node, 2);
    CHECK(patches->value.shape == std::vector<int64_t>{4, 4});
    CHECK(patches->value.at(0, 0) == 0.0f);
    CHECK(patches->value.at(0, 1) == 1.0f);
    CHECK(patches->value.at(0, 2) == 4.0f);
    CHECK(patches->value.at(0, 3) == 5.0f);
    CHECK(patches->value.at(3, 0) == 10.0f);

    auto loss = ad::sum(patches);
    ad::backward(loss);
    for (float g : node->grad.data) CHECK(g == 1.0f);
}

TEST_CASE("determinism: identical seed and op sequence produce identical bits") {
    auto run = [](uint64_t seed) {
        Rng rng(seed);
        auto a = ad::leaf(Tensor({4, 4}));
        for (auto& v : a->value.data) v = static_cast<float>(rng.uniform(-1, 1));
        auto out = ad::softmax_rows(ad::matmul(a, a));
        return out->value.data;
    };
    CHECK(run(11) == run(11));
    CHECK(run(11) != run(12));
}
