#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "mmf/errors.hpp"

namespace mmf {

// Dense rank-N row-major tensor. Storage precision is float in the library;
// the double instantiation exists for the gradient checker, which evaluates
// the whole graph at 64 bits.
template <typename T>
struct TensorT {
    std::vector<int64_t> shape;
    std::vector<T> data;

    TensorT() = default;

    explicit TensorT(std::vector<int64_t> s) : shape(std::move(s)) {
        data.assign(static_cast<size_t>(checked_numel(shape)), T(0));
    }

    TensorT(std::vector<int64_t> s, std::vector<T> d) : shape(std::move(s)), data(std::move(d)) {
        if (checked_numel(shape) != static_cast<int64_t>(data.size())) {
            throw dimension_error("tensor data length " + std::to_string(data.size()) +
                                  " does not match shape " + shape_string(shape));
        }
    }

    static TensorT zeros(std::vector<int64_t> s) { return TensorT(std::move(s)); }

    static TensorT full(std::vector<int64_t> s, T v) {
        TensorT t(std::move(s));
        std::fill(t.data.begin(), t.data.end(), v);
        return t;
    }

    static TensorT scalar(T v) { return TensorT({1}, {v}); }

    static TensorT identity(int64_t n) {
        TensorT t({n, n});
        for (int64_t i = 0; i < n; ++i) t.data[static_cast<size_t>(i * n + i)] = T(1);
        return t;
    }

    int64_t numel() const { return static_cast<int64_t>(data.size()); }
    int64_t rank() const { return static_cast<int64_t>(shape.size()); }

    // Rank-2 helpers; rank-1 tensors are treated as a single row.
    int64_t rows() const {
        if (rank() == 1) return 1;
        require_rank(2);
        return shape[0];
    }
    int64_t cols() const {
        if (rank() == 1) return shape[0];
        require_rank(2);
        return shape[1];
    }

    T& at(int64_t r, int64_t c) { return data[static_cast<size_t>(r * cols() + c)]; }
    T at(int64_t r, int64_t c) const { return data[static_cast<size_t>(r * cols() + c)]; }

    bool same_shape(const TensorT& o) const { return shape == o.shape; }

    bool all_finite() const {
        for (T v : data) {
            if (!std::isfinite(static_cast<double>(v))) return false;
        }
        return true;
    }

    void require_rank(int64_t r) const {
        if (rank() != r) {
            throw dimension_error("expected rank " + std::to_string(r) + " tensor, got shape " +
                                  shape_string(shape));
        }
    }

    static std::string shape_string(const std::vector<int64_t>& s) {
        std::ostringstream os;
        os << "[";
        for (size_t i = 0; i < s.size(); ++i) {
            if (i) os << ",";
            os << s[i];
        }
        os << "]";
        return os.str();
    }

    std::string shape_string() const { return shape_string(shape); }

  private:
    static int64_t checked_numel(const std::vector<int64_t>& s) {
        int64_t n = 1;
        for (int64_t d : s) {
            if (d <= 0) throw dimension_error("non-positive dimension in shape " + shape_string(s));
            n *= d;
        }
        return n;
    }
};

using Tensor = TensorT<float>;

template <typename U, typename T>
TensorT<U> tensor_cast(const TensorT<T>& t) {
    TensorT<U> out;
    out.shape = t.shape;
    out.data.resize(t.data.size());
    for (size_t i = 0; i < t.data.size(); ++i) out.data[i] = static_cast<U>(t.data[i]);
    return out;
}

}  // namespace mmf
