#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "mmf/autodiff.hpp"
#include "mmf/rng.hpp"

namespace mmf {

struct GradCheckReport {
    double max_rel_err = 0.0;
    std::string worst_param;
    int64_t worst_coord = -1;
    int64_t coords_checked = 0;
};

// Central-difference gradient check, evaluated entirely in 64-bit precision.
// `loss_fn` must rebuild the scalar loss graph from the given leaves on every
// call; the checker perturbs leaf values in place between evaluations. With
// max_coords_per_tensor == 0 every coordinate is checked, otherwise a
// deterministic sample of that many coordinates per tensor.
inline GradCheckReport gradcheck(const std::vector<std::pair<std::string, TensorT<double>>>& params,
                                 const std::function<ad::ValueT<double>(
                                     const std::vector<ad::ValueT<double>>&)>& loss_fn,
                                 double eps = 1e-4, int64_t max_coords_per_tensor = 0,
                                 uint64_t seed = 0,
                                 const std::function<void(const std::string&, TensorT<double>&)>&
                                     analytic_hook = {}) {
    std::vector<ad::ValueT<double>> leaves;
    leaves.reserve(params.size());
    for (const auto& [name, t] : params) leaves.push_back(ad::leaf(t));

    auto loss = loss_fn(leaves);
    ad::backward(loss);

    std::vector<TensorT<double>> analytic;
    analytic.reserve(leaves.size());
    for (size_t i = 0; i < leaves.size(); ++i) {
        leaves[i]->ensure_grad();
        analytic.push_back(leaves[i]->grad);
        // Test hook: lets fault-injection fixtures corrupt one analytic
        // gradient and prove the checker flags it.
        if (analytic_hook) analytic_hook(params[i].first, analytic.back());
    }

    Rng rng(splitmix64(seed));
    GradCheckReport report;
    for (size_t pi = 0; pi < leaves.size(); ++pi) {
        auto& t = leaves[pi]->value;
        const int64_t count = t.numel();
        std::vector<int64_t> coords;
        if (max_coords_per_tensor <= 0 || count <= max_coords_per_tensor) {
            coords.resize(static_cast<size_t>(count));
            for (int64_t i = 0; i < count; ++i) coords[static_cast<size_t>(i)] = i;
        } else {
            // Partial Fisher-Yates: first max_coords_per_tensor entries of a
            // seeded shuffle, giving distinct coordinates.
            std::vector<int64_t> all(static_cast<size_t>(count));
            for (int64_t i = 0; i < count; ++i) all[static_cast<size_t>(i)] = i;
            for (int64_t i = 0; i < max_coords_per_tensor; ++i) {
                int64_t j = rng.uniform_int(i, count - 1);
                std::swap(all[static_cast<size_t>(i)], all[static_cast<size_t>(j)]);
            }
            coords.assign(all.begin(), all.begin() + max_coords_per_tensor);
        }

        for (int64_t ci : coords) {
            const double saved = t.data[static_cast<size_t>(ci)];
            t.data[static_cast<size_t>(ci)] = saved + eps;
            const double lp = loss_fn(leaves)->value.data[0];
            t.data[static_cast<size_t>(ci)] = saved - eps;
            const double lm = loss_fn(leaves)->value.data[0];
            t.data[static_cast<size_t>(ci)] = saved;

            const double numeric = (lp - lm) / (2.0 * eps);
            const double a = analytic[pi].data[static_cast<size_t>(ci)];
            const double rel =
                std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
            ++report.coords_checked;
            if (rel > report.max_rel_err) {
                report.max_rel_err = rel;
                report.worst_param = params[pi].first;
                report.worst_coord = ci;
            }
        }
    }
    return report;
}

}  // namespace mmf
