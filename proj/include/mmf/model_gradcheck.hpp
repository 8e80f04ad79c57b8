#pragma once

#include <cstdint>
#include <string>

namespace mmf {

struct ModelGradCheckResult {
    double max_rel_err = 0.0;
    std::string worst_param;
    int64_t coords_checked = 0;
    double seconds = 0.0;
};

// Central-difference check of the full model at tiny dimensions (image 8,
// d_model 8, heads 2), run in 64-bit precision with a deterministic sample of
// coordinates per parameter tensor. inject_fault corrupts one analytic
// gradient so the failure path can be exercised.
ModelGradCheckResult run_model_gradcheck(uint64_t seed, bool inject_fault = false,
                                         int64_t max_coords_per_tensor = 8);

}  // namespace mmf
