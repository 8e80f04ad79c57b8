#include "mmf/model_gradcheck.hpp"

#include <chrono>

#include "mmf/gradcheck.hpp"
#include "mmf/model.hpp"

namespace mmf {

ModelGradCheckResult run_model_gradcheck(uint64_t seed, bool inject_fault,
                                         int64_t max_coords_per_tensor) {
    const auto start = std::chrono::steady_clock::now();

    ModelConfig cfg;
    cfg.num_classes = 4;
    cfg.d_model = 8;
    cfg.heads = 2;
    cfg.encoder.image_size = 8;
    cfg.encoder.stem_patch = 4;
    cfg.encoder.channels = 8;
    cfg.encoder.blocks = 2;

    ModelParams fparams = init_model(cfg, seed);
    auto dparams = cast_model_params<double>(fparams);
    auto named = named_params(dparams);

    // Fixed random inputs; gradients are checked w.r.t. parameters only.
    Rng rng(splitmix64(seed ^ 0x696E707574ULL));
    TensorT<double> mri({1, cfg.encoder.image_size, cfg.encoder.image_size});
    TensorT<double> pet(mri.shape);
    for (auto& v : mri.data) v = rng.normal(0.0, 1.0);
    for (auto& v : pet.data) v = rng.normal(0.0, 1.0);
    TensorT<double> token({1, kFeatureTokenWidth});
    double norm = 0.0;
    for (auto& v : token.data) {
        v = rng.uniform(-1.0, 1.0);
        norm += v * v;
    }
    norm = std::sqrt(norm);
    for (auto& v : token.data) v /= norm;
    const int64_t label = 2;

    std::vector<std::pair<std::string, TensorT<double>>> flat;
    flat.reserve(named.size());
    for (auto& [name, v] : named) flat.emplace_back(name, v->value);

    const auto& pos_table = fparams.pos_table;
    auto loss_fn = [&](const std::vector<ad::ValueT<double>>& leaves) {
        // Rebind the leaves into a params mirror so the normal forward runs.
        ModelParamsT<double> p = cast_model_params<double>(fparams);
        p.pos_table = pos_table;
        size_t idx = 0;
        visit_params<double>(p, [&](const std::string&, ad::ValueT<double>& slot) {
            slot = leaves[idx++];
        });
        auto logits = model_forward(ad::constant(mri), ad::constant(pet), ad::constant(token), p,
                                    cfg);
        return ad::cross_entropy(logits, label);
    };

    std::function<void(const std::string&, TensorT<double>&)> hook;
    if (inject_fault) {
        hook = [](const std::string& name, TensorT<double>& grad) {
            if (name == "head.w1") {
                for (auto& g : grad.data) g = g * 1.5 + 0.05;
            }
        };
    }

    auto report = gradcheck(flat, loss_fn, 1e-4, max_coords_per_tensor, seed, hook);

    ModelGradCheckResult result;
    result.max_rel_err = report.max_rel_err;
    result.worst_param = report.worst_param;
    result.coords_checked = report.coords_checked;
    result.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

}  // namespace mmf
