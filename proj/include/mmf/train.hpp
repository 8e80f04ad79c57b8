#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mmf/data_synth.hpp"
#include "mmf/metrics.hpp"
#include "mmf/model.hpp"

namespace mmf {

// Task definitions mirroring the evaluation scheme: four binary pairings, a
// 3-way task merging EMCI and LMCI into MCI, and the full 4-way task. For
// binary tasks class index 1 is the positive class, always the more severe
// label of the pair.
struct Task {
    std::string name;
    int num_classes = 2;

    // Task class index for a label, or nullopt when the label is excluded.
    std::optional<int> map(ClassLabel label) const;

    static Task by_name(const std::string& name);
    static const std::vector<std::string>& names();
};

// One loaded subject: both image tensors plus the embedded non-image token.
struct Sample {
    std::string id;
    ClassLabel label = ClassLabel::kNC;
    Tensor mri, pet;
    Tensor token;  // [1, 64]
};

// Loads tensors for every manifest entry and attaches tokens by subject id;
// throws naming the first subject without a token.
std::vector<Sample> load_samples(const std::filesystem::path& dataset_dir,
                                 const DatasetManifest& manifest,
                                 const std::vector<TokenFileEntry>& tokens);

struct Hyperparams {
    int epochs = 50;
    double lr = 0.05;
    int batch = 8;
    uint64_t seed = 0;
};

struct EpochLog {
    int epoch = 0;
    double loss = 0.0;
    double train_acc = 0.0;
};

// Plain SGD on mean cross-entropy, deterministic under seed (epoch shuffles
// are drawn from splitmix64(seed, epoch)). The callback runs after every
// epoch; returning false stops early. Returns the per-epoch log.
std::vector<EpochLog> train(ModelParams& params, const ModelConfig& config,
                            const std::vector<Sample>& samples, const Task& task,
                            const Hyperparams& hyper,
                            const std::function<bool(const EpochLog&)>& on_epoch = {});

// Confusion-based metrics over a split; AUC only for binary tasks, from the
// positive-class softmax score.
Metrics evaluate(const ModelParams& params, const ModelConfig& config,
                 const std::vector<Sample>& samples, const Task& task);

}  // namespace mmf
