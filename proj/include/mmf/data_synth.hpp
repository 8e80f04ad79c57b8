#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mmf/embedding.hpp"
#include "mmf/tensor.hpp"

namespace mmf {

// Ordinal severity: NC < EMCI < LMCI < AD.
enum class ClassLabel : int { kNC = 0, kEMCI = 1, kLMCI = 2, kAD = 3 };

inline constexpr std::array<const char*, 4> kClassNames = {"NC", "EMCI", "LMCI", "AD"};

inline const char* class_name(ClassLabel l) { return kClassNames[static_cast<size_t>(l)]; }

struct SyntheticConfig {
    int per_class = 50;
    int64_t image_size = 32;
    uint64_t seed = 0;
    double signal_strength = 0.8;  // in [0,1]; 0 removes all class signal
    double noise_sigma = 0.1;      // image pixel noise

    void validate() const {
        if (per_class < 1) throw config_error("per_class must be >= 1");
        if (image_size < 8) throw config_error("image_size must be >= 8");
        if (signal_strength < 0.0 || signal_strength > 1.0) {
            throw config_error("signal_strength must lie in [0,1]");
        }
        if (noise_sigma < 0.0) throw config_error("noise_sigma must be >= 0");
    }
};

struct ManifestEntry {
    std::string id;
    ClassLabel label = ClassLabel::kNC;
    std::string mri_path;  // relative to the dataset root
    std::string pet_path;
    SubjectRecord record;
};

struct DatasetManifest {
    std::vector<ManifestEntry> entries;

    std::array<int, 4> class_counts() const;
};

// Generates the dataset under out_dir: manifest.jsonl, shotbank.jsonl and one
// MRI/PET tensor pair per subject in sub/. Subject i is seeded by the i-th
// splitmix64 output of config.seed, so generation is byte-deterministic and
// per-subject independent.
DatasetManifest generate(const SyntheticConfig& config, const std::filesystem::path& out_dir);

DatasetManifest load_manifest(const std::filesystem::path& dataset_dir);

void save_shot_bank(const std::filesystem::path& path, const ShotBank& bank);
ShotBank load_shot_bank(const std::filesystem::path& path);

struct SplitFractions {
    double train = 0.7;
    double val = 0.15;
    double test = 0.15;
};

struct DatasetSplits {
    DatasetManifest train, val, test;
};

// Stratified split with largest-remainder rounding per class. Remainder ties
// go to the split whose running allocation is furthest below its exact quota
// (then train < val < test order), so totals track the fractions across
// classes. Deterministic under seed; every class needs >= 3 subjects.
DatasetSplits split(const DatasetManifest& manifest, const SplitFractions& fractions,
                    uint64_t seed);

// Written by cmd_embed next to the manifest: one {"id", "provider", "shots",
// "values"} object per line.
struct TokenFileEntry {
    std::string id;
    std::string provider;
    int shots = 0;
    FeatureToken token;
};

void save_tokens(const std::filesystem::path& path, const std::vector<TokenFileEntry>& entries);
std::vector<TokenFileEntry> load_tokens(const std::filesystem::path& path);

}  // namespace mmf
