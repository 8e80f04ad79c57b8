#include "mmf/data_synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "mmf/rng.hpp"
#include "mmf/tensor_io.hpp"

namespace mmf {

using nlohmann::json;

std::array<int, 4> DatasetManifest::class_counts() const {
    std::array<int, 4> counts{};
    for (const auto& e : entries) ++counts[static_cast<size_t>(e.label)];
    return counts;
}

namespace {

// Class-conditional means. These are inventions loosely shaped like the
// clinical literature, used only to plant a learnable signal; they are not
// clinical truth. signal_strength interpolates each class mean toward the
// grand mean, so signal 0 erases the class information entirely.
constexpr std::array<double, 4> kMmseMean = {29.0, 27.0, 24.0, 20.0};
constexpr std::array<double, 4> kAdasMean = {6.0, 12.0, 18.0, 26.0};
constexpr std::array<double, 4> kAbetaMean = {1100.0, 950.0, 800.0, 600.0};
// P(apoe4_count >= 1) and P(apoe4_count == 2 | >= 1) by severity.
constexpr std::array<double, 4> kApoeAny = {0.28, 0.42, 0.55, 0.70};
constexpr std::array<double, 4> kApoeTwo = {0.15, 0.22, 0.28, 0.36};

double blend(const std::array<double, 4>& means, int severity, double signal) {
    const double grand = (means[0] + means[1] + means[2] + means[3]) / 4.0;
    return grand + signal * (means[static_cast<size_t>(severity)] - grand);
}

// MRI: centered Gaussian blob whose radius shrinks with severity.
// PET: diagonal intensity gradient whose overall level drops with severity.
Tensor make_mri(int severity, const SyntheticConfig& cfg, Rng& rng) {
    const int64_t s = cfg.image_size;
    const double cx = static_cast<double>(s) / 2.0 + rng.uniform(-s / 16.0, s / 16.0);
    const double cy = static_cast<double>(s) / 2.0 + rng.uniform(-s / 16.0, s / 16.0);
    const double sigma = s * (0.30 - 0.06 * cfg.signal_strength * severity);
    Tensor img({1, s, s});
    for (int64_t y = 0; y < s; ++y) {
        for (int64_t x = 0; x < s; ++x) {
            const double r2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
            const double v = std::exp(-r2 / (2.0 * sigma * sigma)) +
                             rng.normal(0.0, cfg.noise_sigma);
            img.data[static_cast<size_t>(y * s + x)] = static_cast<float>(v);
        }
    }
    return img;
}

Tensor make_pet(int severity, const SyntheticConfig& cfg, Rng& rng) {
    const int64_t s = cfg.image_size;
    const double level = 1.0 - 0.18 * cfg.signal_strength * severity;
    Tensor img({1, s, s});
    for (int64_t y = 0; y < s; ++y) {
        for (int64_t x = 0; x < s; ++x) {
            const double grad =
                0.35 + 0.5 * static_cast<double>(x + y) / static_cast<double>(2 * (s - 1));
            const double v = level * grad + rng.normal(0.0, cfg.noise_sigma);
            img.data[static_cast<size_t>(y * s + x)] = static_cast<float>(v);
        }
    }
    return img;
}

SubjectRecord make_record(const std::string& id, int severity, const SyntheticConfig& cfg,
                          Rng& rng) {
    const double signal = cfg.signal_strength;
    SubjectRecord r;
    r.id = id;
    r.age = std::clamp(rng.normal(73.0, 6.0), 50.0, 95.0);
    r.sex = rng.bernoulli(0.5) ? 'F' : 'M';
    r.education_years = static_cast<int>(std::clamp(std::round(rng.normal(15.0, 3.0)), 0.0, 25.0));
    r.family_history = rng.bernoulli(0.3);
    r.mmse = static_cast<int>(
        std::clamp(std::round(rng.normal(blend(kMmseMean, severity, signal), 1.5)), 0.0, 30.0));
    r.adas_cog = std::clamp(rng.normal(blend(kAdasMean, severity, signal), 3.0), 0.0, 70.0);
    r.csf_abeta = std::max(50.0, rng.normal(blend(kAbetaMean, severity, signal), 100.0));
    const double p_any = blend(kApoeAny, severity, signal);
    const double p_two = blend(kApoeTwo, severity, signal);
    if (rng.bernoulli(p_any)) {
        r.apoe4_count = rng.bernoulli(p_two) ? 2 : 1;
    } else {
        r.apoe4_count = 0;
    }
    return r;
}

json record_to_json(const SubjectRecord& r) {
    return json{{"id", r.id},
                {"age", r.age},
                {"sex", std::string(1, r.sex)},
                {"education_years", r.education_years},
                {"apoe4_count", r.apoe4_count},
                {"mmse", r.mmse},
                {"adas_cog", r.adas_cog},
                {"csf_abeta", r.csf_abeta},
                {"family_history", r.family_history}};
}

SubjectRecord record_from_json(const json& j) {
    SubjectRecord r;
    r.id = j.at("id").get<std::string>();
    r.age = j.at("age").get<double>();
    r.sex = j.at("sex").get<std::string>().at(0);
    r.education_years = j.at("education_years").get<int>();
    r.apoe4_count = j.at("apoe4_count").get<int>();
    r.mmse = j.at("mmse").get<int>();
    r.adas_cog = j.at("adas_cog").get<double>();
    r.csf_abeta = j.at("csf_abeta").get<double>();
    r.family_history = j.at("family_history").get<bool>();
    return r;
}

}  // namespace

DatasetManifest generate(const SyntheticConfig& config, const std::filesystem::path& out_dir) {
    config.validate();
    std::error_code ec;
    std::filesystem::create_directories(out_dir / "sub", ec);
    if (ec) throw io_error("cannot create dataset directory " + (out_dir / "sub").string());

    DatasetManifest manifest;
    const int total = 4 * config.per_class;
    for (int i = 0; i < total; ++i) {
        const int severity = i / config.per_class;
        Rng rng(splitmix64_at(config.seed, static_cast<uint64_t>(i) + 1));
        char id[16];
        std::snprintf(id, sizeof(id), "s%04d", i);

        ManifestEntry e;
        e.id = id;
        e.label = static_cast<ClassLabel>(severity);
        e.mri_path = std::string("sub/") + id + "_mri.mmt";
        e.pet_path = std::string("sub/") + id + "_pet.mmt";
        e.record = make_record(id, severity, config, rng);

        write_tensor(out_dir / e.mri_path, make_mri(severity, config, rng));
        write_tensor(out_dir / e.pet_path, make_pet(severity, config, rng));
        manifest.entries.push_back(std::move(e));
    }

    std::ofstream out(out_dir / "manifest.jsonl", std::ios::trunc);
    if (!out.is_open()) throw io_error("cannot write " + (out_dir / "manifest.jsonl").string());
    for (const auto& e : manifest.entries) {
        json line = {{"id", e.id},
                     {"label", static_cast<int>(e.label)},
                     {"label_name", class_name(e.label)},
                     {"mri", e.mri_path},
                     {"pet", e.pet_path},
                     {"record", record_to_json(e.record)}};
        out << line.dump() << "\n";
    }
    if (!out.good()) throw io_error("write to manifest.jsonl failed");

    save_shot_bank(out_dir / "shotbank.jsonl", builtin_shot_bank());
    return manifest;
}

DatasetManifest load_manifest(const std::filesystem::path& dataset_dir) {
    const auto path = dataset_dir / "manifest.jsonl";
    std::ifstream in(path);
    if (!in.is_open()) throw io_error("cannot open " + path.string());
    DatasetManifest manifest;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw format_error("manifest line " + std::to_string(lineno) + ": " + e.what());
        }
        ManifestEntry e;
        e.id = j.at("id").get<std::string>();
        const int label = j.at("label").get<int>();
        if (label < 0 || label > 3) {
            throw format_error("manifest line " + std::to_string(lineno) + ": label " +
                               std::to_string(label) + " out of range");
        }
        e.label = static_cast<ClassLabel>(label);
        e.mri_path = j.at("mri").get<std::string>();
        e.pet_path = j.at("pet").get<std::string>();
        e.record = record_from_json(j.at("record"));
        if (!std::filesystem::exists(dataset_dir / e.mri_path) ||
            !std::filesystem::exists(dataset_dir / e.pet_path)) {
            throw io_error("manifest entry " + e.id + " references missing tensor files");
        }
        manifest.entries.push_back(std::move(e));
    }
    for (size_t i = 0; i < manifest.entries.size(); ++i) {
        for (size_t k = i + 1; k < manifest.entries.size(); ++k) {
            if (manifest.entries[i].id == manifest.entries[k].id) {
                throw format_error("duplicate subject id " + manifest.entries[i].id);
            }
        }
    }
    return manifest;
}

void save_shot_bank(const std::filesystem::path& path, const ShotBank& bank) {
    std::ofstream out(path, std::ios::trunc);
    if (!out.is_open()) throw io_error("cannot write " + path.string());
    for (const auto& ex : bank) {
        json line = {{"record", record_to_json(ex.record)},
                     {"token", std::vector<double>(ex.token.values.begin(), ex.token.values.end())}};
        out << line.dump() << "\n";
    }
}

ShotBank load_shot_bank(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in.is_open()) throw io_error("cannot open shot bank " + path.string());
    ShotBank bank;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        ShotExample ex;
        ex.record = record_from_json(j.at("record"));
        auto vals = j.at("token").get<std::vector<double>>();
        if (vals.size() != 64) {
            throw format_error("shot bank token holds " + std::to_string(vals.size()) +
                               " values, expected 64");
        }
        std::copy(vals.begin(), vals.end(), ex.token.values.begin());
        bank.push_back(std::move(ex));
    }
    return bank;
}

DatasetSplits split(const DatasetManifest& manifest, const SplitFractions& fractions,
                    uint64_t seed) {
    const double sum = fractions.train + fractions.val + fractions.test;
    if (std::abs(sum - 1.0) > 1e-9) {
        throw config_error("split fractions sum to " + std::to_string(sum) + ", expected 1");
    }

    std::array<std::vector<const ManifestEntry*>, 4> by_class;
    for (const auto& e : manifest.entries) by_class[static_cast<size_t>(e.label)].push_back(&e);

    DatasetSplits out;
    const std::array<double, 3> frac = {fractions.train, fractions.val, fractions.test};
    std::array<double, 3> deficit{};  // exact quota minus allocated, running across classes

    for (size_t c = 0; c < 4; ++c) {
        auto& members = by_class[c];
        if (members.empty()) continue;
        if (members.size() < 3) {
            throw stratification_error("class " + std::string(kClassNames[c]) + " has only " +
                                       std::to_string(members.size()) +
                                       " subjects; need >= 3 to stratify");
        }
        // Deterministic shuffle within the class.
        Rng rng(splitmix64(seed + c));
        for (size_t i = members.size(); i > 1; --i) {
            const auto j = static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(i) - 1));
            std::swap(members[i - 1], members[j]);
        }

        const auto n = static_cast<double>(members.size());
        std::array<int, 3> take{};
        std::array<double, 3> remainder{};
        int assigned = 0;
        for (size_t s = 0; s < 3; ++s) {
            const double exact = n * frac[s];
            take[s] = static_cast<int>(std::floor(exact));
            remainder[s] = exact - take[s];
            assigned += take[s];
        }
        int leftover = static_cast<int>(members.size()) - assigned;
        while (leftover > 0) {
            // Largest remainder wins; ties go to the most under-allocated
            // split so far, then to the earlier split in (train, val, test).
            size_t best = 3;
            for (size_t s = 0; s < 3; ++s) {
                if (remainder[s] < 0.0) continue;
                if (best == 3 || remainder[s] > remainder[best] + 1e-12 ||
                    (std::abs(remainder[s] - remainder[best]) <= 1e-12 &&
                     deficit[s] > deficit[best] + 1e-12)) {
                    best = s;
                }
            }
            ++take[best];
            remainder[best] = -1.0;
            --leftover;
        }
        for (size_t s = 0; s < 3; ++s) {
            const double exact = n * frac[s];
            deficit[s] += exact - take[s];
        }

        size_t idx = 0;
        auto emit = [&](DatasetManifest& dst, int count) {
            for (int i = 0; i < count; ++i) dst.entries.push_back(*members[idx++]);
        };
        emit(out.train, take[0]);
        emit(out.val, take[1]);
        emit(out.test, take[2]);
    }
    return out;
}

void save_tokens(const std::filesystem::path& path, const std::vector<TokenFileEntry>& entries) {
    std::ofstream out(path, std::ios::trunc);
    if (!out.is_open()) throw io_error("cannot write " + path.string());
    for (const auto& e : entries) {
        json line = {{"id", e.id},
                     {"provider", e.provider},
                     {"shots", e.shots},
                     {"values", std::vector<double>(e.token.values.begin(), e.token.values.end())}};
        out << line.dump() << "\n";
    }
    if (!out.good()) throw io_error("write to " + path.string() + " failed");
}

std::vector<TokenFileEntry> load_tokens(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in.is_open()) throw io_error("cannot open token file " + path.string());
    std::vector<TokenFileEntry> entries;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw format_error("token file line " + std::to_string(lineno) + ": " + e.what());
        }
        TokenFileEntry e;
        e.id = j.at("id").get<std::string>();
        e.provider = j.at("provider").get<std::string>();
        e.shots = j.at("shots").get<int>();
        auto vals = j.at("values").get<std::vector<double>>();
        if (vals.size() != 64) {
            throw format_error("token file line " + std::to_string(lineno) + " holds " +
                               std::to_string(vals.size()) + " values, expected 64");
        }
        std::copy(vals.begin(), vals.end(), e.token.values.begin());
        entries.push_back(std::move(e));
    }
    return entries;
}

}  // namespace mmf
