#include "mmf/embedding.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include "mmf/rng.hpp"
#include "mmf/sha256.hpp"

namespace mmf {

namespace {

std::string fixed3(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

// Shortest representation that parses back to the identical double.
std::string exact_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void check_range(const std::string& field, double v, double lo, double hi) {
    if (!(v >= lo && v <= hi)) {
        throw validation_error("record field " + field + "=" + exact_double(v) +
                               " outside range [" + exact_double(lo) + "," + exact_double(hi) +
                               "]");
    }
}

}  // namespace

void SubjectRecord::validate() const {
    check_range("age", age, 50.0, 95.0);
    if (sex != 'M' && sex != 'F') throw validation_error("record field sex must be M or F");
    check_range("education_years", education_years, 0, 25);
    check_range("apoe4_count", apoe4_count, 0, 2);
    check_range("mmse", mmse, 0, 30);
    check_range("adas_cog", adas_cog, 0.0, 70.0);
    if (!(csf_abeta > 0.0)) throw validation_error("record field csf_abeta must be positive");
}

double FeatureToken::l2_norm() const {
    double s = 0.0;
    for (double v : values) s += v * v;
    return std::sqrt(s);
}

void FeatureToken::validate() const {
    for (double v : values) {
        if (!std::isfinite(v)) throw validation_error("feature token holds a non-finite value");
    }
    const double n = l2_norm();
    if (!(n > 0.0 && n <= 1000.0)) {
        throw validation_error("feature token L2 norm " + std::to_string(n) +
                               " outside (0, 1000]");
    }
}

void PromptSpec::validate() const {
    if (shots != 0 && shots != 1 && shots != 5) {
        throw config_error("shots must be 0, 1 or 5, got " + std::to_string(shots));
    }
    for (const auto& g : groups) {
        if (g != "demographics" && g != "genetics" && g != "cognition" && g != "csf") {
            throw config_error("unknown prompt group '" + g + "'");
        }
    }
}

// ---------------------------------------------------------------------------
// Prompt construction

namespace {

std::string render_group(const SubjectRecord& r, const std::string& group) {
    std::ostringstream os;
    if (group == "demographics") {
        os << "  demographics: age=" << fixed3(r.age) << " years; sex=" << r.sex
           << "; education=" << r.education_years
           << " years; family_history=" << (r.family_history ? "yes" : "no");
    } else if (group == "genetics") {
        os << "  genetics: apoe4_count=" << r.apoe4_count;
    } else if (group == "cognition") {
        os << "  cognition: mmse=" << r.mmse << "; adas_cog=" << fixed3(r.adas_cog);
    } else {  // csf
        os << "  csf: abeta=" << fixed3(r.csf_abeta) << " pg/mL";
    }
    return os.str();
}

std::string render_record(const SubjectRecord& r, const std::vector<std::string>& groups) {
    std::ostringstream os;
    os << "Subject:\n";
    for (const auto& g : groups) os << render_group(r, g) << "\n";
    return os.str();
}

std::string bracketed(const std::vector<double>& values, bool exact) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < values.size(); ++i) {
        if (i) os << ", ";
        os << (exact ? exact_double(values[i]) : fixed3(values[i]));
    }
    os << "]";
    return os.str();
}

}  // namespace

std::string format_token(const FeatureToken& token) {
    return bracketed(std::vector<double>(token.values.begin(), token.values.end()), true);
}

std::string build_prompt(const SubjectRecord& record,
                         const std::optional<std::vector<double>>& image_summary,
                         const PromptSpec& spec, const ShotBank& shot_bank) {
    spec.validate();
    if (static_cast<int>(shot_bank.size()) < spec.shots) {
        throw config_error("shot bank holds " + std::to_string(shot_bank.size()) +
                           " examples but " + std::to_string(spec.shots) + " shots requested");
    }
    std::ostringstream os;
    os << "You convert a clinical subject description into a feature embedding.\n"
          "Respond with exactly 64 comma-separated numbers enclosed in square\n"
          "brackets, for example [0.1, -0.2, ...], and nothing else.\n\n";
    for (int i = 0; i < spec.shots; ++i) {
        const auto& ex = shot_bank[static_cast<size_t>(i)];
        os << "Example " << (i + 1) << ":\n"
           << render_record(ex.record, spec.groups) << "Features: " << format_token(ex.token)
           << "\n\n";
    }
    os << render_record(record, spec.groups);
    if (spec.include_image_summary && image_summary.has_value()) {
        os << "Image summary: " << bracketed(*image_summary, false) << "\n";
    }
    os << "Features:";
    return os.str();
}

// ---------------------------------------------------------------------------
// Parsing

FeatureToken parse_token(const std::string& text) {
    const size_t open = text.find('[');
    if (open == std::string::npos) {
        throw format_error("response holds no bracketed list: \"" +
                           text.substr(0, std::min<size_t>(text.size(), 60)) + "\"");
    }
    const size_t close = text.find(']', open + 1);
    if (close == std::string::npos) {
        throw format_error("response bracket never closes: \"" +
                           text.substr(open, std::min<size_t>(text.size() - open, 60)) + "\"");
    }
    const std::string body = text.substr(open + 1, close - open - 1);

    std::vector<double> parsed;
    size_t start = 0;
    while (start <= body.size()) {
        size_t comma = body.find(',', start);
        if (comma == std::string::npos) comma = body.size();
        std::string piece = body.substr(start, comma - start);
        const auto first = piece.find_first_not_of(" \t\r\n");
        if (first == std::string::npos) {
            throw parse_error("empty entry at position " + std::to_string(parsed.size()) +
                              " of bracketed list");
        }
        const auto last = piece.find_last_not_of(" \t\r\n");
        piece = piece.substr(first, last - first + 1);
        size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(piece, &used);
        } catch (const std::exception&) {
            throw parse_error("non-numeric entry \"" + piece + "\" in bracketed list");
        }
        if (used != piece.size() || !std::isfinite(v)) {
            throw parse_error("non-numeric entry \"" + piece + "\" in bracketed list");
        }
        parsed.push_back(v);
        start = comma + 1;
        if (comma == body.size()) break;
    }

    if (parsed.size() != 64) {
        throw dimension_error("bracketed list holds " + std::to_string(parsed.size()) +
                              " values, expected 64");
    }
    FeatureToken token;
    std::copy(parsed.begin(), parsed.end(), token.values.begin());
    return token;
}

// ---------------------------------------------------------------------------
// Mock provider

std::string MockProvider::complete(const std::string& prompt) {
    Rng rng(splitmix64(fnv1a64(prompt)));
    FeatureToken token;
    for (auto& v : token.values) v = rng.uniform(-1.0, 1.0);
    const double norm = token.l2_norm();
    for (auto& v : token.values) v /= norm;
    return format_token(token);
}

// ---------------------------------------------------------------------------
// Cache

TokenCache::TokenCache(std::filesystem::path path) : path_(std::move(path)) {
    std::ifstream in(path_);
    if (!in.is_open()) return;  // fresh cache
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream is(line);
        std::string key;
        is >> key;
        FeatureToken token;
        for (auto& v : token.values) {
            if (!(is >> v)) {
                throw storage_error("cache file " + path_.string() + " line " +
                                    std::to_string(lineno) + " is truncated");
            }
        }
        entries_[key] = token;
    }
}

std::string TokenCache::cache_key(const std::string& prompt, const std::string& provider_name) {
    return sha256_hex(prompt + "\n" + provider_name);
}

std::optional<FeatureToken> TokenCache::lookup(const std::string& key) {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void TokenCache::store(const std::string& key, const FeatureToken& token) {
    std::lock_guard<std::mutex> lock(mu_);
    entries_[key] = token;
    std::ofstream out(path_, std::ios::app);
    if (!out.is_open()) {
        throw storage_error("cannot append to cache file " + path_.string());
    }
    out << key;
    char buf[64];
    for (double v : token.values) {
        std::snprintf(buf, sizeof(buf), " %.17g", v);
        out << buf;
    }
    out << "\n";
    out.flush();
    if (!out.good()) {
        throw storage_error("write to cache file " + path_.string() + " failed");
    }
}

size_t TokenCache::size() const {
    std::lock_guard<std::mutex> lock(mu_);
    return entries_.size();
}

// ---------------------------------------------------------------------------
// Embedder

Embedder::Embedder(EmbeddingProvider& provider, TokenCache& cache, EmbedOptions options)
    : provider_(provider),
      cache_(cache),
      options_(options),
      in_flight_(std::min(options.max_in_flight, 64)) {
    if (options.max_in_flight < 1 || options.max_in_flight > 64) {
        throw config_error("max_in_flight must be in [1,64]");
    }
}

FeatureToken Embedder::embed(const SubjectRecord& record,
                             const std::optional<std::vector<double>>& image_summary,
                             const PromptSpec& spec, const ShotBank& shot_bank) {
    const std::string prompt = build_prompt(record, image_summary, spec, shot_bank);
    const std::string key = TokenCache::cache_key(prompt, provider_.name());

    if (auto hit = cache_.lookup(key)) {
        std::lock_guard<std::mutex> lock(stats_mu_);
        ++stats_.cache_hits;
        return *hit;
    }

    std::string last_cause = "no attempt made";
    for (int attempt = 0; attempt < options_.max_attempts; ++attempt) {
        if (attempt > 0 && options_.backoff_base_seconds > 0.0) {
            const double delay = options_.backoff_base_seconds * std::pow(2.0, attempt - 1);
            std::this_thread::sleep_for(std::chrono::duration<double>(delay));
        }
        try {
            std::string response;
            {
                in_flight_.acquire();
                {
                    std::lock_guard<std::mutex> lock(stats_mu_);
                    ++stats_.provider_calls;
                }
                try {
                    response = provider_.complete(prompt);
                } catch (...) {
                    in_flight_.release();
                    throw;
                }
                in_flight_.release();
            }
            FeatureToken token = parse_token(response);
            token.validate();
            cache_.store(key, token);
            return token;
        } catch (const storage_error&) {
            throw;  // cache I/O problems are not retryable
        } catch (const error& e) {
            last_cause = e.what();
        }
    }
    throw provider_error("provider " + provider_.name() + " failed after " +
                         std::to_string(options_.max_attempts) + " attempts; last cause: " +
                         last_cause);
}

EmbedStats Embedder::stats() const {
    std::lock_guard<std::mutex> lock(stats_mu_);
    return stats_;
}

// ---------------------------------------------------------------------------
// Simple-normalization baseline

FeatureToken baseline_embed_sn(const SubjectRecord& record) {
    record.validate();
    check_range("csf_abeta", record.csf_abeta, 0.0, 2000.0);
    auto norm = [](double v, double lo, double hi) { return (v - lo) / (hi - lo); };
    FeatureToken token;  // zero-initialized; slots 12..63 stay zero
    token.values[0] = norm(record.age, 50.0, 95.0);
    token.values[1] = norm(record.education_years, 0.0, 25.0);
    token.values[2] = norm(record.mmse, 0.0, 30.0);
    token.values[3] = norm(record.adas_cog, 0.0, 70.0);
    token.values[4] = norm(record.csf_abeta, 0.0, 2000.0);
    token.values[5] = record.sex == 'M' ? 1.0 : 0.0;
    token.values[6] = record.sex == 'F' ? 1.0 : 0.0;
    token.values[static_cast<size_t>(7 + record.apoe4_count)] = 1.0;
    token.values[10] = record.family_history ? 0.0 : 1.0;
    token.values[11] = record.family_history ? 1.0 : 0.0;
    return token;
}

// ---------------------------------------------------------------------------
// Shot bank

ShotBank builtin_shot_bank() {
    // Fixed exemplars, one per severity plus an extra control. Tokens are a
    // fixed smooth pattern per example, scaled into the unit ball.
    struct Row {
        const char* id;
        double age;
        char sex;
        int edu;
        int apoe;
        int mmse;
        double adas;
        double abeta;
        bool fh;
    };
    const Row rows[] = {
        {"shot-nc", 68.400, 'F', 16, 0, 29, 5.000, 1180.000, false},
        {"shot-emci", 71.300, 'M', 14, 1, 27, 11.500, 960.000, false},
        {"shot-lmci", 74.100, 'F', 12, 1, 24, 18.000, 810.000, true},
        {"shot-ad", 77.800, 'M', 10, 2, 19, 27.500, 590.000, true},
        {"shot-nc2", 65.900, 'M', 18, 0, 30, 4.000, 1240.000, false},
    };
    ShotBank bank;
    for (int k = 0; k < 5; ++k) {
        ShotExample ex;
        const Row& r = rows[k];
        ex.record = {r.id, r.age, r.sex, r.edu, r.apoe, r.mmse, r.adas, r.abeta, r.fh};
        for (int j = 0; j < 64; ++j) {
            const double raw = 0.5 * std::sin(0.37 * (j + 1) * (k + 2)) +
                               0.25 * std::cos(0.11 * (j + 1) + k);
            ex.token.values[static_cast<size_t>(j)] = std::round(raw * 1000.0) / 1000.0;
        }
        bank.push_back(std::move(ex));
    }
    return bank;
}

}  // namespace mmf
