#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <vector>

#include "mmf/errors.hpp"

namespace mmf {

// One subject's tabular non-image data.
struct SubjectRecord {
    std::string id;
    double age = 0.0;            // years, 50-95
    char sex = 'M';              // 'M' or 'F'
    int education_years = 0;     // 0-25
    int apoe4_count = 0;         // 0, 1 or 2
    int mmse = 0;                // 0-30
    double adas_cog = 0.0;       // 0-70
    double csf_abeta = 0.0;      // pg/mL, > 0
    bool family_history = false;

    void validate() const;
};

// 64-value embedding of a subject's non-image data.
struct FeatureToken {
    std::array<double, 64> values{};

    double l2_norm() const;
    // Finite values with L2 norm in (0, 1000].
    void validate() const;
};

struct PromptSpec {
    int shots = 5;  // 0, 1 or 5
    std::vector<std::string> groups{"demographics", "genetics", "cognition", "csf"};
    bool include_image_summary = true;

    void validate() const;
};

struct ShotExample {
    SubjectRecord record;
    FeatureToken token;
};

using ShotBank = std::vector<ShotExample>;

// Five synthetic worked examples with fixed tokens, written next to every
// generated dataset. The records and token values are inventions shaped to
// look plausible; nothing clinical.
ShotBank builtin_shot_bank();

// Deterministic prompt text: instruction header, spec.shots worked examples
// in shot-bank order, then the record rendered group by group (reals with 3
// decimals) and, when present, the image summary as a labeled bracketed list.
std::string build_prompt(const SubjectRecord& record,
                         const std::optional<std::vector<double>>& image_summary,
                         const PromptSpec& spec, const ShotBank& shot_bank);

// Extracts the first [ ... ] span of a provider response and parses it into
// a FeatureToken; fails unless it holds exactly 64 finite numbers.
FeatureToken parse_token(const std::string& response_text);

std::string format_token(const FeatureToken& token);

// ---------------------------------------------------------------------------
// Providers

class EmbeddingProvider {
  public:
    virtual ~EmbeddingProvider() = default;
    virtual std::string name() const = 0;
    // Returns free-form response text; throws provider_error on transport
    // failure. Parsing and validation are the caller's job.
    virtual std::string complete(const std::string& prompt) = 0;
};

// Offline stand-in: seeds the documented PRNG with the 64-bit FNV-1a hash of
// the prompt, draws 64 values in [-1,1], L2-normalizes and formats them.
class MockProvider : public EmbeddingProvider {
  public:
    std::string name() const override { return "mock"; }
    std::string complete(const std::string& prompt) override;
};

struct HttpProviderConfig {
    std::string url;                    // http://host:port/path
    std::string model = "gpt-4";
    std::string api_key;                // from MM_LLM_API_KEY
    int timeout_seconds = 30;
};

// Chat-completion wire contract: POST {"model", "messages":[{"role":"user",
// "content": prompt}]} with a Bearer token; the response text is
// choices[0].message.content.
class HttpProvider : public EmbeddingProvider {
  public:
    explicit HttpProvider(HttpProviderConfig cfg);
    std::string name() const override { return "http:" + cfg_.model; }
    std::string complete(const std::string& prompt) override;

  private:
    HttpProviderConfig cfg_;
};

// ---------------------------------------------------------------------------
// Cache

// Append-only token cache. Line format, one record per line:
//   <64 hex chars: SHA-256 of prompt + '\n' + provider name> <v0> ... <v63>
// Values are printed with enough digits to round-trip doubles exactly.
class TokenCache {
  public:
    explicit TokenCache(std::filesystem::path path);

    std::optional<FeatureToken> lookup(const std::string& key);
    void store(const std::string& key, const FeatureToken& token);
    size_t size() const;

    static std::string cache_key(const std::string& prompt, const std::string& provider_name);

  private:
    std::filesystem::path path_;
    mutable std::mutex mu_;
    std::map<std::string, FeatureToken> entries_;
};

// ---------------------------------------------------------------------------
// Embedder

struct EmbedOptions {
    int max_attempts = 3;
    double backoff_base_seconds = 0.5;  // 0.5s, 1s, 2s between attempts
    int max_in_flight = 4;              // bound on concurrent provider calls
};

struct EmbedStats {
    int provider_calls = 0;
    int cache_hits = 0;
};

// Cache-backed embedding front end. Thread-safe; provider calls are limited
// to max_in_flight at a time.
class Embedder {
  public:
    Embedder(EmbeddingProvider& provider, TokenCache& cache, EmbedOptions options = {});

    FeatureToken embed(const SubjectRecord& record,
                       const std::optional<std::vector<double>>& image_summary,
                       const PromptSpec& spec, const ShotBank& shot_bank);

    EmbedStats stats() const;

  private:
    EmbeddingProvider& provider_;
    TokenCache& cache_;
    EmbedOptions options_;
    std::counting_semaphore<64> in_flight_;
    mutable std::mutex stats_mu_;
    EmbedStats stats_;
};

// ---------------------------------------------------------------------------
// Simple-normalization baseline

// Min-max normalizes the numeric fields against the documented ranges
// (age 50-95, education 0-25, mmse 0-30, adas_cog 0-70, csf_abeta 0-2000),
// one-hot encodes sex / apoe4_count / family_history, concatenates to 12
// values and zero-pads to 64.
FeatureToken baseline_embed_sn(const SubjectRecord& record);

}  // namespace mmf
