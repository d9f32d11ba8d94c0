#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "ttpc/predictions.hpp"
#include "ttpc/prompt.hpp"
#include "ttpc/provider.hpp"
#include "ttpc/records.hpp"

namespace ttpc {

struct RetryPolicy {
  int max_attempts = 4;  // 1 initial try + 3 retries
  int base_delay_ms = 500;
  double multiplier = 2.0;
  int max_delay_ms = 8000;
  bool sleep = true;  // tests turn the waiting off
};

// What to do with labels outside the 14-tactic space. Under both policies
// unknown labels never enter the prediction vector and are preserved in
// unknown_labels; MapToNone additionally marks a wholly unrecognized answer
// as an explicit mapped-to-NONE event.
enum class UnknownLabelPolicy { MapToNone, DropKeepKnown };

struct LlmRunStats {
  int api_calls = 0;
  int cache_hits = 0;
  int retries = 0;
  int nonconforming = 0;
  int unknown_records = 0;
  int resumed = 0;
};

struct LlmRunOptions {
  std::string model;  // model id sent to the provider
  int batch_size = 20;
  UnknownLabelPolicy policy = UnknownLabelPolicy::MapToNone;
  std::filesystem::path cache_dir;    // empty disables the cache
  std::filesystem::path checkpoint;   // empty disables resume
  RetryPolicy retry;
  int concurrency = 1;                // in-flight prompt batches
  int min_dispatch_interval_ms = 0;   // shared rate limiter between calls
};

// Minimum-interval rate limiter shared by all in-flight workers.
class RateLimiter {
 public:
  explicit RateLimiter(int min_interval_ms) : interval_ms_(min_interval_ms) {}
  void acquire();  // blocks until a dispatch slot is available

 private:
  std::mutex mu_;
  int interval_ms_;
  std::chrono::steady_clock::time_point next_{};
};

struct LlmRunResult {
  std::vector<PredictionRecord> records;  // input order, full coverage
  LlmRunStats stats;
  std::string template_hash;
  bool nondeterministic = false;  // provider lacks a temperature knob
  std::vector<std::string> warnings;
};

// Response cache keyed by sha256(provider id, model id, prompt). Safe for
// concurrent readers and writers; entries are written atomically.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir);

  static std::string key(const std::string& provider_id,
                         const std::string& model_id,
                         const std::string& prompt);

  std::optional<std::string> get(const std::string& key) const;
  void put(const std::string& key, const std::string& provider_id,
           const std::string& model_id, const std::string& response);

  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  mutable std::mutex mu_;
};

struct QueryResult {
  std::string text;
  int retries = 0;
  bool cache_hit = false;
  std::string prompt_hash;
};

// Temperature-0 query with bounded exponential backoff on transient
// failures and a pre-dispatch context-size check. Responses are cached when
// a cache is supplied; a hit performs no provider call and skips the rate
// limiter.
QueryResult query(ChatProvider& provider, const std::string& model,
                  const std::string& prompt, ResponseCache* cache,
                  const RetryPolicy& retry, LlmRunStats* stats = nullptr,
                  RateLimiter* limiter = nullptr);

// Batched full-coverage prediction over a dataset: exactly one
// PredictionRecord per input record, emitted in input order regardless of
// completion order (up to `concurrency` prompts are in flight). Provider
// failures after retries abort the run with completed records persisted to
// the checkpoint; a rerun resumes from it.
LlmRunResult predict_llm(ChatProvider& provider, const PromptTemplate& tmpl,
                         const std::vector<DescriptionRecord>& records,
                         const LlmRunOptions& opts);

}  // namespace ttpc
