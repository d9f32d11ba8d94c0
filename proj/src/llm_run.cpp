#include "ttpc/llm_run.hpp"

#include <atomic>
#include <chrono>
#include <fstream>
#include <set>
#include <thread>

#include <json.hpp>

#include "ttpc/errors.hpp"
#include "ttpc/sha256.hpp"

namespace ttpc {

using nlohmann::json;
namespace fs = std::filesystem;

// ---------- predictions JSONL ----------

std::string prediction_line(const PredictionRecord& r) {
  json o;
  o["record_id"] = r.record_id;
  o["model_id"] = r.model_id;
  std::vector<std::string> names;
  for (Tactic t : tactics_from_vector(r.predicted))
    names.push_back(canonical_name(t));
  o["tactics"] = names;
  o["unknown_labels"] = r.unknown_labels;
  o["raw_response"] = r.raw_response;
  o["prompt_hash"] = r.prompt_hash;
  o["conforming"] = r.conforming;
  if (r.mapped_to_none) o["mapped_to_none"] = true;
  if (!r.probs.empty()) o["probs"] = r.probs;
  return o.dump();
}

void save_predictions(const std::vector<PredictionRecord>& records,
                      const fs::path& path) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) raise(ErrKind::Io, "cannot write predictions: " + path.string());
    for (const auto& r : records) out << prediction_line(r) << '\n';
    if (!out) raise(ErrKind::Io, "short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::vector<PredictionRecord> load_predictions(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrKind::Io, "cannot open predictions: " + path.string());
  std::vector<PredictionRecord> out;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json o;
    try {
      o = json::parse(line);
    } catch (const json::parse_error& e) {
      raise(ErrKind::Parse, path.string() + ":" + std::to_string(line_no) +
                                ": bad prediction line: " + e.what());
    }
    PredictionRecord r;
    try {
      r.record_id = o.at("record_id").get<std::string>();
      r.model_id = o.at("model_id").get<std::string>();
      std::set<Tactic> set;
      for (const auto& name : o.at("tactics")) {
        auto t = tactic_from_canonical(name.get<std::string>());
        if (!t)
          raise(ErrKind::Schema, path.string() + ":" + std::to_string(line_no) +
                                     ": unknown tactic " +
                                     name.get<std::string>());
        set.insert(*t);
      }
      r.predicted = vector_from_tactics(set);
      if (o.contains("unknown_labels"))
        r.unknown_labels =
            o["unknown_labels"].get<std::vector<std::string>>();
      r.raw_response = o.value("raw_response", "");
      r.prompt_hash = o.value("prompt_hash", "");
      r.conforming = o.value("conforming", true);
      r.mapped_to_none = o.value("mapped_to_none", false);
      if (o.contains("probs")) r.probs = o["probs"].get<std::vector<float>>();
    } catch (const json::exception& e) {
      raise(ErrKind::Schema, path.string() + ":" + std::to_string(line_no) +
                                 ": bad prediction record: " + e.what());
    }
    out.push_back(std::move(r));
  }
  return out;
}

// ---------- response cache ----------

ResponseCache::ResponseCache(fs::path dir) : dir_(std::move(dir)) {
  fs::create_directories(dir_);
}

std::string ResponseCache::key(const std::string& provider_id,
                               const std::string& model_id,
                               const std::string& prompt) {
  Sha256 h;
  h.update(provider_id);
  h.update("\x1f");
  h.update(model_id);
  h.update("\x1f");
  h.update(prompt);
  return h.hex_digest();
}

std::optional<std::string> ResponseCache::get(const std::string& key) const {
  std::lock_guard<std::mutex> lock(mu_);
  fs::path p = dir_ / (key + ".json");
  std::ifstream in(p, std::ios::binary);
  if (!in) return std::nullopt;
  json o;
  try {
    o = json::parse(in);
  } catch (const json::parse_error&) {
    return std::nullopt;  // treat a torn cache entry as a miss
  }
  if (!o.contains("response")) return std::nullopt;
  return o["response"].get<std::string>();
}

void ResponseCache::put(const std::string& key, const std::string& provider_id,
                        const std::string& model_id,
                        const std::string& response) {
  std::lock_guard<std::mutex> lock(mu_);
  json o;
  o["provider_id"] = provider_id;
  o["model_id"] = model_id;
  o["response"] = response;
  fs::path p = dir_ / (key + ".json");
  fs::path tmp = dir_ / (key + ".json.tmp");
  std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
  out << o.dump() << '\n';
  out.close();
  fs::rename(tmp, p);
}

// ---------- query with retries ----------

void RateLimiter::acquire() {
  if (interval_ms_ <= 0) return;
  std::chrono::steady_clock::time_point wake;
  {
    std::lock_guard<std::mutex> lock(mu_);
    const auto now = std::chrono::steady_clock::now();
    if (next_ < now) next_ = now;
    wake = next_;
    next_ += std::chrono::milliseconds(interval_ms_);
  }
  std::this_thread::sleep_until(wake);
}

QueryResult query(ChatProvider& provider, const std::string& model,
                  const std::string& prompt, ResponseCache* cache,
                  const RetryPolicy& retry, LlmRunStats* stats,
                  RateLimiter* limiter) {
  QueryResult qr;
  qr.prompt_hash = sha256_hex(prompt);

  if (estimate_tokens(prompt) > provider.context_tokens())
    raise(ErrKind::ContextOverflow,
          "prompt estimated at " + std::to_string(estimate_tokens(prompt)) +
              " tokens exceeds the provider context of " +
              std::to_string(provider.context_tokens()));

  const std::string cache_key =
      ResponseCache::key(provider.id(), model, prompt);
  if (cache) {
    if (auto hit = cache->get(cache_key)) {
      qr.text = *hit;
      qr.cache_hit = true;
      if (stats) stats->cache_hits += 1;
      return qr;
    }
  }

  int delay_ms = retry.base_delay_ms;
  for (int attempt = 1;; ++attempt) {
    try {
      if (limiter) limiter->acquire();
      qr.text = provider.complete(model, prompt);
      if (stats) stats->api_calls += 1;
      break;
    } catch (const Error& e) {
      if (stats) stats->api_calls += 1;
      if (!e.transient || attempt >= retry.max_attempts) throw;
      if (stats) stats->retries += 1;
      qr.retries += 1;
      if (retry.sleep && delay_ms > 0)
        std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
      delay_ms = std::min(int(delay_ms * retry.multiplier), retry.max_delay_ms);
    }
  }
  if (cache) cache->put(cache_key, provider.id(), model, qr.text);
  return qr;
}

// ---------- checkpoints ----------

namespace {

void append_checkpoint(const fs::path& path,
                       const std::vector<PredictionRecord>& batch) {
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) raise(ErrKind::Io, "cannot append checkpoint: " + path.string());
  for (const auto& r : batch) out << prediction_line(r) << '\n';
}

}  // namespace

// ---------- predict_llm ----------

namespace {

struct BatchJob {
  size_t index;       // batch number in dataset order
  size_t start, end;  // record range [start, end)
};

}  // namespace

LlmRunResult predict_llm(ChatProvider& provider, const PromptTemplate& tmpl,
                         const std::vector<DescriptionRecord>& records,
                         const LlmRunOptions& opts) {
  if (records.empty())
    raise(ErrKind::InvalidInput, "predict_llm on an empty dataset");
  if (opts.batch_size < 1)
    raise(ErrKind::InvalidInput, "batch_size must be >= 1");
  if (opts.model.empty())
    raise(ErrKind::InvalidInput, "predict_llm requires a model id");
  if (opts.concurrency < 1)
    raise(ErrKind::InvalidInput, "concurrency must be >= 1");
  for (const auto& r : records)
    if (r.text.empty())
      raise(ErrKind::InvalidInput, "record " + r.id + " has empty text");

  LlmRunResult result;
  result.template_hash = tmpl.hash();
  result.nondeterministic = !provider.supports_temperature();

  std::optional<ResponseCache> cache;
  if (!opts.cache_dir.empty()) cache.emplace(opts.cache_dir);

  // resume: completed records from a previous aborted run
  std::map<std::string, PredictionRecord> done;
  if (!opts.checkpoint.empty() && fs::exists(opts.checkpoint)) {
    for (auto& r : load_predictions(opts.checkpoint)) done[r.record_id] = r;
  }

  const size_t n_batches =
      (records.size() + opts.batch_size - 1) / size_t(opts.batch_size);
  std::vector<std::vector<PredictionRecord>> by_batch(n_batches);
  std::vector<BatchJob> pending;
  for (size_t b = 0; b < n_batches; ++b) {
    const size_t start = b * size_t(opts.batch_size);
    const size_t end =
        std::min(records.size(), start + size_t(opts.batch_size));
    bool all_done = true;
    for (size_t i = start; i < end; ++i)
      if (!done.count(records[i].id)) {
        all_done = false;
        break;
      }
    if (all_done) {
      for (size_t i = start; i < end; ++i)
        by_batch[b].push_back(done.at(records[i].id));
      result.stats.resumed += int(end - start);
    } else {
      pending.push_back({b, start, end});
    }
  }

  const std::string model_id = opts.model;
  RateLimiter limiter(opts.min_dispatch_interval_ms);
  std::mutex mu;  // guards result stats/warnings, by_batch, the checkpoint
  std::atomic<size_t> next_job{0};
  std::atomic<bool> stop{false};
  std::exception_ptr first_error;

  auto worker = [&]() {
    for (;;) {
      if (stop.load()) return;
      const size_t j = next_job.fetch_add(1);
      if (j >= pending.size()) return;
      const BatchJob job = pending[j];
      try {
        std::vector<std::string> descriptions;
        for (size_t i = job.start; i < job.end; ++i)
          descriptions.push_back(records[i].text);
        RenderedPrompt prompt = build_prompt(tmpl, descriptions);

        LlmRunStats local;
        QueryResult qr =
            query(provider, model_id, prompt.text, cache ? &*cache : nullptr,
                  opts.retry, &local, &limiter);

        auto slots = parse_response(qr.text, int(job.end - job.start));
        std::vector<PredictionRecord> batch_records;
        for (size_t i = job.start; i < job.end; ++i) {
          const ParsedSlot& slot = slots[i - job.start];
          PredictionRecord pr;
          pr.record_id = records[i].id;
          pr.model_id = model_id;
          pr.raw_response = slot.line;
          pr.unknown_labels = slot.unknowns;
          pr.conforming = slot.conforming;
          pr.cache_hit = qr.cache_hit;
          pr.prompt_hash = qr.prompt_hash;
          std::set<Tactic> known = slot.tactics;
          if (!slot.unknowns.empty() &&
              opts.policy == UnknownLabelPolicy::MapToNone && known.empty()) {
            pr.mapped_to_none = true;  // wholly unrecognized answer -> NONE
          }
          // under both policies unknown labels never enter the vector and
          // stay in unknown_labels for diagnostics
          pr.predicted = vector_from_tactics(known);
          if (!slot.unknowns.empty()) local.unknown_records += 1;
          if (!slot.conforming) local.nonconforming += 1;
          batch_records.push_back(std::move(pr));
        }

        std::lock_guard<std::mutex> lock(mu);
        if (!opts.checkpoint.empty())
          append_checkpoint(opts.checkpoint, batch_records);
        result.stats.api_calls += local.api_calls;
        result.stats.cache_hits += local.cache_hits;
        result.stats.retries += local.retries;
        result.stats.unknown_records += local.unknown_records;
        result.stats.nonconforming += local.nonconforming;
        for (const auto& w : prompt.warnings) result.warnings.push_back(w);
        by_batch[job.index] = std::move(batch_records);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!first_error) first_error = std::current_exception();
        stop.store(true);
        return;
      }
    }
  };

  const int n_workers =
      int(std::min<size_t>(size_t(opts.concurrency), pending.size()));
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(n_workers);
    for (int w = 0; w < n_workers; ++w) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  // completed batches are already in the checkpoint; surface the failure
  if (first_error) std::rethrow_exception(first_error);

  for (auto& batch : by_batch)
    for (auto& r : batch) result.records.push_back(std::move(r));

  if (result.records.size() != records.size())
    raise(ErrKind::InvalidInput,
          "internal: prediction count does not match input count");
  return result;
}

}  // namespace ttpc
