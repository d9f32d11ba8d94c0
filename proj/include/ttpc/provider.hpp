#pragma once

#include <atomic>
#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace ttpc {

// Minimal chat/completion contract: prompt text in, completion text out.
// Temperature is pinned to 0 by the run layer; providers that lack the knob
// report supports_temperature() == false and the run manifest flags the run
// as nondeterministic.
class ChatProvider {
 public:
  virtual ~ChatProvider() = default;

  virtual std::string id() const = 0;
  virtual bool supports_temperature() const { return true; }
  virtual int context_tokens() const = 0;

  // Throws ttpc::Error; transient errors (rate limit, transport) are marked
  // retryable and the run layer backs off and retries. Must be safe to call
  // from multiple worker threads.
  virtual std::string complete(const std::string& model,
                               const std::string& prompt) = 0;

  int calls_made() const { return calls_.load(); }

 protected:
  std::atomic<int> calls_{0};
};

struct ProviderConfig {
  std::string id = "openai-compat";
  std::string kind = "openai-compat";
  std::string base_url;  // e.g. "https://api.openai.com"
  std::string path = "/v1/chat/completions";
  std::string api_key_env;  // credential comes from this environment variable
  int context_tokens = 16384;
  bool supports_temperature = true;
  int timeout_ms = 30000;

  static ProviderConfig from_file(const std::filesystem::path& path);
};

// OpenAI-style chat completions over HTTP(S).
std::unique_ptr<ChatProvider> make_http_provider(const ProviderConfig& cfg);

// Deterministic test double that answers "Tactic(s): NONE" for every
// description block in the prompt.
std::unique_ptr<ChatProvider> make_none_mock_provider();

// Serves a fixed response sequence in call order; optionally injects
// transient failures before given calls. Used by tests and replay runs.
class ScriptedProvider : public ChatProvider {
 public:
  explicit ScriptedProvider(std::vector<std::string> responses,
                            std::string id = "scripted");

  // The n-th successful call will first fail `failures` times with the
  // given transient error kind.
  void inject_transient_failures(int before_call, int failures);

  std::string id() const override { return id_; }
  int context_tokens() const override { return 1 << 20; }
  std::string complete(const std::string& model,
                       const std::string& prompt) override;

 private:
  std::vector<std::string> responses_;
  std::string id_;
  std::mutex mu_;
  int next_ = 0;
  int fail_before_ = -1;
  int failures_left_ = 0;
};

// Always throws; proves that fully cached runs never reach the network.
class FailingProvider : public ChatProvider {
 public:
  explicit FailingProvider(std::string id = "failing") : id_(std::move(id)) {}
  std::string id() const override { return id_; }
  int context_tokens() const override { return 1 << 20; }
  std::string complete(const std::string&, const std::string&) override;

 private:
  std::string id_;
};

// Loads the batch responses recorded under dir (manifest.json +
// batch_*.txt) into a ScriptedProvider.
std::unique_ptr<ScriptedProvider> make_replay_provider(
    const std::filesystem::path& dir);

// Rough token estimate used for the pre-dispatch context check.
int estimate_tokens(const std::string& text);

}  // namespace ttpc
