#include "ttpc/provider.hpp"

#include <cstdlib>
#include <fstream>

#include <httplib.h>
#include <json.hpp>

#include "ttpc/errors.hpp"

namespace ttpc {

using nlohmann::json;

int estimate_tokens(const std::string& text) {
  // ~4 characters per token is the usual BPE ballpark; good enough for a
  // conservative pre-dispatch overflow check.
  return int(text.size() / 4) + 1;
}

ProviderConfig ProviderConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrKind::Io, "cannot open provider config: " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    raise(ErrKind::Parse,
          "bad provider config " + path.string() + ": " + e.what());
  }
  ProviderConfig cfg;
  cfg.id = j.value("id", cfg.id);
  cfg.kind = j.value("kind", cfg.kind);
  cfg.base_url = j.value("base_url", cfg.base_url);
  cfg.path = j.value("path", cfg.path);
  cfg.api_key_env = j.value("api_key_env", cfg.api_key_env);
  cfg.context_tokens = j.value("context_tokens", cfg.context_tokens);
  cfg.supports_temperature =
      j.value("supports_temperature", cfg.supports_temperature);
  cfg.timeout_ms = j.value("timeout_ms", cfg.timeout_ms);
  return cfg;
}

namespace {

class HttpChatProvider : public ChatProvider {
 public:
  explicit HttpChatProvider(ProviderConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.base_url.empty())
      raise(ErrKind::Config, "provider base_url is required");
    if (!cfg_.api_key_env.empty()) {
      const char* key = std::getenv(cfg_.api_key_env.c_str());
      if (!key || !*key)
        raise(ErrKind::Auth, "credential environment variable " +
                                 cfg_.api_key_env + " is not set");
      api_key_ = key;
    }
  }

  std::string id() const override { return cfg_.id; }
  bool supports_temperature() const override { return cfg_.supports_temperature; }
  int context_tokens() const override { return cfg_.context_tokens; }

  std::string complete(const std::string& model,
                       const std::string& prompt) override {
    ++calls_;
    httplib::Client client(cfg_.base_url);
    client.set_connection_timeout(cfg_.timeout_ms / 1000,
                                  (cfg_.timeout_ms % 1000) * 1000);
    client.set_read_timeout(cfg_.timeout_ms / 1000,
                            (cfg_.timeout_ms % 1000) * 1000);
    httplib::Headers headers;
    if (!api_key_.empty())
      headers.emplace("Authorization", "Bearer " + api_key_);

    json body;
    body["model"] = model;
    body["messages"] = json::array({json{{"role", "user"}, {"content", prompt}}});
    if (cfg_.supports_temperature) body["temperature"] = 0;

    auto res = client.Post(cfg_.path, headers, body.dump(), "application/json");
    if (!res)
      raise(ErrKind::Transport,
            "no response from " + cfg_.base_url + cfg_.path, /*transient=*/true);
    if (res->status == 401 || res->status == 403)
      raise(ErrKind::Auth, "provider rejected credentials (HTTP " +
                               std::to_string(res->status) + ")");
    if (res->status == 429)
      raise(ErrKind::RateLimit, "provider rate limited the request",
            /*transient=*/true);
    if (res->status >= 500 || res->status == 408)
      raise(ErrKind::Transport,
            "provider returned HTTP " + std::to_string(res->status),
            /*transient=*/true);
    if (res->status != 200)
      raise(ErrKind::Transport,
            "provider returned HTTP " + std::to_string(res->status) + ": " +
                res->body);

    json parsed;
    try {
      parsed = json::parse(res->body);
    } catch (const json::parse_error& e) {
      raise(ErrKind::Transport,
            std::string("provider returned unparseable JSON: ") + e.what());
    }
    try {
      return parsed.at("choices").at(0).at("message").at("content")
          .get<std::string>();
    } catch (const json::exception&) {
      raise(ErrKind::Transport,
            "provider response lacks choices[0].message.content");
    }
  }

 private:
  ProviderConfig cfg_;
  std::string api_key_;
};

class NoneMockProvider : public ChatProvider {
 public:
  std::string id() const override { return "mock"; }
  int context_tokens() const override { return 1 << 20; }
  std::string complete(const std::string&, const std::string& prompt) override {
    ++calls_;
    // one answer per ``` pair
    int fences = 0;
    for (size_t i = 0; i + 2 < prompt.size(); ++i) {
      if (prompt.compare(i, 3, "```") == 0) {
        ++fences;
        i += 2;
      }
    }
    int blocks = fences / 2;
    std::string out;
    for (int i = 0; i < blocks; ++i)
      out += std::to_string(i + 1) + ". Tactic(s): NONE\n";
    return out;
  }
};

}  // namespace

std::unique_ptr<ChatProvider> make_http_provider(const ProviderConfig& cfg) {
  return std::make_unique<HttpChatProvider>(cfg);
}

std::unique_ptr<ChatProvider> make_none_mock_provider() {
  return std::make_unique<NoneMockProvider>();
}

ScriptedProvider::ScriptedProvider(std::vector<std::string> responses,
                                   std::string id)
    : responses_(std::move(responses)), id_(std::move(id)) {}

void ScriptedProvider::inject_transient_failures(int before_call,
                                                 int failures) {
  fail_before_ = before_call;
  failures_left_ = failures;
}

std::string ScriptedProvider::complete(const std::string&,
                                       const std::string&) {
  std::lock_guard<std::mutex> lock(mu_);
  ++calls_;
  if (next_ == fail_before_ && failures_left_ > 0) {
    --failures_left_;
    raise(ErrKind::RateLimit, "scripted HTTP 429", /*transient=*/true);
  }
  if (next_ >= int(responses_.size()))
    raise(ErrKind::Transport, "scripted provider ran out of responses");
  return responses_[next_++];
}

std::string FailingProvider::complete(const std::string&, const std::string&) {
  ++calls_;
  raise(ErrKind::Transport, "provider must not be called in this run");
}

std::unique_ptr<ScriptedProvider> make_replay_provider(
    const std::filesystem::path& dir) {
  std::ifstream mf(dir / "manifest.json", std::ios::binary);
  if (!mf)
    raise(ErrKind::Io, "replay dir lacks manifest.json: " + dir.string());
  json manifest;
  try {
    manifest = json::parse(mf);
  } catch (const json::parse_error& e) {
    raise(ErrKind::Parse, "bad replay manifest: " + std::string(e.what()));
  }
  std::vector<std::string> responses;
  for (const auto& name : manifest.at("batches")) {
    std::ifstream bf(dir / name.get<std::string>(), std::ios::binary);
    if (!bf)
      raise(ErrKind::Io,
            "missing replay batch file: " + name.get<std::string>());
    std::string content((std::istreambuf_iterator<char>(bf)),
                        std::istreambuf_iterator<char>());
    responses.push_back(std::move(content));
  }
  return std::make_unique<ScriptedProvider>(
      std::move(responses), manifest.value("provider_id", "replay"));
}

}  // namespace ttpc
