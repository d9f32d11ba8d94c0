#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ttpc {

struct Tokenized {
  std::vector<int32_t> ids;
  bool truncated = false;
  int original_len = 0;
};

// Whitespace/punctuation word tokenizer with a corpus-built vocabulary.
// Deterministic: vocabulary order is (frequency desc, token asc). Ids 0 and
// 1 are reserved for [PAD] and [UNK].
class Tokenizer {
 public:
  static constexpr int32_t kPad = 0;
  static constexpr int32_t kUnk = 1;

  static std::vector<std::string> split_tokens(std::string_view text);

  static Tokenizer build(const std::vector<std::string>& texts, int max_vocab,
                         int min_freq = 1);

  static Tokenizer from_vocab_file(const std::filesystem::path& path);
  void save_vocab(const std::filesystem::path& path) const;

  // Tail-only truncation to max_tokens; `truncated` reports the event.
  Tokenized encode(std::string_view text, int max_tokens) const;

  int vocab_size() const { return int(tokens_.size()); }
  const std::string& token(int32_t id) const { return tokens_[id]; }
  // Stable content hash of the vocabulary, recorded in model artifacts.
  std::string fingerprint() const;

 private:
  std::vector<std::string> tokens_;  // id -> token; [0]=[PAD], [1]=[UNK]
  std::unordered_map<std::string, int32_t> index_;

  void rebuild_index();
};

}  // namespace ttpc
