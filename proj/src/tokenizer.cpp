#include "ttpc/tokenizer.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>

#include "ttpc/errors.hpp"
#include "ttpc/sha256.hpp"

namespace ttpc {

std::vector<std::string> Tokenizer::split_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    const unsigned char uc = static_cast<unsigned char>(c);
    if (std::isalnum(uc)) {
      cur += static_cast<char>(std::tolower(uc));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

Tokenizer Tokenizer::build(const std::vector<std::string>& texts,
                           int max_vocab, int min_freq) {
  if (max_vocab < 3) raise(ErrKind::Config, "max_vocab must be >= 3");
  std::map<std::string, int64_t> counts;  // ordered for tie determinism
  for (const auto& t : texts)
    for (auto& tok : split_tokens(t)) counts[tok] += 1;

  std::vector<std::pair<std::string, int64_t>> by_freq(counts.begin(),
                                                       counts.end());
  std::stable_sort(by_freq.begin(), by_freq.end(),
                   [](const auto& a, const auto& b) {
                     if (a.second != b.second) return a.second > b.second;
                     return a.first < b.first;
                   });

  Tokenizer tk;
  tk.tokens_ = {"[PAD]", "[UNK]"};
  for (const auto& [tok, cnt] : by_freq) {
    if (cnt < min_freq) break;
    if (int(tk.tokens_.size()) >= max_vocab) break;
    tk.tokens_.push_back(tok);
  }
  tk.rebuild_index();
  return tk;
}

void Tokenizer::rebuild_index() {
  index_.clear();
  for (size_t i = 0; i < tokens_.size(); ++i) index_[tokens_[i]] = int32_t(i);
}

Tokenizer Tokenizer::from_vocab_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrKind::Io, "cannot open vocab file: " + path.string());
  Tokenizer tk;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    tk.tokens_.push_back(line);
  }
  if (tk.tokens_.size() < 2 || tk.tokens_[0] != "[PAD]" ||
      tk.tokens_[1] != "[UNK]")
    raise(ErrKind::Schema,
          "vocab file must start with [PAD] and [UNK]: " + path.string());
  tk.rebuild_index();
  return tk;
}

void Tokenizer::save_vocab(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(ErrKind::Io, "cannot write vocab file: " + path.string());
  for (const auto& t : tokens_) out << t << '\n';
}

Tokenized Tokenizer::encode(std::string_view text, int max_tokens) const {
  if (max_tokens < 1) raise(ErrKind::InvalidInput, "max_tokens must be >= 1");
  auto words = split_tokens(text);
  Tokenized out;
  out.original_len = int(words.size());
  out.ids.reserve(std::min<size_t>(words.size(), size_t(max_tokens)));
  for (const auto& w : words) {
    if (int(out.ids.size()) >= max_tokens) {
      out.truncated = true;  // tail dropped
      break;
    }
    auto it = index_.find(w);
    out.ids.push_back(it == index_.end() ? kUnk : it->second);
  }
  return out;
}

std::string Tokenizer::fingerprint() const {
  Sha256 h;
  for (const auto& t : tokens_) {
    h.update(t);
    h.update("\n");
  }
  return h.hex_digest();
}

}  // namespace ttpc
