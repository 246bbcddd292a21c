#include "xgen/vocab.hpp"

#include <algorithm>
#include <map>

#include <spdlog/spdlog.h>

#include "xgen/error.hpp"

namespace xgen {

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{}) {}

Vocabulary::Vocabulary(std::vector<std::string> words) {
  tokens_ = {"<pad>", "<bos>", "<eos>", "<unk>"};
  for (auto& w : words) tokens_.push_back(std::move(w));
  for (std::size_t i = 0; i < tokens_.size(); ++i)
    if (!index_.emplace(tokens_[i], i).second) throw ConfigError("vocabulary: duplicate token '" + tokens_[i] + "'");
}

Vocabulary Vocabulary::build(std::span<const SentenceRecord> train, std::size_t min_count) {
  if (train.empty()) throw ContractError("build_vocab: empty training set");
  std::map<std::string, std::size_t> counts;
  for (const auto& r : train)
    for (const auto& t : r.tokens) ++counts[t];
  std::vector<std::string> words;
  for (const auto& [tok, n] : counts)
    if (n >= std::max<std::size_t>(min_count, 1)) words.push_back(tok);
  return Vocabulary(std::move(words));
}

std::size_t Vocabulary::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(std::string_view token) const { return index_.count(std::string(token)) > 0; }

const std::string& Vocabulary::token(std::size_t id) const {
  if (id >= tokens_.size()) throw DimensionError("vocabulary: id " + std::to_string(id) + " out of range");
  return tokens_[id];
}

std::vector<std::string> Vocabulary::words() const { return {tokens_.begin() + kReserved, tokens_.end()}; }

std::vector<std::size_t> encode_sentence(std::span<const std::string> tokens, const Vocabulary& vocab,
                                         std::size_t maxlen) {
  if (tokens.empty()) throw ContractError("encode_sentence: empty input");
  if (maxlen < 3) throw ContractError("encode_sentence: maxlen must be at least 3");
  std::size_t n = tokens.size();
  if (n + 2 > maxlen) {
    spdlog::warn("encode_sentence: {} tokens exceed maxlen {}; truncating", n, maxlen);
    n = maxlen - 2;
  }
  std::vector<std::size_t> ids(maxlen, Vocabulary::kPad);
  ids[0] = Vocabulary::kBos;
  for (std::size_t i = 0; i < n; ++i) ids[i + 1] = vocab.id(tokens[i]);
  ids[n + 1] = Vocabulary::kEos;
  return ids;
}

std::vector<std::string> decode_ids(std::span<const std::size_t> ids, const Vocabulary& vocab) {
  std::vector<std::string> out;
  for (auto id : ids) {
    if (id == Vocabulary::kEos) break;
    if (id == Vocabulary::kBos || id == Vocabulary::kPad) continue;
    out.push_back(vocab.token(id));
  }
  return out;
}

bool valid_layout(std::span<const std::size_t> ids) {
  if (ids.empty() || ids[0] != Vocabulary::kBos) return false;
  std::size_t eos_count = 0;
  bool after_eos = false;
  for (std::size_t i = 1; i < ids.size(); ++i) {
    if (after_eos && ids[i] != Vocabulary::kPad) return false;
    if (ids[i] == Vocabulary::kEos) {
      ++eos_count;
      after_eos = true;
    } else if (ids[i] == Vocabulary::kPad && !after_eos) {
      return false;
    } else if (ids[i] == Vocabulary::kBos) {
      return false;
    }
  }
  return eos_count == 1;
}

}  // namespace xgen
