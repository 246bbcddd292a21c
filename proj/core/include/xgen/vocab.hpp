#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "xgen/corpus.hpp"

namespace xgen {

/// Token <-> id bijection with four reserved ids.
///
/// Ids 0..3 are PAD, BOS, EOS and UNK. Words follow in lexicographic order,
/// so a vocabulary depends only on the set of kept tokens.
class Vocabulary {
 public:
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kBos = 1;
  static constexpr std::size_t kEos = 2;
  static constexpr std::size_t kUnk = 3;
  static constexpr std::size_t kReserved = 4;

  Vocabulary();
  /// Words only (no reserved tokens); duplicates rejected.
  explicit Vocabulary(std::vector<std::string> words);

  /// Keeps tokens seen at least min_count times in `train`.
  static Vocabulary build(std::span<const SentenceRecord> train, std::size_t min_count = 1);

  std::size_t size() const { return tokens_.size(); }
  /// UNK for unknown tokens.
  std::size_t id(std::string_view token) const;
  bool contains(std::string_view token) const;
  const std::string& token(std::size_t id) const;
  /// Non-reserved tokens in id order.
  std::vector<std::string> words() const;

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// BOS + ids + EOS, right-padded with PAD to maxlen. Sentences longer than
/// maxlen - 2 tokens are truncated before EOS and a warning is logged.
std::vector<std::size_t> encode_sentence(std::span<const std::string> tokens, const Vocabulary& vocab,
                                         std::size_t maxlen);
/// Inverse of encode_sentence: drops BOS/PAD, stops at EOS.
std::vector<std::string> decode_ids(std::span<const std::size_t> ids, const Vocabulary& vocab);

/// Checks the padded layout: BOS first, exactly one EOS, only PAD after it.
bool valid_layout(std::span<const std::size_t> ids);

}  // namespace xgen
