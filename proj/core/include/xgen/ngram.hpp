#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "xgen/vocab.hpp"

namespace xgen {

/// Additively smoothed n-gram language model (order 1..3).
///
/// Outcomes are every vocabulary id except PAD and BOS, i.e. words, UNK and
/// EOS. Histories are left-padded with BOS. With context count c(h) and
/// n-gram count c(h, w):
///
///   p(w | h) = (c(h, w) + alpha) / (c(h) + alpha * |outcomes|)
class NgramLm {
 public:
  NgramLm(std::size_t order, double alpha, std::size_t outcome_count);

  /// Fits on tokenized sentences mapped through `vocab`.
  static NgramLm train(std::span<const std::vector<std::string>> sentences, const Vocabulary& vocab,
                       std::size_t order = 3, double alpha = 0.1);

  /// Adds one sentence given as content ids (no BOS/EOS).
  void add_sentence(std::span<const std::size_t> ids);

  double probability(std::span<const std::size_t> history, std::size_t next) const;

  /// exp(-mean log p) over every token of every sentence, EOS included.
  double perplexity_ids(std::span<const std::vector<std::size_t>> sentences) const;
  double perplexity(std::span<const std::vector<std::string>> sentences, const Vocabulary& vocab) const;

  std::size_t order() const { return order_; }
  double alpha() const { return alpha_; }
  std::size_t outcome_count() const { return outcomes_; }

 private:
  std::uint64_t key(std::span<const std::size_t> context, std::size_t next) const;
  std::uint64_t context_key(std::span<const std::size_t> context) const;

  std::size_t order_;
  double alpha_;
  std::size_t outcomes_;
  std::unordered_map<std::uint64_t, double> ngram_counts_;
  std::unordered_map<std::uint64_t, double> context_counts_;
};

}  // namespace xgen
