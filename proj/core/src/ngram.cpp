#include "xgen/ngram.hpp"

#include <cmath>

#include "xgen/error.hpp"

namespace xgen {

namespace {
constexpr std::uint64_t kIdBits = 21;
constexpr std::uint64_t kIdLimit = std::uint64_t{1} << kIdBits;
}  // namespace

NgramLm::NgramLm(std::size_t order, double alpha, std::size_t outcome_count)
    : order_(order), alpha_(alpha), outcomes_(outcome_count) {
  if (order < 1 || order > 3) throw ConfigError("ngram: order must be 1, 2 or 3");
  if (!(alpha > 0)) throw ConfigError("ngram: smoothing constant must be positive");
  if (outcome_count == 0) throw ConfigError("ngram: empty outcome set");
}

NgramLm NgramLm::train(std::span<const std::vector<std::string>> sentences, const Vocabulary& vocab,
                       std::size_t order, double alpha) {
  NgramLm lm(order, alpha, vocab.size() - 2);
  for (const auto& s : sentences) {
    std::vector<std::size_t> ids;
    ids.reserve(s.size());
    for (const auto& t : s) ids.push_back(vocab.id(t));
    lm.add_sentence(ids);
  }
  return lm;
}

std::uint64_t NgramLm::context_key(std::span<const std::size_t> context) const {
  std::uint64_t k = 0;
  for (auto id : context) {
    if (id >= kIdLimit) throw DimensionError("ngram: id exceeds supported range");
    k = (k << kIdBits) | id;
  }
  return k;
}

std::uint64_t NgramLm::key(std::span<const std::size_t> context, std::size_t next) const {
  // Contexts have fixed length order-1, so appending keeps keys unique.
  if (next >= kIdLimit) throw DimensionError("ngram: id exceeds supported range");
  return (context_key(context) << kIdBits) | next;
}

void NgramLm::add_sentence(std::span<const std::size_t> ids) {
  std::vector<std::size_t> seq(order_ - 1, Vocabulary::kBos);
  seq.insert(seq.end(), ids.begin(), ids.end());
  seq.push_back(Vocabulary::kEos);
  for (std::size_t i = order_ - 1; i < seq.size(); ++i) {
    std::span<const std::size_t> ctx(seq.data() + i - (order_ - 1), order_ - 1);
    ngram_counts_[key(ctx, seq[i])] += 1.0;
    context_counts_[context_key(ctx)] += 1.0;
  }
}

double NgramLm::probability(std::span<const std::size_t> history, std::size_t next) const {
  std::vector<std::size_t> ctx(order_ - 1, Vocabulary::kBos);
  const std::size_t take = std::min(history.size(), order_ - 1);
  std::copy(history.end() - static_cast<std::ptrdiff_t>(take), history.end(), ctx.end() - static_cast<std::ptrdiff_t>(take));
  const auto ci = context_counts_.find(context_key(ctx));
  const double c_ctx = ci == context_counts_.end() ? 0.0 : ci->second;
  const auto ni = ngram_counts_.find(key(ctx, next));
  const double c_ng = ni == ngram_counts_.end() ? 0.0 : ni->second;
  return (c_ng + alpha_) / (c_ctx + alpha_ * static_cast<double>(outcomes_));
}

double NgramLm::perplexity_ids(std::span<const std::vector<std::size_t>> sentences) const {
  if (sentences.empty()) throw ContractError("lm_perplexity: empty sentence set");
  double nll = 0.0;
  std::size_t n = 0;
  for (const auto& s : sentences) {
    std::vector<std::size_t> seq(s.begin(), s.end());
    seq.push_back(Vocabulary::kEos);
    for (std::size_t i = 0; i < seq.size(); ++i) {
      nll -= std::log(probability(std::span<const std::size_t>(seq.data(), i), seq[i]));
      ++n;
    }
  }
  return std::exp(nll / static_cast<double>(n));
}

double NgramLm::perplexity(std::span<const std::vector<std::string>> sentences, const Vocabulary& vocab) const {
  std::vector<std::vector<std::size_t>> ids;
  ids.reserve(sentences.size());
  for (const auto& s : sentences) {
    auto& row = ids.emplace_back();
    for (const auto& t : s) row.push_back(vocab.id(t));
  }
  return perplexity_ids(ids);
}

}  // namespace xgen
