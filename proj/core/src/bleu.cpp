#include <algorithm>
#include <cmath>
#include <map>

#include <spdlog/spdlog.h>

#include "xgen/error.hpp"
#include "xgen/eval.hpp"

namespace xgen {

namespace {

using Gram = std::vector<std::string>;

std::map<Gram, std::size_t> ngram_counts(std::span<const std::string> s, std::size_t n) {
  std::map<Gram, std::size_t> out;
  for (std::size_t i = 0; i + n <= s.size(); ++i) ++out[Gram(s.begin() + i, s.begin() + i + n)];
  return out;
}

}  // namespace

double bleu(std::span<const Document> candidates, std::span<const Document> references) {
  if (candidates.size() != references.size())
    throw DimensionError("bleu: " + std::to_string(candidates.size()) + " candidates vs " +
                         std::to_string(references.size()) + " references");
  constexpr std::size_t kMaxOrder = 4;
  std::array<double, kMaxOrder> matches{}, totals{};
  double cand_len = 0.0, ref_len = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (references[i].empty()) throw ContractError("bleu: empty reference " + std::to_string(i));
    cand_len += static_cast<double>(candidates[i].size());
    ref_len += static_cast<double>(references[i].size());
    for (std::size_t n = 1; n <= kMaxOrder; ++n) {
      const auto c = ngram_counts(candidates[i], n);
      const auto r = ngram_counts(references[i], n);
      for (const auto& [g, k] : c) {
        auto it = r.find(g);
        if (it != r.end()) matches[n - 1] += static_cast<double>(std::min(k, it->second));
        totals[n - 1] += static_cast<double>(k);
      }
    }
  }
  if (cand_len == 0.0) {
    spdlog::warn("bleu: empty candidate, score is 0");
    return 0.0;
  }
  double log_sum = 0.0;
  std::size_t orders = 0;
  for (std::size_t n = 0; n < kMaxOrder; ++n) {
    if (totals[n] == 0.0) continue;
    const double p = matches[n] > 0.0 ? matches[n] / totals[n] : kBleuEpsilon / totals[n];
    log_sum += std::log(p);
    ++orders;
  }
  const double bp = cand_len < ref_len ? std::exp(1.0 - ref_len / cand_len) : 1.0;
  return bp * std::exp(log_sum / static_cast<double>(orders));
}

double bleu(std::span<const std::string> candidate, std::span<const std::string> reference) {
  const Document c(candidate.begin(), candidate.end());
  const Document r(reference.begin(), reference.end());
  return bleu(std::span<const Document>(&c, 1), std::span<const Document>(&r, 1));
}

}  // namespace xgen
