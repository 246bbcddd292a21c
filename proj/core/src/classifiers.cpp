#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "xgen/error.hpp"
#include "xgen/eval.hpp"

namespace xgen {

namespace {

void check_training_input(const char* who, std::span<const Document> docs, std::span<const std::size_t> labels,
                          std::size_t class_count) {
  if (docs.size() != labels.size())
    throw DimensionError(std::string(who) + ": " + std::to_string(docs.size()) + " documents vs " +
                         std::to_string(labels.size()) + " labels");
  std::set<std::size_t> distinct;
  for (auto l : labels) {
    if (l >= class_count)
      throw ContractError(std::string(who) + ": label " + std::to_string(l) + " out of range for " +
                          std::to_string(class_count) + " classes");
    distinct.insert(l);
  }
  if (distinct.size() < 2) throw ContractError(std::string(who) + ": need at least two distinct classes");
}

std::vector<std::string> sorted_features(std::span<const Document> docs) {
  std::set<std::string> words;
  for (const auto& d : docs) words.insert(d.begin(), d.end());
  return {words.begin(), words.end()};
}

}  // namespace

std::vector<std::pair<std::size_t, double>> BowClassifier::featurize(std::span<const std::string> doc) const {
  std::map<std::size_t, double> counts;
  for (const auto& w : doc) {
    auto it = index_.find(w);
    if (it != index_.end()) counts[it->second] += 1.0;
  }
  return {counts.begin(), counts.end()};
}

std::vector<double> BowClassifier::scores(std::span<const std::string> doc) const {
  const auto x = featurize(doc);
  std::vector<double> out(class_count_, -std::numeric_limits<double>::infinity());
  for (std::size_t c = 0; c < class_count_; ++c) {
    if (!present_[c]) continue;
    const auto& row = table_[c];
    if (kind_ == BowKind::NaiveBayes) {
      double s = log_prior_[c];
      for (const auto& [j, n] : x) s += n * row[j];
      out[c] = s;
    } else {
      const double len = static_cast<double>(doc.size());
      double s = row.back() * feature_scale_;
      if (len > 0)
        for (const auto& [j, n] : x) s += row[j] * (n / len) * feature_scale_;
      out[c] = s;
    }
  }
  return out;
}

std::size_t BowClassifier::predict(std::span<const std::string> doc) const {
  const auto s = scores(doc);
  return static_cast<std::size_t>(std::max_element(s.begin(), s.end()) - s.begin());
}

BowClassifier train_nb(std::span<const Document> docs, std::span<const std::size_t> labels, std::size_t class_count,
                       double alpha) {
  check_training_input("train_nb", docs, labels, class_count);
  if (!(alpha > 0)) throw ContractError("train_nb: alpha must be positive");
  BowClassifier clf;
  clf.kind_ = BowKind::NaiveBayes;
  clf.class_count_ = class_count;
  clf.features_ = sorted_features(docs);
  for (std::size_t i = 0; i < clf.features_.size(); ++i) clf.index_.emplace(clf.features_[i], i);
  const std::size_t V = clf.features_.size();

  std::vector<double> doc_count(class_count, 0.0), word_total(class_count, 0.0);
  std::vector<std::vector<double>> counts(class_count, std::vector<double>(V, 0.0));
  for (std::size_t i = 0; i < docs.size(); ++i) {
    doc_count[labels[i]] += 1.0;
    for (const auto& w : docs[i]) {
      counts[labels[i]][clf.index_.at(w)] += 1.0;
      word_total[labels[i]] += 1.0;
    }
  }
  clf.present_.assign(class_count, false);
  clf.log_prior_.assign(class_count, 0.0);
  clf.table_.assign(class_count, std::vector<double>(V, 0.0));
  for (std::size_t c = 0; c < class_count; ++c) {
    if (doc_count[c] == 0) continue;
    clf.present_[c] = true;
    clf.log_prior_[c] = std::log(doc_count[c] / static_cast<double>(docs.size()));
    const double denom = word_total[c] + alpha * static_cast<double>(V);
    for (std::size_t j = 0; j < V; ++j) clf.table_[c][j] = std::log((counts[c][j] + alpha) / denom);
  }
  return clf;
}

BowClassifier train_svm(std::span<const Document> docs, std::span<const std::size_t> labels, std::size_t class_count,
                        const SvmOptions& options) {
  check_training_input("train_svm", docs, labels, class_count);
  if (!(options.lambda > 0) || options.epochs == 0 || !(options.feature_scale > 0))
    throw ContractError("train_svm: lambda, epochs and feature_scale must be positive");
  BowClassifier clf;
  clf.kind_ = BowKind::LinearSvm;
  clf.class_count_ = class_count;
  clf.feature_scale_ = options.feature_scale;
  clf.features_ = sorted_features(docs);
  for (std::size_t i = 0; i < clf.features_.size(); ++i) clf.index_.emplace(clf.features_[i], i);
  const std::size_t D = clf.features_.size() + 1;

  // Sparse scaled tf vectors, bias feature last.
  std::vector<std::vector<std::pair<std::size_t, double>>> xs;
  xs.reserve(docs.size());
  for (const auto& d : docs) {
    auto x = clf.featurize(d);
    const double len = static_cast<double>(d.size());
    for (auto& [j, v] : x) v = (v / len) * options.feature_scale;
    x.emplace_back(D - 1, options.feature_scale);
    xs.push_back(std::move(x));
  }

  clf.present_.assign(class_count, false);
  for (auto l : labels) clf.present_[l] = true;
  clf.table_.assign(class_count, std::vector<double>(D, 0.0));
  for (std::size_t c = 0; c < class_count; ++c) {
    if (!clf.present_[c]) continue;
    auto& w = clf.table_[c];
    Rng rng(options.seed + c);
    std::vector<std::size_t> order(docs.size());
    std::iota(order.begin(), order.end(), 0);
    std::size_t t = 0;
    for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
      rng.shuffle(order);
      for (auto i : order) {
        ++t;
        const double eta = 1.0 / (options.lambda * static_cast<double>(t));
        const double y = labels[i] == c ? 1.0 : -1.0;
        double margin = 0.0;
        for (const auto& [j, v] : xs[i]) margin += w[j] * v;
        margin *= y;
        const double shrink = 1.0 - eta * options.lambda;
        for (auto& wj : w) wj *= shrink;
        if (margin < 1.0)
          for (const auto& [j, v] : xs[i]) w[j] += eta * y * v;
      }
    }
  }
  return clf;
}

double classifier_accuracy(const BowClassifier& clf, std::span<const Document> docs,
                           std::span<const std::size_t> labels) {
  if (docs.empty()) throw ContractError("classifier_accuracy: no documents");
  if (docs.size() != labels.size())
    throw DimensionError("classifier_accuracy: " + std::to_string(docs.size()) + " documents vs " +
                         std::to_string(labels.size()) + " labels");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < docs.size(); ++i) hits += clf.predict(docs[i]) == labels[i];
  return static_cast<double>(hits) / static_cast<double>(docs.size());
}

LabelAccuracy classifier_accuracy(const ReasonClassifiers& clf, std::span<const Document> docs,
                                  std::span<const std::size_t> broad, std::span<const std::size_t> specific) {
  return {classifier_accuracy(clf.broad, docs, broad), classifier_accuracy(clf.specific, docs, specific)};
}

}  // namespace xgen
