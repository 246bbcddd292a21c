#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "xgen/corpus.hpp"
#include "xgen/ngram.hpp"
#include "xgen/rng.hpp"
#include "xgen/training.hpp"
#include "xgen/vocab.hpp"

namespace xgen {

using Document = std::vector<std::string>;

enum class BowKind { NaiveBayes, LinearSvm };

struct SvmOptions {
  double lambda = 1e-4;
  std::size_t epochs = 20;
  std::uint64_t seed = 1;
  /// Multiplies every feature, the bias feature included.
  double feature_scale = 1.0;
};

/// Bag-of-words text classifier.
///
/// Features are the words of the training documents; unseen words are
/// ignored at prediction time. Naive Bayes uses raw counts. The SVM uses
/// term frequencies (count / document length) plus a constant bias feature.
class BowClassifier {
 public:
  BowKind kind() const { return kind_; }
  std::size_t class_count() const { return class_count_; }
  const std::vector<std::string>& features() const { return features_; }

  /// One score per class; the prediction is the argmax (lowest id on ties).
  std::vector<double> scores(std::span<const std::string> doc) const;
  std::size_t predict(std::span<const std::string> doc) const;

  friend BowClassifier train_nb(std::span<const Document> docs, std::span<const std::size_t> labels,
                                std::size_t class_count, double alpha);
  friend BowClassifier train_svm(std::span<const Document> docs, std::span<const std::size_t> labels,
                                 std::size_t class_count, const SvmOptions& options);

 private:
  std::vector<std::pair<std::size_t, double>> featurize(std::span<const std::string> doc) const;

  BowKind kind_ = BowKind::NaiveBayes;
  std::size_t class_count_ = 0;
  std::vector<std::string> features_;
  std::map<std::string, std::size_t, std::less<>> index_;
  std::vector<bool> present_;              // classes seen in training
  std::vector<double> log_prior_;          // NB
  std::vector<std::vector<double>> table_; // NB: log p(w|c); SVM: weights with bias last
  double feature_scale_ = 1.0;
};

/// Multinomial Naive Bayes with additive smoothing. Needs two or more
/// distinct labels (ContractError otherwise).
BowClassifier train_nb(std::span<const Document> docs, std::span<const std::size_t> labels, std::size_t class_count,
                       double alpha = 1.0);
/// One-vs-rest linear SVM trained by Pegasos subgradient steps on the L2
/// regularized hinge loss, step size 1 / (lambda * t).
BowClassifier train_svm(std::span<const Document> docs, std::span<const std::size_t> labels, std::size_t class_count,
                        const SvmOptions& options = {});

/// Fraction of documents predicted as their label. Throws ContractError on
/// empty input.
double classifier_accuracy(const BowClassifier& clf, std::span<const Document> docs,
                           std::span<const std::size_t> labels);

struct ReasonClassifiers {
  BowClassifier broad;
  BowClassifier specific;
};

struct LabelAccuracy {
  double broad = 0.0;
  double specific = 0.0;
};

LabelAccuracy classifier_accuracy(const ReasonClassifiers& clf, std::span<const Document> docs,
                                  std::span<const std::size_t> broad, std::span<const std::size_t> specific);

/// Corpus-level BLEU-4 with brevity penalty.
///
/// For each order n the clipped match count m_n and candidate n-gram count
/// t_n are summed over the corpus. Orders with t_n = 0 are left out of the
/// geometric mean; orders with m_n = 0 use p_n = epsilon / t_n with
/// epsilon = 0.1. BP = exp(1 - r/c) when c < r. An empty candidate corpus
/// scores 0 with a warning.
double bleu(std::span<const Document> candidates, std::span<const Document> references);
double bleu(std::span<const std::string> candidate, std::span<const std::string> reference);

inline constexpr double kBleuEpsilon = 0.1;

// ---------------------------------------------------------------------------
// Protocols

inline constexpr std::array<std::string_view, 4> kProtocols{"all_content", "limited_reasons", "credit_only",
                                                            "style_transfer"};

struct EvalReport {
  std::string protocol;
  std::string variant;
  std::optional<double> ppl;
  std::optional<double> nb_broad;
  std::optional<double> nb_specific;
  std::optional<double> svm_broad;
  std::optional<double> svm_specific;
  std::optional<double> bleu;
  std::optional<double> style_accuracy;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  std::string fingerprint;
  bool skipped = false;
  std::string note;
  nlohmann::json extra = nlohmann::json::object();

  /// Accuracies and BLEU in [0, 1], PPL >= 1. Throws ContractError.
  void check() const;
  nlohmann::json to_json() const;
  static EvalReport from_json(const nlohmann::json& j);
};

struct EvalSettings {
  std::size_t lm_order = 3;
  double lm_alpha = 0.1;
  double nb_alpha = 1.0;
  SvmOptions svm;
  std::uint64_t seed = 5;  // generation noise

  nlohmann::json to_json() const;
  static EvalSettings from_json(const nlohmann::json& j, const EvalSettings& base);
  static EvalSettings from_json(const nlohmann::json& j);
};

/// Language model and classifiers fitted on the training split only.
///
/// The LM and reason classifiers see education sentences (the conditional
/// generation target); the style classifier sees every training sentence.
struct EvalResources {
  Vocabulary vocab;
  NgramLm lm{3, 0.1, 1};
  ReasonClassifiers nb;
  ReasonClassifiers svm;
  BowClassifier style;

  static EvalResources fit(std::span<const SentenceRecord> train, const ReasonTaxonomy& taxonomy,
                           const EvalSettings& settings);
};

/// Text-level metrics of one sentence set against its conditioned labels.
EvalReport score_sentences(const std::string& protocol, const std::string& variant, std::span<const Document> docs,
                           std::span<const std::size_t> broad, std::span<const std::size_t> specific,
                           const EvalResources& res);

/// Real test sentences scored against their own labels (the reference bar).
std::vector<EvalReport> reference_reports(const Splits& splits, const EvalResources& res);

/// Conditional protocols for conditional models, the style-transfer report
/// for style models; the rest are emitted as skipped.
std::vector<EvalReport> run_protocols(const AraeModel& model, const Vocabulary& vocab, const std::string& variant,
                                      const std::string& fingerprint, const Splits& splits,
                                      const EvalResources& res, Rng& rng);

std::vector<Document> ids_to_documents(std::span<const std::vector<std::size_t>> ids, const Vocabulary& vocab);

/// Transfers every held-out record with a partner into the other style.
struct TransferResult {
  std::vector<Document> edu2act, act2edu;
  std::vector<Document> edu2act_refs, act2edu_refs;
  std::vector<SentenceRecord> edu_sources, act_sources;
};
TransferResult transfer_heldout(const AraeModel& model, const Vocabulary& vocab, std::span<const SentenceRecord> heldout);

void write_reports_jsonl(const std::filesystem::path& path, std::span<const EvalReport> reports);
std::vector<EvalReport> read_reports_jsonl(const std::filesystem::path& path);
/// Fixed-width table, one row per (variant, protocol).
std::string render_summary(std::span<const EvalReport> reports);

}  // namespace xgen
