#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "xgen/rng.hpp"
#include "xgen/taxonomy.hpp"

namespace xgen {

enum class Style { Education, Action };

std::string_view style_name(Style style);
Style parse_style(std::string_view name);
inline Style other_style(Style s) { return s == Style::Education ? Style::Action : Style::Education; }

/// One explanation sentence with its reason labels.
///
/// Tokens are kept as text; ids are assigned by a Vocabulary built from the
/// training split (see vocab.hpp).
struct SentenceRecord {
  std::vector<std::string> tokens;
  std::size_t broad = 0;
  std::size_t specific = 0;
  Style style = Style::Education;
  std::optional<std::uint64_t> pair_id;

  bool operator==(const SentenceRecord&) const = default;
};

/// Lowercases and splits on whitespace and punctuation. Apostrophes and
/// hyphens inside words are kept ("applicant's", "re-consider").
std::vector<std::string> tokenize(std::string_view text);
std::string join_tokens(std::span<const std::string> tokens);

/// Phrase inventory for one specific reason.
struct ReasonPhrases {
  std::vector<std::string> education;  // declarative clauses
  std::vector<std::string> action;     // imperative clauses
};

/// Sentence frames and per-reason clauses used by the synthetic generator.
///
/// Frames contain a `{clause}` slot plus optional synonym slots
/// `{denied}` and `{application}`.
struct TemplateInventory {
  std::vector<std::string> education_frames;
  std::vector<std::string> action_frames;
  std::map<std::string, std::vector<std::string>> synonyms;
  std::map<std::string, ReasonPhrases> phrases;  // keyed by specific reason name

  static TemplateInventory lending_default();
};

struct CorpusSpec {
  std::size_t count = 2432;  // education/action pairs
  std::size_t maxlen = 23;   // including BOS and EOS
  std::uint64_t seed = 7;
  ReasonTaxonomy taxonomy = ReasonTaxonomy::lending_default();
  TemplateInventory templates = TemplateInventory::lending_default();
  /// Ratio of the geometric frequency profile over broad reasons, heaviest first.
  double broad_decay = 0.6;

  void validate() const;
};

/// Geometric broad-reason weights (normalized), in taxonomy order.
std::vector<double> broad_frequency_profile(const CorpusSpec& spec);

/// Deterministic paired corpus: for each pair an education record followed by
/// its action partner, sharing labels and pair_id.
std::vector<SentenceRecord> generate_synthetic_corpus(const CorpusSpec& spec, Rng& rng);

inline constexpr int kCorpusFormatVersion = 1;

/// One JSON object per line: format_version, tokens, broad, specific, style, pair_id.
void save_corpus(const std::filesystem::path& path, std::span<const SentenceRecord> records,
                 const ReasonTaxonomy& taxonomy);
std::vector<SentenceRecord> load_corpus(const std::filesystem::path& path, const ReasonTaxonomy& taxonomy);

nlohmann::json record_to_json(const SentenceRecord& r, const ReasonTaxonomy& taxonomy);
/// Throws ParseError naming `line` and the offending field.
SentenceRecord record_from_json(const nlohmann::json& j, const ReasonTaxonomy& taxonomy, std::size_t line);

// ---------------------------------------------------------------------------
// Evaluation splits

/// Record indices (into the corpus) of each split.
///
/// Test sets hold the education record of each held-out pair; `heldout`
/// holds every record of every held-out pair. Train holds all records of the
/// remaining pairs. The three test sets are mutually disjoint.
struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> all_content;
  std::vector<std::size_t> limited_reasons;
  std::vector<std::size_t> credit_only;
  std::vector<std::size_t> heldout;

  nlohmann::json to_json() const;
  static SplitIndices from_json(const nlohmann::json& j);
};

struct SplitSizes {
  std::size_t all_content = 100;
  std::size_t limited_reasons = 100;
  std::size_t credit_only = 100;
};

struct Splits {
  std::vector<SentenceRecord> train;
  std::vector<SentenceRecord> all_content_test;
  std::vector<SentenceRecord> limited_reasons_test;
  std::vector<SentenceRecord> credit_only_test;
  std::vector<SentenceRecord> heldout;
};

/// Broad reasons forming the limited-reasons protocol.
inline constexpr std::array<std::string_view, 4> kLimitedReasons{"credit", "job", "debt", "income"};

SplitIndices split_protocols(std::span<const SentenceRecord> corpus, const ReasonTaxonomy& taxonomy, Rng& rng,
                             const SplitSizes& sizes = {});
Splits materialize(std::span<const SentenceRecord> corpus, const SplitIndices& idx);

std::vector<SentenceRecord> filter_style(std::span<const SentenceRecord> records, Style style);

/// The partner record (same pair_id, other style) of `record` within `pool`.
const SentenceRecord* find_partner(std::span<const SentenceRecord> pool, const SentenceRecord& record);

}  // namespace xgen
