#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace xgen {

/// Two-level loan-denial reason hierarchy.
///
/// Broad reasons and specific reasons each get dense ids in declaration
/// order; every specific reason has exactly one broad parent. Specific
/// names are globally unique, so one specific id identifies a
/// (broad, specific) combination.
class ReasonTaxonomy {
 public:
  static constexpr int kFormatVersion = 1;
  static constexpr std::size_t kMaxCombinations = 100;

  ReasonTaxonomy() = default;
  /// Ordered (broad, [specifics...]) groups. Throws ConfigError on duplicates,
  /// empty groups, or >= 100 combinations.
  explicit ReasonTaxonomy(const std::vector<std::pair<std::string, std::vector<std::string>>>& groups);

  /// The built-in lending taxonomy used by the synthetic corpus.
  static ReasonTaxonomy lending_default();

  std::size_t broad_count() const { return broad_.size(); }
  std::size_t specific_count() const { return specific_.size(); }
  std::size_t combination_count() const { return specific_.size(); }

  const std::string& broad_name(std::size_t id) const;
  const std::string& specific_name(std::size_t id) const;
  std::size_t broad_id(std::string_view name) const;
  std::size_t specific_id(std::string_view name) const;
  bool has_broad(std::string_view name) const;
  bool has_specific(std::string_view name) const;
  std::size_t parent(std::size_t specific) const;
  std::vector<std::size_t> specifics_of(std::size_t broad) const;

  /// Throws TaxonomyError unless parent(specific) == broad.
  void check_pair(std::size_t broad, std::size_t specific) const;

  /// Broad set must contain credit, job, income and debt.
  void require_core_reasons() const;

  const std::vector<std::string>& broad_names() const { return broad_; }
  const std::vector<std::string>& specific_names() const { return specific_; }

  nlohmann::ordered_json to_json() const;
  static ReasonTaxonomy from_json(const nlohmann::ordered_json& j);

  bool operator==(const ReasonTaxonomy&) const = default;

 private:
  std::vector<std::string> broad_;
  std::vector<std::string> specific_;
  std::vector<std::size_t> parent_;
};

void save_taxonomy(const std::filesystem::path& path, const ReasonTaxonomy& taxonomy);
ReasonTaxonomy load_taxonomy(const std::filesystem::path& path);

}  // namespace xgen
