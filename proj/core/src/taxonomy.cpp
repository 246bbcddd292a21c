#include "xgen/taxonomy.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "xgen/error.hpp"

namespace xgen {

ReasonTaxonomy::ReasonTaxonomy(const std::vector<std::pair<std::string, std::vector<std::string>>>& groups) {
  std::set<std::string> seen_broad, seen_specific;
  for (const auto& [broad, specifics] : groups) {
    if (broad.empty()) throw ConfigError("taxonomy: empty broad reason name");
    if (!seen_broad.insert(broad).second) throw ConfigError("taxonomy: duplicate broad reason '" + broad + "'");
    if (specifics.empty()) throw ConfigError("taxonomy: broad reason '" + broad + "' has no specific reasons");
    const std::size_t b = broad_.size();
    broad_.push_back(broad);
    for (const auto& s : specifics) {
      if (!seen_specific.insert(s).second) throw ConfigError("taxonomy: duplicate specific reason '" + s + "'");
      specific_.push_back(s);
      parent_.push_back(b);
    }
  }
  if (specific_.size() >= kMaxCombinations)
    throw ConfigError("taxonomy: " + std::to_string(specific_.size()) + " reason combinations, limit is " +
                      std::to_string(kMaxCombinations - 1));
}

ReasonTaxonomy ReasonTaxonomy::lending_default() {
  return ReasonTaxonomy({
      {"credit",
       {"low credit score", "poor credit history", "limited credit history", "no credit history",
        "too many credit inquiries"}},
      {"job", {"no job", "unstable job", "limited job history", "no job history", "unstable job history"}},
      {"debt", {"outstanding loan payments", "inconsistent loan payments", "high debt", "too many open accounts"}},
      {"income", {"low income", "unverifiable income", "amount exceeds income"}},
      {"background", {"failed background check"}},
      {"application", {"incomplete application", "inconsistent information"}},
      {"collateral", {"insufficient collateral"}},
      {"residence", {"unstable residence"}},
  });
}

const std::string& ReasonTaxonomy::broad_name(std::size_t id) const {
  if (id >= broad_.size()) throw TaxonomyError("taxonomy: broad id " + std::to_string(id) + " out of range");
  return broad_[id];
}

const std::string& ReasonTaxonomy::specific_name(std::size_t id) const {
  if (id >= specific_.size()) throw TaxonomyError("taxonomy: specific id " + std::to_string(id) + " out of range");
  return specific_[id];
}

namespace {
std::string join(const std::vector<std::string>& names) {
  std::string out;
  for (const auto& n : names) {
    if (!out.empty()) out += ", ";
    out += "'" + n + "'";
  }
  return out;
}
}  // namespace

std::size_t ReasonTaxonomy::broad_id(std::string_view name) const {
  auto it = std::find(broad_.begin(), broad_.end(), name);
  if (it == broad_.end())
    throw TaxonomyError("unknown broad reason '" + std::string(name) + "'; valid: " + join(broad_));
  return static_cast<std::size_t>(it - broad_.begin());
}

std::size_t ReasonTaxonomy::specific_id(std::string_view name) const {
  auto it = std::find(specific_.begin(), specific_.end(), name);
  if (it == specific_.end())
    throw TaxonomyError("unknown specific reason '" + std::string(name) + "'; valid: " + join(specific_));
  return static_cast<std::size_t>(it - specific_.begin());
}

bool ReasonTaxonomy::has_broad(std::string_view name) const {
  return std::find(broad_.begin(), broad_.end(), name) != broad_.end();
}

bool ReasonTaxonomy::has_specific(std::string_view name) const {
  return std::find(specific_.begin(), specific_.end(), name) != specific_.end();
}

std::size_t ReasonTaxonomy::parent(std::size_t specific) const {
  if (specific >= parent_.size())
    throw TaxonomyError("taxonomy: specific id " + std::to_string(specific) + " out of range");
  return parent_[specific];
}

std::vector<std::size_t> ReasonTaxonomy::specifics_of(std::size_t broad) const {
  std::vector<std::size_t> out;
  for (std::size_t s = 0; s < parent_.size(); ++s)
    if (parent_[s] == broad) out.push_back(s);
  return out;
}

void ReasonTaxonomy::check_pair(std::size_t broad, std::size_t specific) const {
  if (parent(specific) != broad)
    throw TaxonomyError("specific reason '" + specific_name(specific) + "' does not belong to broad reason '" +
                        broad_name(broad) + "'");
}

void ReasonTaxonomy::require_core_reasons() const {
  for (const char* name : {"credit", "job", "income", "debt"})
    if (!has_broad(name)) throw ConfigError(std::string("taxonomy: required broad reason '") + name + "' missing");
}

nlohmann::ordered_json ReasonTaxonomy::to_json() const {
  nlohmann::ordered_json reasons = nlohmann::ordered_json::object();
  for (std::size_t b = 0; b < broad_.size(); ++b) {
    auto arr = nlohmann::ordered_json::array();
    for (auto s : specifics_of(b)) arr.push_back(specific_[s]);
    reasons[broad_[b]] = arr;
  }
  return {{"format_version", kFormatVersion}, {"reasons", reasons}};
}

ReasonTaxonomy ReasonTaxonomy::from_json(const nlohmann::ordered_json& j) {
  if (!j.is_object() || !j.contains("format_version") || !j.contains("reasons"))
    throw ParseError("taxonomy: expected object with 'format_version' and 'reasons'");
  if (j.at("format_version").get<int>() != kFormatVersion)
    throw IntegrityError("taxonomy: unsupported format_version " + j.at("format_version").dump());
  std::vector<std::pair<std::string, std::vector<std::string>>> groups;
  for (const auto& [broad, specifics] : j.at("reasons").items())
    groups.emplace_back(broad, specifics.get<std::vector<std::string>>());
  return ReasonTaxonomy(groups);
}

void save_taxonomy(const std::filesystem::path& path, const ReasonTaxonomy& taxonomy) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write taxonomy file " + path.string());
  out << taxonomy.to_json().dump(2) << '\n';
}

ReasonTaxonomy load_taxonomy(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read taxonomy file " + path.string());
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("taxonomy " + path.string() + ": " + e.what());
  }
  return ReasonTaxonomy::from_json(j);
}

}  // namespace xgen
