#include "xgen/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include <spdlog/spdlog.h>

#include "xgen/error.hpp"

namespace xgen {

std::string_view style_name(Style style) { return style == Style::Education ? "education" : "action"; }

Style parse_style(std::string_view name) {
  if (name == "education") return Style::Education;
  if (name == "action") return Style::Action;
  throw ParseError("unknown style '" + std::string(name) + "' (expected education or action)");
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    // Strip joiners left dangling at word edges.
    while (!cur.empty() && (cur.back() == '\'' || cur.back() == '-')) cur.pop_back();
    std::size_t start = 0;
    while (start < cur.size() && (cur[start] == '\'' || cur[start] == '-')) ++start;
    if (start < cur.size()) out.push_back(cur.substr(start));
    cur.clear();
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c) || ch == '\'' || ch == '-' || c >= 0x80) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else {
      flush();
    }
  }
  flush();
  return out;
}

std::string join_tokens(std::span<const std::string> tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

TemplateInventory TemplateInventory::lending_default() {
  TemplateInventory t;
  t.education_frames = {
      "{clause}",
      "the loan is {denied} because {clause}",
      "because {clause} the loan {application} was {denied}",
      "the record of finances associated with this application suggests that {clause}",
      "this {application} was {denied} since {clause}",
  };
  t.action_frames = {
      "{clause}",
      "please {clause}",
      "please {clause} before applying for a new loan",
      "{clause} to improve your chances of approval",
      "we recommend that you {clause}",
      "before you apply again {clause}",
  };
  t.synonyms = {
      {"denied", {"denied", "rejected", "declined"}},
      {"application", {"application", "request"}},
  };
  auto& p = t.phrases;
  p["low credit score"] = {{"the applicant's credit score is low", "the applicant has a low credit score",
                            "the credit score on file is too low"},
                           {"work on raising your credit score",
                            "talk to your bank about finding ways to improve your credit",
                            "pay bills on time to build a higher credit score"}};
  p["poor credit history"] = {{"the applicant has a poor credit history",
                               "the credit history of the applicant shows missed payments"},
                              {"repair your credit history by paying every bill on time",
                               "review your credit report and correct any errors"}};
  p["limited credit history"] = {{"the applicant has a short credit history",
                                  "there is not enough credit history to assess the applicant"},
                                 {"build a longer credit history with a secured card",
                                  "keep a small credit account open for a longer time"}};
  p["no credit history"] = {{"the applicant has no credit history", "no record of past credit could be found"},
                            {"open a first credit account to start a credit history",
                             "ask about a starter card to begin building credit"}};
  p["too many credit inquiries"] = {{"there are too many recent credit inquiries",
                                     "the applicant applied for credit too many times recently"},
                                    {"wait a few months before applying for more credit",
                                     "limit new credit applications for some time"}};
  p["no job"] = {{"the applicant does not currently have a job", "the applicant is unemployed at this time"},
                 {"secure a steady job before you apply again", "find stable employment and then reapply"}};
  p["unstable job"] = {{"the applicant's job is not stable", "the applicant's current position appears unstable"},
                       {"look for a more stable position", "provide proof of a secure position"}};
  p["limited job history"] = {
      {"the applicant has only been employed at their current employer for a limited period of time",
       "the applicant has worked at the current job for a short time"},
      {"stay with your current employer for a longer period", "build a longer record at your current job"}};
  p["no job history"] = {{"the applicant has no employment history", "there is no record of previous employment"},
                         {"gain some work experience before applying", "provide references from any past work"}};
  p["unstable job history"] = {{"the applicant has changed jobs frequently",
                                "the employment history shows many short jobs"},
                               {"keep one job for a longer time", "show a steadier record of employment"}};
  p["outstanding loan payments"] = {{"there is a record of outstanding loan payments",
                                     "the applicant has unpaid loan balances"},
                                    {"complete all remaining loan payments", "pay off your outstanding loans first"}};
  p["inconsistent loan payments"] = {{"there is a record of inconsistent loan payments",
                                      "past loan payments were made irregularly"},
                                     {"maintain a consistent record of timely loan payments moving forward",
                                      "make every loan payment on schedule"}};
  p["high debt"] = {{"the applicant's debt is too high", "the applicant carries a large amount of debt"},
                    {"reduce your existing debt", "pay down your balances to lower your debt"}};
  p["too many open accounts"] = {{"the applicant has too many open accounts",
                                  "there are many active accounts in the applicant's name"},
                                 {"close some of your unused accounts", "consolidate your open accounts"}};
  p["low income"] = {{"the applicant's income is too low",
                      "the income associated with this application is, unfortunately, not high enough to be "
                      "considered eligible for this loan"},
                     {"increase your income before applying again", "add a second source of income"}};
  p["unverifiable income"] = {{"the applicant's income could not be verified",
                               "the reported income lacks supporting documents"},
                              {"submit pay stubs to verify your income",
                               "provide tax records that confirm your income"}};
  p["amount exceeds income"] = {
      {"the income listed on this application is not high enough to match the amount requested for a loan",
       "the requested amount is too large for the applicant's income"},
      {"re-consider applying for a loan of a different amount that may better align with your income",
       "request a smaller amount that fits your income"}};
  p["failed background check"] = {{"the applicant did not pass the background check",
                                   "the background check returned a negative result"},
                                  {"resolve any issues on your background record",
                                   "contact us to review your background check"}};
  p["incomplete application"] = {{"the application is missing required information",
                                  "some required fields in the application were left blank"},
                                 {"complete every section of the application",
                                  "fill in all missing fields on the form"}};
  p["inconsistent information"] = {{"the information in the application is inconsistent",
                                    "details on the application do not match our records"},
                                   {"correct the details on your application",
                                    "make sure your information matches your documents"}};
  p["insufficient collateral"] = {{"the collateral offered is not sufficient", "the value of the collateral is too low"},
                                  {"offer additional collateral for the loan", "add a co-signer or more collateral"}};
  p["unstable residence"] = {{"the applicant has moved residence frequently",
                              "the applicant's address history is unstable"},
                             {"provide proof of a stable address", "stay at your current address for a longer time"}};
  return t;
}

void CorpusSpec::validate() const {
  if (count < 1) throw ConfigError("corpus: count must be at least 1");
  if (maxlen < 20 || maxlen > 30) throw ConfigError("corpus: maxlen " + std::to_string(maxlen) + " outside [20, 30]");
  if (!(broad_decay > 0.0 && broad_decay <= 1.0)) throw ConfigError("corpus: broad_decay must lie in (0, 1]");
  if (templates.education_frames.empty() || templates.action_frames.empty())
    throw ConfigError("corpus: template inventory has no frames");
  for (std::size_t s = 0; s < taxonomy.specific_count(); ++s) {
    const auto& name = taxonomy.specific_name(s);
    auto it = templates.phrases.find(name);
    if (it == templates.phrases.end())
      throw ConfigError("corpus: no templates for reason '" + taxonomy.broad_name(taxonomy.parent(s)) + "/" + name +
                        "'");
    if (it->second.education.empty())
      throw ConfigError("corpus: no education template for reason '" + name + "'");
    if (it->second.action.empty()) throw ConfigError("corpus: no action template for reason '" + name + "'");
  }
}

std::vector<double> broad_frequency_profile(const CorpusSpec& spec) {
  std::vector<double> w(spec.taxonomy.broad_count());
  double x = 1.0;
  for (auto& v : w) {
    v = x;
    x *= spec.broad_decay;
  }
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (auto& v : w) v /= total;
  return w;
}

namespace {

std::size_t draw_weighted(const std::vector<double>& w, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    acc += w[i];
    if (u < acc) return i;
  }
  return w.size() - 1;
}

std::string fill_frame(const std::string& frame, const std::string& clause, const TemplateInventory& t, Rng& rng) {
  std::string out;
  std::size_t pos = 0;
  while (pos < frame.size()) {
    const auto open = frame.find('{', pos);
    if (open == std::string::npos) {
      out.append(frame, pos, std::string::npos);
      break;
    }
    const auto close = frame.find('}', open);
    if (close == std::string::npos) throw ConfigError("corpus: unterminated slot in frame '" + frame + "'");
    out.append(frame, pos, open - pos);
    const std::string slot = frame.substr(open + 1, close - open - 1);
    if (slot == "clause") {
      out += clause;
    } else {
      auto it = t.synonyms.find(slot);
      if (it == t.synonyms.end() || it->second.empty())
        throw ConfigError("corpus: unknown slot '{" + slot + "}' in frame '" + frame + "'");
      out += it->second[rng.uniform_int(it->second.size())];
    }
    pos = close + 1;
  }
  return out;
}

// Picks a clause and a frame whose rendering fits in maxlen - 2 tokens.
std::vector<std::string> compose(const std::vector<std::string>& frames, const std::vector<std::string>& clauses,
                                 const TemplateInventory& t, std::size_t max_tokens, Rng& rng) {
  const std::string& clause = clauses[rng.uniform_int(clauses.size())];
  std::vector<std::size_t> order(frames.size());
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  std::vector<std::string> shortest;
  for (auto f : order) {
    auto toks = tokenize(fill_frame(frames[f], clause, t, rng));
    if (toks.size() <= max_tokens) return toks;
    if (shortest.empty() || toks.size() < shortest.size()) shortest = std::move(toks);
  }
  spdlog::warn("corpus: sentence of {} tokens exceeds {} and is truncated", shortest.size(), max_tokens);
  shortest.resize(max_tokens);
  return shortest;
}

}  // namespace

std::vector<SentenceRecord> generate_synthetic_corpus(const CorpusSpec& spec, Rng& rng) {
  spec.validate();
  const auto profile = broad_frequency_profile(spec);
  const std::size_t max_tokens = spec.maxlen - 2;
  std::vector<SentenceRecord> out;
  out.reserve(spec.count * 2);
  for (std::size_t pair = 0; pair < spec.count; ++pair) {
    const std::size_t broad = draw_weighted(profile, rng);
    const auto specifics = spec.taxonomy.specifics_of(broad);
    const std::size_t specific = specifics[rng.uniform_int(specifics.size())];
    const auto& phrases = spec.templates.phrases.at(spec.taxonomy.specific_name(specific));
    SentenceRecord edu{compose(spec.templates.education_frames, phrases.education, spec.templates, max_tokens, rng),
                       broad, specific, Style::Education, pair};
    SentenceRecord act{compose(spec.templates.action_frames, phrases.action, spec.templates, max_tokens, rng), broad,
                       specific, Style::Action, pair};
    out.push_back(std::move(edu));
    out.push_back(std::move(act));
  }
  return out;
}

// ---------------------------------------------------------------------------
// File I/O

nlohmann::json record_to_json(const SentenceRecord& r, const ReasonTaxonomy& taxonomy) {
  nlohmann::json j;
  j["format_version"] = kCorpusFormatVersion;
  j["tokens"] = r.tokens;
  j["broad"] = taxonomy.broad_name(r.broad);
  j["specific"] = taxonomy.specific_name(r.specific);
  j["style"] = style_name(r.style);
  j["pair_id"] = r.pair_id ? nlohmann::json(*r.pair_id) : nlohmann::json(nullptr);
  return j;
}

SentenceRecord record_from_json(const nlohmann::json& j, const ReasonTaxonomy& taxonomy, std::size_t line) {
  const std::string where = "line " + std::to_string(line);
  if (!j.is_object()) throw ParseError(where + ": expected a JSON object");
  for (const char* field : {"format_version", "tokens", "broad", "specific", "style", "pair_id"})
    if (!j.contains(field)) throw ParseError(where + ": missing required field '" + field + "'");
  try {
    if (j.at("format_version").get<int>() != kCorpusFormatVersion)
      throw ParseError(where + ": unsupported format_version " + j.at("format_version").dump());
    SentenceRecord r;
    r.tokens = j.at("tokens").get<std::vector<std::string>>();
    r.broad = taxonomy.broad_id(j.at("broad").get<std::string>());
    r.specific = taxonomy.specific_id(j.at("specific").get<std::string>());
    taxonomy.check_pair(r.broad, r.specific);
    r.style = parse_style(j.at("style").get<std::string>());
    if (!j.at("pair_id").is_null()) r.pair_id = j.at("pair_id").get<std::uint64_t>();
    return r;
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception& e) {
    throw ParseError(where + ": " + e.what());
  }
}

void save_corpus(const std::filesystem::path& path, std::span<const SentenceRecord> records,
                 const ReasonTaxonomy& taxonomy) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write corpus file " + path.string());
  for (const auto& r : records) out << record_to_json(r, taxonomy).dump() << '\n';
}

std::vector<SentenceRecord> load_corpus(const std::filesystem::path& path, const ReasonTaxonomy& taxonomy) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read corpus file " + path.string());
  std::vector<SentenceRecord> out;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("line " + std::to_string(line) + ": " + e.what());
    }
    out.push_back(record_from_json(j, taxonomy, line));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Splits

nlohmann::json SplitIndices::to_json() const {
  return {{"train", train},
          {"all_content", all_content},
          {"limited_reasons", limited_reasons},
          {"credit_only", credit_only},
          {"heldout", heldout}};
}

SplitIndices SplitIndices::from_json(const nlohmann::json& j) {
  SplitIndices s;
  try {
    s.train = j.at("train").get<std::vector<std::size_t>>();
    s.all_content = j.at("all_content").get<std::vector<std::size_t>>();
    s.limited_reasons = j.at("limited_reasons").get<std::vector<std::size_t>>();
    s.credit_only = j.at("credit_only").get<std::vector<std::size_t>>();
    s.heldout = j.at("heldout").get<std::vector<std::size_t>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("split manifest: ") + e.what());
  }
  return s;
}

SplitIndices split_protocols(std::span<const SentenceRecord> corpus, const ReasonTaxonomy& taxonomy, Rng& rng,
                             const SplitSizes& sizes) {
  // Group records into units (pairs, or singletons for unpaired records).
  std::vector<std::vector<std::size_t>> units;
  std::map<std::uint64_t, std::size_t> unit_of_pair;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& r = corpus[i];
    if (r.pair_id) {
      auto [it, inserted] = unit_of_pair.emplace(*r.pair_id, units.size());
      if (inserted) units.emplace_back();
      units[it->second].push_back(i);
    } else {
      units.push_back({i});
    }
  }
  auto primary = [&](const std::vector<std::size_t>& unit) {
    for (auto i : unit)
      if (corpus[i].style == Style::Education) return i;
    return unit.front();
  };

  std::vector<std::size_t> order(units.size());
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);

  std::set<std::size_t> limited_broad;
  for (auto name : kLimitedReasons)
    if (taxonomy.has_broad(name)) limited_broad.insert(taxonomy.broad_id(name));
  const std::size_t credit = taxonomy.broad_id("credit");

  std::vector<bool> used(units.size(), false);
  SplitIndices s;
  auto take = [&](std::vector<std::size_t>& dst, std::size_t n, auto pred, const char* name) {
    for (auto u : order) {
      if (dst.size() == n) break;
      if (used[u] || !pred(corpus[primary(units[u])])) continue;
      used[u] = true;
      dst.push_back(primary(units[u]));
    }
    if (dst.size() < n)
      throw ConfigError(std::string("split: stratum '") + name + "' needs " + std::to_string(n) +
                        " held-out samples, corpus provides " + std::to_string(dst.size()));
  };
  take(s.all_content, sizes.all_content, [](const SentenceRecord&) { return true; }, "all_content");
  take(s.limited_reasons, sizes.limited_reasons,
       [&](const SentenceRecord& r) { return limited_broad.count(r.broad) > 0; }, "limited_reasons");
  take(s.credit_only, sizes.credit_only, [&](const SentenceRecord& r) { return r.broad == credit; }, "credit_only");

  for (std::size_t u = 0; u < units.size(); ++u) {
    auto& dst = used[u] ? s.heldout : s.train;
    dst.insert(dst.end(), units[u].begin(), units[u].end());
  }
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.heldout.begin(), s.heldout.end());
  if (s.train.empty()) throw ConfigError("split: no records left for training");
  return s;
}

Splits materialize(std::span<const SentenceRecord> corpus, const SplitIndices& idx) {
  auto gather = [&](const std::vector<std::size_t>& ids) {
    std::vector<SentenceRecord> out;
    out.reserve(ids.size());
    for (auto i : ids) {
      if (i >= corpus.size()) throw ConfigError("split: record index " + std::to_string(i) + " out of range");
      out.push_back(corpus[i]);
    }
    return out;
  };
  return {gather(idx.train), gather(idx.all_content), gather(idx.limited_reasons), gather(idx.credit_only),
          gather(idx.heldout)};
}

std::vector<SentenceRecord> filter_style(std::span<const SentenceRecord> records, Style style) {
  std::vector<SentenceRecord> out;
  for (const auto& r : records)
    if (r.style == style) out.push_back(r);
  return out;
}

const SentenceRecord* find_partner(std::span<const SentenceRecord> pool, const SentenceRecord& record) {
  if (!record.pair_id) return nullptr;
  for (const auto& r : pool)
    if (r.pair_id == record.pair_id && r.style != record.style) return &r;
  return nullptr;
}

}  // namespace xgen
