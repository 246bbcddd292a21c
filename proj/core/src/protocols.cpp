#include <cstdio>
#include <fstream>
#include <sstream>

#include "xgen/error.hpp"
#include "xgen/eval.hpp"

namespace xgen {

namespace {

std::vector<std::size_t> broad_of(std::span<const SentenceRecord> r) {
  std::vector<std::size_t> out;
  for (const auto& x : r) out.push_back(x.broad);
  return out;
}

std::vector<std::size_t> specific_of(std::span<const SentenceRecord> r) {
  std::vector<std::size_t> out;
  for (const auto& x : r) out.push_back(x.specific);
  return out;
}

std::vector<Document> docs_of(std::span<const SentenceRecord> r) {
  std::vector<Document> out;
  for (const auto& x : r) out.push_back(x.tokens);
  return out;
}

const std::vector<SentenceRecord>& protocol_set(const Splits& s, std::string_view protocol) {
  if (protocol == "all_content") return s.all_content_test;
  if (protocol == "limited_reasons") return s.limited_reasons_test;
  if (protocol == "credit_only") return s.credit_only_test;
  throw ContractError("no test set for protocol " + std::string(protocol));
}

nlohmann::json opt(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

std::optional<double> opt_from(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

EvalReport skipped_report(std::string_view protocol, const std::string& variant, const std::string& fingerprint,
                          std::uint64_t seed, std::string note) {
  EvalReport r;
  r.protocol = protocol;
  r.variant = variant;
  r.fingerprint = fingerprint;
  r.seed = seed;
  r.skipped = true;
  r.note = std::move(note);
  return r;
}

std::vector<std::vector<std::size_t>> transfer_in_batches(const AraeModel& model, const Vocabulary& vocab,
                                                          std::span<const SentenceRecord> sources, Style target) {
  std::vector<std::vector<std::size_t>> out;
  constexpr std::size_t kChunk = 128;
  for (std::size_t b = 0; b < sources.size(); b += kChunk) {
    const auto chunk = sources.subspan(b, std::min(kChunk, sources.size() - b));
    auto ids = model.transfer(make_batch(chunk, vocab, model.config.maxlen).tokens, target);
    out.insert(out.end(), ids.begin(), ids.end());
  }
  return out;
}

}  // namespace

void EvalReport::check() const {
  auto unit = [&](const std::optional<double>& v, const char* name) {
    if (v && !(*v >= 0.0 && *v <= 1.0))
      throw ContractError("report " + protocol + "/" + variant + ": " + name + " outside [0, 1]");
  };
  unit(nb_broad, "nb_broad");
  unit(nb_specific, "nb_specific");
  unit(svm_broad, "svm_broad");
  unit(svm_specific, "svm_specific");
  unit(bleu, "bleu");
  unit(style_accuracy, "style_accuracy");
  if (ppl && !(*ppl >= 1.0)) throw ContractError("report " + protocol + "/" + variant + ": ppl below 1");
}

nlohmann::json EvalReport::to_json() const {
  return {{"protocol", protocol},         {"variant", variant},   {"ppl", opt(ppl)},
          {"nb_broad", opt(nb_broad)},    {"nb_specific", opt(nb_specific)},
          {"svm_broad", opt(svm_broad)},  {"svm_specific", opt(svm_specific)},
          {"bleu", opt(bleu)},            {"style_accuracy", opt(style_accuracy)},
          {"samples", samples},           {"seed", seed},         {"fingerprint", fingerprint},
          {"skipped", skipped},           {"note", note},         {"extra", extra}};
}

EvalReport EvalReport::from_json(const nlohmann::json& j) {
  EvalReport r;
  try {
    r.protocol = j.at("protocol").get<std::string>();
    r.variant = j.at("variant").get<std::string>();
    r.ppl = opt_from(j, "ppl");
    r.nb_broad = opt_from(j, "nb_broad");
    r.nb_specific = opt_from(j, "nb_specific");
    r.svm_broad = opt_from(j, "svm_broad");
    r.svm_specific = opt_from(j, "svm_specific");
    r.bleu = opt_from(j, "bleu");
    r.style_accuracy = opt_from(j, "style_accuracy");
    r.samples = j.at("samples").get<std::size_t>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.fingerprint = j.at("fingerprint").get<std::string>();
    r.skipped = j.at("skipped").get<bool>();
    r.note = j.value("note", "");
    r.extra = j.value("extra", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("eval report: ") + e.what());
  }
  return r;
}

nlohmann::json EvalSettings::to_json() const {
  return {{"lm_order", lm_order},     {"lm_alpha", lm_alpha},     {"nb_alpha", nb_alpha},
          {"svm_lambda", svm.lambda}, {"svm_epochs", svm.epochs}, {"svm_seed", svm.seed},
          {"seed", seed}};
}

EvalSettings EvalSettings::from_json(const nlohmann::json& j, const EvalSettings& base) {
  if (!j.is_object()) throw ConfigError("eval settings: expected a JSON object");
  nlohmann::json merged = base.to_json();
  for (const auto& [k, v] : j.items()) {
    if (!merged.contains(k)) throw ConfigError("eval settings: unknown key '" + k + "'");
    merged[k] = v;
  }
  EvalSettings s;
  try {
    s.lm_order = merged.at("lm_order").get<std::size_t>();
    s.lm_alpha = merged.at("lm_alpha").get<double>();
    s.nb_alpha = merged.at("nb_alpha").get<double>();
    s.svm.lambda = merged.at("svm_lambda").get<double>();
    s.svm.epochs = merged.at("svm_epochs").get<std::size_t>();
    s.svm.seed = merged.at("svm_seed").get<std::uint64_t>();
    s.seed = merged.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("eval settings: ") + e.what());
  }
  if (s.lm_order < 1 || s.lm_order > 3) throw ConfigError("eval settings: lm_order must be 1, 2 or 3");
  if (!(s.lm_alpha > 0) || !(s.nb_alpha > 0) || !(s.svm.lambda > 0) || s.svm.epochs == 0)
    throw ConfigError("eval settings: smoothing, lambda and epochs must be positive");
  return s;
}

EvalSettings EvalSettings::from_json(const nlohmann::json& j) { return from_json(j, EvalSettings{}); }

EvalResources EvalResources::fit(std::span<const SentenceRecord> train, const ReasonTaxonomy& taxonomy,
                                 const EvalSettings& settings) {
  if (train.empty()) throw ConfigError("eval: empty training split");
  const auto edu = filter_style(train, Style::Education);
  if (edu.empty()) throw ConfigError("eval: training split has no education sentences");
  EvalResources r;
  r.vocab = Vocabulary::build(train);
  const auto docs = docs_of(edu);
  r.lm = NgramLm::train(docs, r.vocab, settings.lm_order, settings.lm_alpha);
  const auto broad = broad_of(edu);
  const auto specific = specific_of(edu);
  r.nb = {train_nb(docs, broad, taxonomy.broad_count(), settings.nb_alpha),
          train_nb(docs, specific, taxonomy.specific_count(), settings.nb_alpha)};
  r.svm = {train_svm(docs, broad, taxonomy.broad_count(), settings.svm),
           train_svm(docs, specific, taxonomy.specific_count(), settings.svm)};
  std::vector<std::size_t> styles;
  for (const auto& x : train) styles.push_back(x.style == Style::Education ? 0 : 1);
  r.style = train_nb(docs_of(train), styles, 2, settings.nb_alpha);
  return r;
}

EvalReport score_sentences(const std::string& protocol, const std::string& variant, std::span<const Document> docs,
                           std::span<const std::size_t> broad, std::span<const std::size_t> specific,
                           const EvalResources& res) {
  EvalReport r;
  r.protocol = protocol;
  r.variant = variant;
  r.samples = docs.size();
  r.ppl = res.lm.perplexity(docs, res.vocab);
  const auto nb = classifier_accuracy(res.nb, docs, broad, specific);
  const auto svm = classifier_accuracy(res.svm, docs, broad, specific);
  r.nb_broad = nb.broad;
  r.nb_specific = nb.specific;
  r.svm_broad = svm.broad;
  r.svm_specific = svm.specific;
  return r;
}

std::vector<EvalReport> reference_reports(const Splits& splits, const EvalResources& res) {
  std::vector<EvalReport> out;
  for (auto protocol : {"all_content", "limited_reasons", "credit_only"}) {
    const auto& set = protocol_set(splits, protocol);
    if (set.empty()) {
      out.push_back(skipped_report(protocol, "real-data", "", 0, "empty test set"));
      continue;
    }
    out.push_back(score_sentences(protocol, "real-data", docs_of(set), broad_of(set), specific_of(set), res));
  }
  if (splits.heldout.empty()) {
    out.push_back(skipped_report("style_transfer", "real-data", "", 0, "no held-out pairs"));
  } else {
    std::vector<std::size_t> styles;
    for (const auto& x : splits.heldout) styles.push_back(x.style == Style::Education ? 0 : 1);
    EvalReport r;
    r.protocol = "style_transfer";
    r.variant = "real-data";
    r.samples = splits.heldout.size();
    r.style_accuracy = classifier_accuracy(res.style, docs_of(splits.heldout), styles);
    r.bleu = 1.0;
    out.push_back(r);
  }
  return out;
}

std::vector<Document> ids_to_documents(std::span<const std::vector<std::size_t>> ids, const Vocabulary& vocab) {
  std::vector<Document> out;
  out.reserve(ids.size());
  for (const auto& row : ids) {
    Document d;
    for (auto id : row) d.push_back(vocab.token(id));
    out.push_back(std::move(d));
  }
  return out;
}

TransferResult transfer_heldout(const AraeModel& model, const Vocabulary& vocab,
                                std::span<const SentenceRecord> heldout) {
  TransferResult t;
  std::vector<SentenceRecord> edu_refs, act_refs;
  for (const auto& r : heldout) {
    const SentenceRecord* p = find_partner(heldout, r);
    if (!p) continue;
    if (r.style == Style::Education) {
      t.edu_sources.push_back(r);
      t.edu2act_refs.push_back(p->tokens);
    } else {
      t.act_sources.push_back(r);
      t.act2edu_refs.push_back(p->tokens);
    }
  }
  if (!t.edu_sources.empty())
    t.edu2act = ids_to_documents(transfer_in_batches(model, vocab, t.edu_sources, Style::Action), vocab);
  if (!t.act_sources.empty())
    t.act2edu = ids_to_documents(transfer_in_batches(model, vocab, t.act_sources, Style::Education), vocab);
  return t;
}

std::vector<EvalReport> run_protocols(const AraeModel& model, const Vocabulary& vocab, const std::string& variant,
                                      const std::string& fingerprint, const Splits& splits,
                                      const EvalResources& res, Rng& rng) {
  std::vector<EvalReport> out;
  const bool conditional = model.config.mode == TrainMode::Conditional;
  const std::uint64_t seed = model.config.seed;
  for (auto protocol : {"all_content", "limited_reasons", "credit_only"}) {
    if (!conditional) {
      out.push_back(skipped_report(protocol, variant, fingerprint, seed, "style transfer model"));
      continue;
    }
    const auto& set = protocol_set(splits, protocol);
    if (set.empty()) {
      out.push_back(skipped_report(protocol, variant, fingerprint, seed, "empty test set"));
      continue;
    }
    const auto broad = broad_of(set);
    const auto specific = specific_of(set);
    const auto docs = ids_to_documents(model.generate(rng, broad, specific), vocab);
    EvalReport r = score_sentences(protocol, variant, docs, broad, specific, res);
    r.fingerprint = fingerprint;
    r.seed = seed;
    r.check();
    out.push_back(std::move(r));
  }
  if (conditional) {
    out.push_back(skipped_report("style_transfer", variant, fingerprint, seed, "conditional model"));
    return out;
  }
  const auto t = transfer_heldout(model, vocab, splits.heldout);
  if (t.edu2act.empty() && t.act2edu.empty()) {
    out.push_back(skipped_report("style_transfer", variant, fingerprint, seed, "no held-out pairs"));
    return out;
  }
  std::vector<Document> cands = t.edu2act, refs = t.edu2act_refs;
  cands.insert(cands.end(), t.act2edu.begin(), t.act2edu.end());
  refs.insert(refs.end(), t.act2edu_refs.begin(), t.act2edu_refs.end());
  std::vector<SentenceRecord> sources = t.edu_sources;
  sources.insert(sources.end(), t.act_sources.begin(), t.act_sources.end());
  std::vector<std::size_t> target_style(t.edu2act.size(), 1);
  target_style.insert(target_style.end(), t.act2edu.size(), 0);

  EvalReport r;
  r.protocol = "style_transfer";
  r.variant = variant;
  r.fingerprint = fingerprint;
  r.seed = seed;
  r.samples = cands.size();
  r.bleu = bleu(cands, refs);
  r.style_accuracy = classifier_accuracy(res.style, cands, target_style);
  const auto nb = classifier_accuracy(res.nb, cands, broad_of(sources), specific_of(sources));
  const auto svm = classifier_accuracy(res.svm, cands, broad_of(sources), specific_of(sources));
  r.nb_broad = nb.broad;
  r.nb_specific = nb.specific;
  r.svm_broad = svm.broad;
  r.svm_specific = svm.specific;
  if (!t.edu2act.empty()) r.extra["bleu_edu2act"] = bleu(t.edu2act, t.edu2act_refs);
  if (!t.act2edu.empty()) r.extra["bleu_act2edu"] = bleu(t.act2edu, t.act2edu_refs);
  r.check();
  out.push_back(std::move(r));
  return out;
}

void write_reports_jsonl(const std::filesystem::path& path, std::span<const EvalReport> reports) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write reports to " + path.string());
  for (const auto& r : reports) f << r.to_json().dump() << "\n";
}

std::vector<EvalReport> read_reports_jsonl(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot read reports from " + path.string());
  std::vector<EvalReport> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(f, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      out.push_back(EvalReport::from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

std::string render_summary(std::span<const EvalReport> reports) {
  auto cell = [](const std::optional<double>& v, const char* fmt) {
    if (!v) return std::string("-");
    char buf[32];
    std::snprintf(buf, sizeof buf, fmt, *v);
    return std::string(buf);
  };
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "%-20s %-16s %8s %8s %8s %8s %8s %8s %8s %6s\n", "variant", "protocol", "ppl",
                "nb_b", "nb_s", "svm_b", "svm_s", "bleu", "style", "n");
  os << line;
  for (const auto& r : reports) {
    if (r.skipped) {
      std::snprintf(line, sizeof line, "%-20s %-16s %s\n", r.variant.c_str(), r.protocol.c_str(),
                    ("skipped: " + r.note).c_str());
    } else {
      std::snprintf(line, sizeof line, "%-20s %-16s %8s %8s %8s %8s %8s %8s %8s %6zu\n", r.variant.c_str(),
                    r.protocol.c_str(), cell(r.ppl, "%.3f").c_str(), cell(r.nb_broad, "%.3f").c_str(),
                    cell(r.nb_specific, "%.3f").c_str(), cell(r.svm_broad, "%.3f").c_str(),
                    cell(r.svm_specific, "%.3f").c_str(), cell(r.bleu, "%.4f").c_str(),
                    cell(r.style_accuracy, "%.3f").c_str(), r.samples);
    }
    os << line;
  }
  return os.str();
}

}  // namespace xgen
