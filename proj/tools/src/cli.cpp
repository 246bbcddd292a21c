#include "xgen/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "xgen/checkpoint.hpp"
#include "xgen/corpus.hpp"
#include "xgen/error.hpp"
#include "xgen/eval.hpp"
#include "xgen/run_config.hpp"
#include "xgen/training.hpp"
#include "xgen/vocab.hpp"

namespace xgen::cli {

namespace {

namespace fs = std::filesystem;

/// Bad command-line input that CLI11 cannot see (missing files, bad names).
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string read_file(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw UsageError("cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
}

void append_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::app);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
}

std::string file_hash(const fs::path& path) { return hex64(fnv1a64(read_file(path))); }

std::vector<std::string> read_lines(const fs::path& path) {
  std::vector<std::string> lines;
  std::istringstream in(read_file(path));
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

RunConfig load_config(const std::string& flag) {
  std::string path = flag;
  if (path.empty())
    if (const char* env = std::getenv(kConfigEnv); env != nullptr) path = env;
  if (path.empty()) return RunConfig{};
  if (!fs::exists(path)) throw UsageError("config file not found: " + path);
  return RunConfig::load(path);
}

struct DataSet {
  ReasonTaxonomy taxonomy;
  Splits splits;
  Vocabulary vocab;
};

constexpr const char* kCorpusFile = "corpus.jsonl";
constexpr const char* kTaxonomyFile = "taxonomy.json";
constexpr const char* kSplitsFile = "splits.json";
constexpr const char* kManifestFile = "manifest.json";

DataSet load_data(const RunConfig& cfg) {
  const fs::path manifest_path = cfg.data_dir / kManifestFile;
  if (!fs::exists(manifest_path))
    throw UsageError("no corpus in " + cfg.data_dir.string() + "; run 'xgen datagen' first");
  const auto manifest = nlohmann::json::parse(read_file(manifest_path));
  const std::string expected = cfg.data_fingerprint();
  if (manifest.value("fingerprint", "") != expected)
    throw IntegrityError("corpus in " + cfg.data_dir.string() + " has fingerprint " + manifest.value("fingerprint", "?") +
                         " but the config expects " + expected + "; rerun 'xgen datagen'");
  for (const auto& [name, hash] : manifest.at("files").items())
    if (file_hash(cfg.data_dir / name) != hash.get<std::string>())
      throw IntegrityError("corpus file " + (cfg.data_dir / name).string() + " does not match its manifest");

  DataSet d;
  d.taxonomy = load_taxonomy(cfg.data_dir / kTaxonomyFile);
  const auto corpus = load_corpus(cfg.data_dir / kCorpusFile, d.taxonomy);
  const auto splits = nlohmann::json::parse(read_file(cfg.data_dir / kSplitsFile));
  d.splits = materialize(corpus, SplitIndices::from_json(splits.at("indices")));
  d.vocab = Vocabulary::build(d.splits.train, cfg.min_count);
  return d;
}

// ---------------------------------------------------------------------------
// datagen

int cmd_datagen(const RunConfig& cfg, std::ostream& out) {
  const CorpusSpec spec = cfg.corpus_spec();
  Rng rng(spec.seed);
  const auto corpus = generate_synthetic_corpus(spec, rng);
  Rng split_rng(cfg.split_seed);
  const auto idx = split_protocols(corpus, spec.taxonomy, split_rng, cfg.split_sizes);

  std::error_code ec;
  fs::create_directories(cfg.data_dir, ec);
  if (ec || !fs::is_directory(cfg.data_dir))
    throw UsageError("cannot create data directory " + cfg.data_dir.string() + (ec ? ": " + ec.message() : ""));
  save_corpus(cfg.data_dir / kCorpusFile, corpus, spec.taxonomy);
  save_taxonomy(cfg.data_dir / kTaxonomyFile, spec.taxonomy);
  const nlohmann::json splits = {{"kind", "xgen-splits"},
                                 {"fingerprint", cfg.data_fingerprint()},
                                 {"seed", cfg.split_seed},
                                 {"indices", idx.to_json()}};
  write_file(cfg.data_dir / kSplitsFile, splits.dump(2) + "\n");
  cfg.save(cfg.data_dir / "config.json");

  nlohmann::json files = nlohmann::json::object();
  for (const char* name : {kCorpusFile, kTaxonomyFile, kSplitsFile}) files[name] = file_hash(cfg.data_dir / name);
  const nlohmann::json manifest = {{"kind", "xgen-data"},
                                   {"fingerprint", cfg.data_fingerprint()},
                                   {"seed", cfg.corpus_seed},
                                   {"pairs", cfg.corpus_count},
                                   {"records", corpus.size()},
                                   {"train_records", idx.train.size()},
                                   {"all_content", idx.all_content.size()},
                                   {"limited_reasons", idx.limited_reasons.size()},
                                   {"credit_only", idx.credit_only.size()},
                                   {"files", files}};
  write_file(cfg.data_dir / kManifestFile, manifest.dump(2) + "\n");
  out << "wrote " << corpus.size() << " records (" << cfg.corpus_count << " pairs) to " << cfg.data_dir.string()
      << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// train

std::string jsonl(const std::vector<nlohmann::json>& rows) {
  std::string s;
  for (const auto& r : rows) s += r.dump() + "\n";
  return s;
}

/// Drops log lines written after the checkpointed epoch.
void truncate_log(const fs::path& path, std::size_t epoch) {
  if (!fs::exists(path)) return;
  std::vector<nlohmann::json> keep;
  for (const auto& line : read_lines(path)) {
    if (line.empty()) continue;
    auto j = nlohmann::json::parse(line);
    const auto e = j.at("epoch").get<std::size_t>();
    if (j.at("kind") == "step" ? e < epoch : e <= epoch) keep.push_back(std::move(j));
  }
  write_file(path, jsonl(keep));
}

void truncate_reports(const fs::path& path, std::size_t epoch) {
  if (!fs::exists(path)) return;
  auto reports = read_reports_jsonl(path);
  std::erase_if(reports, [&](const EvalReport& r) { return r.extra.value("epoch", std::size_t{0}) > epoch; });
  write_reports_jsonl(path, reports);
}

struct TrainOptions {
  std::string variant;
  std::optional<std::uint64_t> seed;
  bool resume = false;
};

int cmd_train(RunConfig cfg, const TrainOptions& opt, std::ostream& out) {
  if (opt.seed) cfg.seed = *opt.seed;
  const Variant variant = parse_variant(opt.variant);
  cfg.train = variant_config(cfg.train_config(), variant);
  cfg.train.validate();
  const DataSet data = load_data(cfg);

  const std::string run = std::string(variant_name(variant)) + "-s" + std::to_string(cfg.seed);
  const fs::path ckpt_path = cfg.checkpoint_dir / (run + ".ckpt");
  const fs::path log_path = cfg.checkpoint_dir / (run + ".log.jsonl");
  const fs::path epochs_path = cfg.report_dir / (run + ".epochs.jsonl");
  fs::create_directories(cfg.checkpoint_dir);
  fs::create_directories(cfg.report_dir);
  cfg.save(cfg.checkpoint_dir / (run + ".config.json"));

  Rng valid_rng(cfg.seed);
  const auto [train, valid] = split_validation(data.splits.train, cfg.validation_fraction, valid_rng);
  const EvalResources res = EvalResources::fit(data.splits.train, data.taxonomy, cfg.eval);

  std::optional<Trainer> trainer;
  if (opt.resume && fs::exists(ckpt_path)) {
    // The epoch budget may grow on resume; every other setting must match.
    Checkpoint ck = load_checkpoint(ckpt_path);
    RunConfig saved = cfg;
    try {
      saved.train.epochs = ck.header.at("config").at("epochs").get<std::size_t>();
    } catch (const nlohmann::json::exception&) {
      throw IntegrityError("checkpoint " + ckpt_path.string() + ": malformed header");
    }
    if (!ck.header.contains("fingerprint") || ck.header.at("fingerprint") != saved.fingerprint())
      throw IntegrityError("checkpoint " + ckpt_path.string() + " was trained with a different config");
    ck.header["config"]["epochs"] = cfg.train.epochs;
    trainer.emplace(Trainer::from_checkpoint(ck));
    const std::size_t done = trainer->state().epoch;
    truncate_log(log_path, done);
    truncate_reports(epochs_path, done);
    spdlog::info("resuming {} after epoch {}", run, done);
  } else {
    if (opt.resume) spdlog::warn("no checkpoint at {}; starting fresh", ckpt_path.string());
    trainer.emplace(cfg.train, data.vocab, data.taxonomy);
    write_file(log_path, "");
    write_file(epochs_path, "");
  }

  const nlohmann::json extra = {{"fingerprint", cfg.fingerprint()},
                                {"data_fingerprint", cfg.data_fingerprint()},
                                {"variant", variant_name(variant)},
                                {"seed", cfg.seed}};
  std::size_t steps_written = 0, epochs_written = 0;
  auto on_epoch = [&](Trainer& t, std::size_t epoch) {
    std::string lines;
    const auto& steps = t.log().steps();
    for (; steps_written < steps.size(); ++steps_written) lines += steps[steps_written].to_json().dump() + "\n";
    const auto& epochs = t.log().epochs();
    for (; epochs_written < epochs.size(); ++epochs_written) {
      nlohmann::json j = epochs[epochs_written];
      j["kind"] = "epoch";
      lines += j.dump() + "\n";
    }
    append_file(log_path, lines);

    Rng gen_rng(cfg.eval.seed);
    auto reports = run_protocols(t.model(), t.vocab(), std::string(variant_name(variant)), cfg.fingerprint(),
                                 data.splits, res, gen_rng);
    std::string report_lines;
    for (auto& r : reports) {
      r.extra["epoch"] = epoch;
      report_lines += r.to_json().dump() + "\n";
    }
    append_file(epochs_path, report_lines);
    save_checkpoint(ckpt_path, t.checkpoint(extra));
  };

  try {
    trainer->fit(train, valid, on_epoch);
  } catch (const TrainingAborted& e) {
    spdlog::error("{}", e.what());
    spdlog::error("last good checkpoint: {} (epoch {})", ckpt_path.string(), e.last_good_epoch());
    return kExitFailure;
  }
  if (!fs::exists(ckpt_path)) save_checkpoint(ckpt_path, trainer->checkpoint(extra));
  out << "trained " << run << " for " << trainer->state().epoch << " epochs; checkpoint " << ckpt_path.string()
      << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// generate

std::string joined(const std::vector<std::string>& names) {
  std::string s;
  for (const auto& n : names) s += (s.empty() ? "" : ", ") + n;
  return s;
}

struct GenerateOptions {
  std::string checkpoint;
  std::string broad;
  std::string specific;
  std::size_t n = 5;
  std::uint64_t seed = 1;
};

int cmd_generate(const GenerateOptions& opt, std::ostream& out) {
  if (!fs::exists(opt.checkpoint)) throw UsageError("checkpoint not found: " + opt.checkpoint);
  const Trainer t = Trainer::from_checkpoint(load_checkpoint(opt.checkpoint));
  const auto& tax = t.taxonomy();
  if (!tax.has_broad(opt.broad))
    throw TaxonomyError("unknown broad reason '" + opt.broad + "'; valid: " + joined(tax.broad_names()));
  const std::size_t b = tax.broad_id(opt.broad);
  std::vector<std::string> valid;
  for (auto s : tax.specifics_of(b)) valid.push_back(tax.specific_name(s));
  if (!tax.has_specific(opt.specific) || tax.parent(tax.specific_id(opt.specific)) != b)
    throw TaxonomyError("unknown specific reason '" + opt.specific + "' for broad reason '" + opt.broad +
                        "'; valid: " + joined(valid));
  const std::size_t s = tax.specific_id(opt.specific);

  Rng rng(opt.seed);
  const std::vector<std::size_t> broad(opt.n, b), specific(opt.n, s);
  for (const auto& ids : t.model().generate(rng, broad, specific))
    out << opt.broad << "/" << opt.specific << "\t" << join_tokens(decode_ids(ids, t.vocab())) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// transfer

struct TransferOptions {
  std::string checkpoint;
  std::string direction;
  std::string input;
  std::string output;
};

int cmd_transfer(const TransferOptions& opt, std::ostream& out) {
  if (!fs::exists(opt.checkpoint)) throw UsageError("checkpoint not found: " + opt.checkpoint);
  if (!fs::exists(opt.input)) throw UsageError("input file not found: " + opt.input);
  const Trainer t = Trainer::from_checkpoint(load_checkpoint(opt.checkpoint));
  if (t.model().decoders.size() != 2)
    throw ContractError("checkpoint " + opt.checkpoint + " has no style decoders; train a style-* variant");
  const Style target = opt.direction == "edu2act" ? Style::Action : Style::Education;

  const auto lines = read_lines(opt.input);
  std::vector<std::string> results(lines.size());
  std::vector<std::size_t> rows;
  std::vector<std::vector<std::size_t>> seqs;
  auto flush = [&] {
    if (seqs.empty()) return;
    const auto ids = t.model().transfer(TokenBatch::from(seqs), target);
    for (std::size_t i = 0; i < rows.size(); ++i) results[rows[i]] = join_tokens(decode_ids(ids[i], t.vocab()));
    rows.clear();
    seqs.clear();
  };
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto tokens = tokenize(lines[i]);
    if (tokens.empty()) continue;
    rows.push_back(i);
    seqs.push_back(encode_sentence(tokens, t.vocab(), t.config().maxlen));
    if (seqs.size() == t.config().batch_size) flush();
  }
  flush();

  std::string text;
  for (const auto& r : results) text += r + "\n";
  if (opt.output.empty())
    out << text;
  else
    write_file(opt.output, text);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// eval

struct EvalOptions {
  std::vector<std::string> checkpoints;
  bool force = false;
};

int cmd_eval(const RunConfig& cfg, const EvalOptions& opt, std::ostream& out) {
  for (const auto& p : opt.checkpoints)
    if (!fs::exists(p)) throw UsageError("checkpoint not found: " + p);
  const DataSet data = load_data(cfg);
  const EvalResources res = EvalResources::fit(data.splits.train, data.taxonomy, cfg.eval);

  std::vector<EvalReport> reports;
  for (const auto& p : opt.checkpoints) {
    const Checkpoint ck = load_checkpoint(p);
    const std::string data_fp = ck.header.value("data_fingerprint", "");
    if (data_fp != cfg.data_fingerprint()) {
      const std::string msg = "checkpoint " + p + " was trained on data " + (data_fp.empty() ? "?" : data_fp) +
                              ", config has " + cfg.data_fingerprint();
      if (!opt.force) throw IntegrityError(msg + "; pass --force to evaluate anyway");
      spdlog::warn("{}", msg);
    }
    const Trainer t = Trainer::from_checkpoint(ck);
    Rng gen_rng(cfg.eval.seed);
    auto r = run_protocols(t.model(), t.vocab(), ck.header.value("variant", "model"),
                           ck.header.value("fingerprint", ""), data.splits, res, gen_rng);
    reports.insert(reports.end(), r.begin(), r.end());
  }
  for (auto r : reference_reports(data.splits, res)) {
    r.fingerprint = cfg.data_fingerprint();
    r.seed = cfg.corpus_seed;
    reports.push_back(std::move(r));
  }

  fs::create_directories(cfg.report_dir);
  write_reports_jsonl(cfg.report_dir / "eval.jsonl", reports);
  const std::string summary = render_summary(reports);
  write_file(cfg.report_dir / "summary.txt", summary);
  cfg.save(cfg.report_dir / "eval.config.json");
  out << summary;
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Conditional loan-denial explanation generator", "xgen"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");
  std::string config_path;
  bool verbose = false;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config_path, std::string("Config file (default: $") + kConfigEnv + ")");
    sub->add_flag("-v,--verbose", verbose, "Debug logging");
  };

  auto* datagen = app.add_subcommand("datagen", "Generate the synthetic corpus and evaluation splits");
  add_common(datagen);

  TrainOptions train_opt;
  std::vector<std::string> variant_names;
  for (auto v : all_variants()) variant_names.emplace_back(variant_name(v));
  auto* train = app.add_subcommand("train", "Train one model variant");
  add_common(train);
  train->add_option("--variant", train_opt.variant, "Model variant")->required()->check(CLI::IsMember(variant_names));
  train->add_option("--seed", train_opt.seed, "Override the config seed");
  train->add_flag("--resume", train_opt.resume, "Continue from the run's checkpoint");

  GenerateOptions gen_opt;
  auto* generate = app.add_subcommand("generate", "Sample explanations for one reason");
  add_common(generate);
  generate->add_option("checkpoint", gen_opt.checkpoint, "Model checkpoint")->required();
  generate->add_option("--broad", gen_opt.broad, "Broad reason")->required();
  generate->add_option("--specific", gen_opt.specific, "Specific reason")->required();
  generate->add_option("--n", gen_opt.n, "Number of sentences")->capture_default_str();
  generate->add_option("--seed", gen_opt.seed, "Sampling seed")->capture_default_str();

  TransferOptions tr_opt;
  auto* transfer = app.add_subcommand("transfer", "Rewrite sentences into the other style");
  add_common(transfer);
  transfer->add_option("checkpoint", tr_opt.checkpoint, "Style model checkpoint")->required();
  transfer->add_option("input", tr_opt.input, "Input file, one sentence per line")->required();
  transfer->add_option("--direction", tr_opt.direction, "edu2act or act2edu")
      ->required()
      ->check(CLI::IsMember({"edu2act", "act2edu"}));
  transfer->add_option("-o,--output", tr_opt.output, "Output file (default: stdout)");

  EvalOptions eval_opt;
  auto* eval = app.add_subcommand("eval", "Evaluate checkpoints on every protocol");
  add_common(eval);
  eval->add_option("checkpoints", eval_opt.checkpoints, "Model checkpoints")->required();
  eval->add_flag("--force", eval_opt.force, "Evaluate checkpoints trained on other data");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }
  if (verbose) spdlog::set_level(spdlog::level::debug);

  try {
    if (datagen->parsed()) return cmd_datagen(load_config(config_path), out);
    if (train->parsed()) return cmd_train(load_config(config_path), train_opt, out);
    if (generate->parsed()) return cmd_generate(gen_opt, out);
    if (transfer->parsed()) return cmd_transfer(tr_opt, out);
    if (eval->parsed()) return cmd_eval(load_config(config_path), eval_opt, out);
  } catch (const UsageError& e) {
    err << "xgen: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "xgen: " << e.what() << "\n";
    return kExitUsage;
  } catch (const TaxonomyError& e) {
    err << "xgen: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ContractError& e) {
    err << "xgen: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "xgen: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace xgen::cli
