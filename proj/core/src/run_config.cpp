#include "xgen/run_config.hpp"

#include <fstream>

#include "xgen/checkpoint.hpp"
#include "xgen/error.hpp"

namespace xgen {

namespace {

nlohmann::json corpus_json(const RunConfig& c) {
  return {{"count", c.corpus_count},
          {"maxlen", c.corpus_maxlen},
          {"seed", c.corpus_seed},
          {"broad_decay", c.broad_decay},
          {"split_seed", c.split_seed},
          {"all_content", c.split_sizes.all_content},
          {"limited_reasons", c.split_sizes.limited_reasons},
          {"credit_only", c.split_sizes.credit_only},
          {"validation_fraction", c.validation_fraction},
          {"min_count", c.min_count}};
}

nlohmann::json merge_section(const nlohmann::json& defaults, const nlohmann::json& given, const std::string& section) {
  if (!given.is_object()) throw ConfigError("config: section '" + section + "' must be an object");
  nlohmann::json merged = defaults;
  for (const auto& [k, v] : given.items()) {
    if (!merged.contains(k)) throw ConfigError("config: unknown key '" + section + "." + k + "'");
    merged[k] = v;
  }
  return merged;
}

}  // namespace

nlohmann::json RunConfig::to_json() const {
  nlohmann::json train_json = train.to_json();
  train_json.erase("seed");
  return {{"seed", seed},
          {"corpus", corpus_json(*this)},
          {"train", train_json},
          {"eval", eval.to_json()},
          {"paths",
           {{"data_dir", data_dir.string()},
            {"checkpoint_dir", checkpoint_dir.string()},
            {"report_dir", report_dir.string()}}}};
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  const RunConfig d;
  RunConfig c;
  for (const auto& [k, _] : j.items())
    if (k != "seed" && k != "corpus" && k != "train" && k != "eval" && k != "paths")
      throw ConfigError("config: unknown section '" + k + "'");
  try {
    c.seed = j.value("seed", d.seed);
    const auto corpus = merge_section(corpus_json(d), j.value("corpus", nlohmann::json::object()), "corpus");
    c.corpus_count = corpus.at("count").get<std::size_t>();
    c.corpus_maxlen = corpus.at("maxlen").get<std::size_t>();
    c.corpus_seed = corpus.at("seed").get<std::uint64_t>();
    c.broad_decay = corpus.at("broad_decay").get<double>();
    c.split_seed = corpus.at("split_seed").get<std::uint64_t>();
    c.split_sizes.all_content = corpus.at("all_content").get<std::size_t>();
    c.split_sizes.limited_reasons = corpus.at("limited_reasons").get<std::size_t>();
    c.split_sizes.credit_only = corpus.at("credit_only").get<std::size_t>();
    c.validation_fraction = corpus.at("validation_fraction").get<double>();
    c.min_count = corpus.at("min_count").get<std::size_t>();

    nlohmann::json train = j.value("train", nlohmann::json::object());
    if (train.is_object() && train.contains("seed"))
      throw ConfigError("config: set the training seed with the top-level 'seed' key");
    c.train = TrainConfig::from_json(train);
    c.train.seed = c.seed;
    c.eval = EvalSettings::from_json(j.value("eval", nlohmann::json::object()));

    const nlohmann::json paths_default = d.to_json().at("paths");
    const auto paths = merge_section(paths_default, j.value("paths", nlohmann::json::object()), "paths");
    c.data_dir = paths.at("data_dir").get<std::string>();
    c.checkpoint_dir = paths.at("checkpoint_dir").get<std::string>();
    c.report_dir = paths.at("report_dir").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.corpus_spec().validate();
  c.train.validate();
  if (c.validation_fraction < 0 || c.validation_fraction >= 1)
    throw ConfigError("config: corpus.validation_fraction must be in [0, 1)");
  if (c.min_count == 0) throw ConfigError("config: corpus.min_count must be positive");
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file " + path.string());
  try {
    return from_json(nlohmann::json::parse(f));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
}

void RunConfig::save(const std::filesystem::path& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write config file " + path.string());
  f << to_json().dump(2) << "\n";
}

CorpusSpec RunConfig::corpus_spec() const {
  CorpusSpec s;
  s.count = corpus_count;
  s.maxlen = corpus_maxlen;
  s.seed = corpus_seed;
  s.broad_decay = broad_decay;
  return s;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig t = train;
  t.seed = seed;
  return t;
}

std::string RunConfig::data_fingerprint() const { return ::xgen::fingerprint(corpus_json(*this)); }

std::string RunConfig::fingerprint() const {
  nlohmann::json j = to_json();
  j.erase("paths");
  return ::xgen::fingerprint(j);
}

}  // namespace xgen
