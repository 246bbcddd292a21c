#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "xgen/corpus.hpp"
#include "xgen/eval.hpp"
#include "xgen/train_config.hpp"

namespace xgen {

/// Everything a pipeline run depends on, as one JSON document:
///
///   {
///     "seed": 1,
///     "corpus": {"count", "maxlen", "seed", "broad_decay", "split_seed",
///                "all_content", "limited_reasons", "credit_only",
///                "validation_fraction", "min_count"},
///     "train":  { TrainConfig keys except "seed" },
///     "eval":   { EvalSettings keys },
///     "paths":  {"data_dir", "checkpoint_dir", "report_dir"}
///   }
///
/// Every section and key is optional; unknown keys are rejected. The
/// top-level seed drives training; the corpus has its own seeds.
struct RunConfig {
  std::uint64_t seed = 1;

  std::size_t corpus_count = 2432;
  std::size_t corpus_maxlen = 23;
  std::uint64_t corpus_seed = 7;
  double broad_decay = 0.6;
  std::uint64_t split_seed = 11;
  SplitSizes split_sizes;
  double validation_fraction = 0.05;
  std::size_t min_count = 1;

  TrainConfig train;
  EvalSettings eval;

  std::filesystem::path data_dir = "data";
  std::filesystem::path checkpoint_dir = "checkpoints";
  std::filesystem::path report_dir = "reports";

  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  CorpusSpec corpus_spec() const;
  /// Train config with the top-level seed applied.
  TrainConfig train_config() const;

  /// Hash of the corpus and split settings; shared by every artifact built
  /// from the same data.
  std::string data_fingerprint() const;
  /// Hash of the whole config except paths.
  std::string fingerprint() const;
};

}  // namespace xgen
