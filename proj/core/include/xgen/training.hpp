#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "xgen/checkpoint.hpp"
#include "xgen/corpus.hpp"
#include "xgen/error.hpp"
#include "xgen/models.hpp"
#include "xgen/optim.hpp"
#include "xgen/rng.hpp"
#include "xgen/taxonomy.hpp"
#include "xgen/train_config.hpp"
#include "xgen/vocab.hpp"

namespace xgen {

/// Encoded training batch.
///
/// In aligned mode `partner` holds the paired sentence of each row, in the
/// other style.
struct Batch {
  TokenBatch tokens;
  std::vector<std::size_t> broad;
  std::vector<std::size_t> specific;
  std::vector<Style> style;
  std::optional<TokenBatch> partner;

  std::size_t size() const { return tokens.size; }
};

Batch make_batch(std::span<const SentenceRecord> records, const Vocabulary& vocab, std::size_t maxlen);
/// first[i] and second[i] must share a pair_id and differ in style;
/// throws ContractError otherwise.
Batch make_pair_batch(std::span<const SentenceRecord> first, std::span<const SentenceRecord> second,
                      const Vocabulary& vocab, std::size_t maxlen);

/// Every trainable component of one run. Which optional parts exist is
/// decided by the config alone.
struct AraeModel {
  TrainConfig config;
  Tensor embedding;  // [|V|, d_emb], shared by encoder and decoders
  Encoder encoder;
  std::vector<Decoder> decoders;  // one for conditional mode, [education, action] otherwise
  std::optional<ConditionEmbedder> condition;
  Generator generator;
  Critic critic;
  std::optional<ReasonClassifier> labeler;
  std::optional<ReasonClassifier> anti_labeler;
  std::optional<StyleClassifier> style_adversary;

  static AraeModel init(const TrainConfig& config, std::size_t vocab_size, const ReasonTaxonomy& taxonomy, Rng& rng);

  std::size_t vocab_size() const { return embedding.shape()[0]; }
  const Decoder& decoder_for(Style style) const;

  /// Condition vectors, or an undefined tensor for unconditioned models.
  Tensor conditions(std::span<const std::size_t> broad, std::span<const std::size_t> specific) const;
  Tensor encode(const TokenBatch& batch) const { return encoder.encode(embedding, batch); }
  /// Fake codes for the given labels; `n` rows when the model is unconditioned
  /// and the label spans are empty.
  Tensor generate_codes(Rng& rng, std::span<const std::size_t> broad, std::span<const std::size_t> specific,
                        std::size_t n = 0) const;
  /// Greedy decoding of fresh generator samples, one per label.
  std::vector<std::vector<std::size_t>> generate(Rng& rng, std::span<const std::size_t> broad,
                                                 std::span<const std::size_t> specific) const;
  /// Encodes once and decodes with the target style's decoder.
  std::vector<std::vector<std::size_t>> transfer(const TokenBatch& batch, Style target) const;

  NamedParams params() const;
  NamedParams autoencoder_params() const;
  NamedParams encoder_params() const;
};

struct GeneratorLosses {
  double adversarial = 0.0;
  double labeler = 0.0;
  double anti_labeler = 0.0;
  double total = 0.0;
  double encoder_adversarial = 0.0;
};

struct LabelerLosses {
  double labeler = 0.0;
  double anti_labeler = 0.0;
};

struct StepRecord {
  std::size_t epoch = 0;
  std::size_t step = 0;
  std::string phase;
  nlohmann::json values = nlohmann::json::object();

  nlohmann::json to_json() const;
};

/// Append-only training history.
class TrainLog {
 public:
  void add_step(StepRecord record) { steps_.push_back(std::move(record)); }
  void add_epoch(nlohmann::json snapshot) { epochs_.push_back(std::move(snapshot)); }
  const std::vector<StepRecord>& steps() const { return steps_; }
  const std::vector<nlohmann::json>& epochs() const { return epochs_; }

  /// Step records then epoch snapshots, one JSON object per line, each
  /// tagged with "kind".
  std::string to_jsonl() const;
  void write_jsonl(const std::filesystem::path& path) const;

 private:
  std::vector<StepRecord> steps_;
  std::vector<nlohmann::json> epochs_;
};

struct TrainState {
  std::size_t epoch = 0;  // completed epochs
  std::size_t global_step = 0;
  double best_valid = std::numeric_limits<double>::infinity();
  std::size_t stale_epochs = 0;
  bool stopped = false;

  nlohmann::json to_json() const;
  static TrainState from_json(const nlohmann::json& j);
};

/// Raised when a loss or gradient turns non-finite during fit().
class TrainingAborted : public NumericError {
 public:
  TrainingAborted(const std::string& what, std::size_t last_good_epoch)
      : NumericError(what), last_good_epoch_(last_good_epoch) {}
  /// Number of completed epochs whose checkpoint is intact (0 = none).
  std::size_t last_good_epoch() const { return last_good_epoch_; }

 private:
  std::size_t last_good_epoch_;
};

/// ARAE training loop with per-phase Adam optimizers.
///
/// One training step runs the AE phase, `critic_steps` critic phases, the
/// generator phase (followed by the encoder's adversarial step) and, when
/// enabled, the labeler phase. Style modes add the style adversary (unaligned)
/// or cross-transfer reconstruction (aligned).
class Trainer {
 public:
  Trainer(TrainConfig config, Vocabulary vocab, ReasonTaxonomy taxonomy);
  // Optimizers hold handles to the model's parameters, so copies would alias.
  Trainer(const Trainer&) = delete;
  Trainer& operator=(const Trainer&) = delete;
  Trainer(Trainer&&) = default;
  Trainer& operator=(Trainer&&) = default;
  /// Restores parameters, optimizer moments, RNG and loop state exactly.
  static Trainer from_checkpoint(const Checkpoint& ckpt);

  /// `extra` is merged into the header; "fingerprint" and "seed" default to
  /// the config's fingerprint and seed.
  Checkpoint checkpoint(const nlohmann::json& extra = nlohmann::json::object()) const;

  double ae_phase_step(const Batch& batch);
  double style_adversary_phase_step(const Batch& batch);
  double critic_phase_step(const Batch& batch);
  /// Reuses precomputed real codes (detached) instead of re-encoding.
  double critic_phase_step(const Batch& batch, const Tensor& real_codes);
  GeneratorLosses generator_phase_step(const Batch& batch);
  LabelerLosses labeler_phase_step(const Batch& batch);
  /// All phases of one step, in order.
  void train_step(const Batch& batch);

  /// Training units of this mode: education records (conditional), all
  /// records (unaligned) or education records with their partners (aligned).
  std::vector<Batch> epoch_batches(std::span<const SentenceRecord> records);
  /// Runs one epoch; returns the mean AE loss.
  double train_epoch(std::span<const SentenceRecord> train);
  /// Mean teacher-forced reconstruction loss, no updates.
  double validation_loss(std::span<const SentenceRecord> valid) const;

  using EpochCallback = std::function<void(Trainer&, std::size_t epoch)>;
  /// Trains until `epochs` or early stop. Non-finite values raise TrainingAborted.
  void fit(std::span<const SentenceRecord> train, std::span<const SentenceRecord> valid,
           const EpochCallback& on_epoch = {});

  const TrainConfig& config() const { return config_; }
  const Vocabulary& vocab() const { return vocab_; }
  const ReasonTaxonomy& taxonomy() const { return taxonomy_; }
  const AraeModel& model() const { return model_; }
  AraeModel& model() { return model_; }
  const TrainLog& log() const { return log_; }
  TrainLog& log() { return log_; }
  const TrainState& state() const { return state_; }
  Rng& rng() { return rng_; }

 private:
  struct Optimizers {
    Adam autoencoder, critic, generator, encoder_adv, labeler, anti_labeler, style_adversary;
  };
  std::vector<std::pair<std::string, Adam*>> optimizer_list();
  std::vector<std::pair<std::string, const Adam*>> optimizer_list() const;
  void build_optimizers();
  void zero_all_grads();
  void record(const std::string& phase, nlohmann::json values);
  Tensor reconstruction_loss(const Batch& batch, const Tensor& codes, std::size_t* tokens) const;
  Tensor real_codes_detached(const Batch& batch) const;

  TrainConfig config_;
  Vocabulary vocab_;
  ReasonTaxonomy taxonomy_;
  Rng rng_;
  AraeModel model_;
  Optimizers opt_;
  TrainLog log_;
  TrainState state_;
};

/// Splits whole pairs off `train` for validation (deterministic given rng).
std::pair<std::vector<SentenceRecord>, std::vector<SentenceRecord>> split_validation(
    std::span<const SentenceRecord> train, double fraction, Rng& rng);

/// Mode-checked entry points; each validates the config and runs fit().
Trainer train_conditional(const TrainConfig& config, const Vocabulary& vocab, const ReasonTaxonomy& taxonomy,
                          std::span<const SentenceRecord> train, std::span<const SentenceRecord> valid,
                          const Trainer::EpochCallback& on_epoch = {});
Trainer train_style_unaligned(const TrainConfig& config, const Vocabulary& vocab, const ReasonTaxonomy& taxonomy,
                              std::span<const SentenceRecord> train, std::span<const SentenceRecord> valid,
                              const Trainer::EpochCallback& on_epoch = {});
Trainer train_style_aligned(const TrainConfig& config, const Vocabulary& vocab, const ReasonTaxonomy& taxonomy,
                            std::span<const SentenceRecord> train, std::span<const SentenceRecord> valid,
                            const Trainer::EpochCallback& on_epoch = {});

/// Taxonomy as an ordered array, safe to embed in a key-sorted JSON header.
nlohmann::json taxonomy_header(const ReasonTaxonomy& taxonomy);
ReasonTaxonomy taxonomy_from_header(const nlohmann::json& j);

}  // namespace xgen
