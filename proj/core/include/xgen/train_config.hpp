#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace xgen {

enum class TrainMode { Conditional, StyleUnaligned, StyleAligned };

std::string_view mode_name(TrainMode mode);
TrainMode parse_mode(std::string_view name);

/// Every knob of a training run.
///
/// Defaults follow the reference setup: embedding 300, batch 128, maxlen 23
/// and 50 mixture components. Dimensions the reference leaves open (code,
/// noise, condition, hidden widths) are chosen for desk-scale runtime.
struct TrainConfig {
  TrainMode mode = TrainMode::Conditional;

  std::size_t d_emb = 300;
  std::size_t d_hidden = 128;  // recurrent state of encoder and decoders
  std::size_t d_code = 128;
  std::size_t d_noise = 100;
  std::size_t d_cond = 32;
  std::size_t d_reason = 32;     // per-level reason embedding
  std::size_t gan_hidden = 128;  // generator and critic MLP width
  std::size_t clf_hidden = 64;   // labeler, anti-labeler and style classifier width
  std::size_t components = 50;
  std::size_t maxlen = 23;
  std::size_t batch_size = 128;

  double lr_ae = 1e-3;
  double lr_critic = 1e-4;
  double lr_generator = 1e-4;
  double lr_classifier = 1e-3;
  double lr_encoder_adv = 1e-5;  // 0 disables the encoder's adversarial step

  std::size_t critic_steps = 5;
  double clip_bound = 0.01;
  double grad_clip = 1.0;
  std::size_t epochs = 60;
  std::size_t patience = 5;  // epochs without validation improvement; 0 disables early stop
  std::size_t max_steps_per_epoch = 0;  // 0 = full pass over the data
  std::uint64_t seed = 1;

  double lambda_lab = 1.0;
  double lambda_anti = 1.0;
  /// Sign of the anti-labeler term in the generator loss (-1 or +1).
  int anti_sign = -1;
  double lambda_style_adv = 1.0;

  // Ablation flags.
  bool use_gm = true;
  int condition_levels = 2;  // 0 none, 1 broad only, 2 broad + specific
  bool use_classifiers = true;
  bool use_gan = true;

  // Injection points of the condition vector.
  bool condition_generator = true;
  bool condition_critic = true;
  bool condition_decoder = true;

  /// Throws ConfigError on any inconsistent or non-positive setting.
  void validate() const;

  /// Width of the condition vector actually produced (0 when unconditioned).
  std::size_t condition_width() const { return condition_levels > 0 ? d_cond : 0; }
  bool classifiers_active() const { return mode == TrainMode::Conditional && use_classifiers && condition_levels > 0; }

  nlohmann::json to_json() const;
  /// Missing keys keep their defaults from `base`; unknown keys are rejected.
  static TrainConfig from_json(const nlohmann::json& j, const TrainConfig& base);
  static TrainConfig from_json(const nlohmann::json& j);
};

/// The five conditional ablation rows and three style-transfer scenarios.
enum class Variant { Base, Gm, Gm1L, Gm2L, Gm2LC, StyleUnaligned, StyleUnalignedGm, StyleAligned };

std::string_view variant_name(Variant v);
Variant parse_variant(std::string_view name);
std::span<const Variant> all_variants();
std::span<const Variant> conditional_variants();
std::span<const Variant> style_variants();

/// `base` with the mode and ablation flags of `variant` applied; no other
/// field changes.
TrainConfig variant_config(const TrainConfig& base, Variant variant);

/// Keys whose values differ between two configs.
std::vector<std::string> config_diff(const TrainConfig& a, const TrainConfig& b);

}  // namespace xgen
