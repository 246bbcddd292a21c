#include "xgen/train_config.hpp"

#include <array>

#include "xgen/error.hpp"

namespace xgen {

std::string_view mode_name(TrainMode mode) {
  switch (mode) {
    case TrainMode::Conditional: return "conditional";
    case TrainMode::StyleUnaligned: return "style-unaligned";
    case TrainMode::StyleAligned: return "style-aligned";
  }
  return "?";
}

TrainMode parse_mode(std::string_view name) {
  for (auto m : {TrainMode::Conditional, TrainMode::StyleUnaligned, TrainMode::StyleAligned})
    if (mode_name(m) == name) return m;
  throw ConfigError("unknown training mode '" + std::string(name) + "'");
}

void TrainConfig::validate() const {
  auto positive = [](const char* name, auto v) {
    if (!(v > 0)) throw ConfigError(std::string("train config: ") + name + " must be positive");
  };
  positive("d_emb", d_emb);
  positive("d_hidden", d_hidden);
  positive("d_code", d_code);
  positive("d_noise", d_noise);
  positive("d_cond", d_cond);
  positive("d_reason", d_reason);
  positive("gan_hidden", gan_hidden);
  positive("clf_hidden", clf_hidden);
  positive("components", components);
  positive("batch_size", batch_size);
  positive("critic_steps", critic_steps);
  positive("clip_bound", clip_bound);
  positive("grad_clip", grad_clip);
  positive("epochs", epochs);
  for (double lr : {lr_ae, lr_critic, lr_generator, lr_classifier, lr_encoder_adv})
    if (!(lr >= 0)) throw ConfigError("train config: learning rates must be non-negative");
  if (lambda_lab < 0 || lambda_anti < 0 || lambda_style_adv < 0)
    throw ConfigError("train config: loss weights must be non-negative");
  if (maxlen < 3) throw ConfigError("train config: maxlen must be at least 3");
  if (anti_sign != 1 && anti_sign != -1) throw ConfigError("train config: anti_sign must be +1 or -1");
  if (condition_levels < 0 || condition_levels > 2) throw ConfigError("train config: condition_levels must be 0, 1 or 2");
  if (condition_levels == 0 && use_classifiers)
    throw ConfigError("train config: use_classifiers requires condition_levels > 0");
  if (mode != TrainMode::Conditional && condition_levels != 0)
    throw ConfigError("train config: style transfer modes take no reason conditioning");
}

nlohmann::json TrainConfig::to_json() const {
  return {
      {"mode", mode_name(mode)},
      {"d_emb", d_emb},
      {"d_hidden", d_hidden},
      {"d_code", d_code},
      {"d_noise", d_noise},
      {"d_cond", d_cond},
      {"d_reason", d_reason},
      {"gan_hidden", gan_hidden},
      {"clf_hidden", clf_hidden},
      {"components", components},
      {"maxlen", maxlen},
      {"batch_size", batch_size},
      {"lr_ae", lr_ae},
      {"lr_critic", lr_critic},
      {"lr_generator", lr_generator},
      {"lr_classifier", lr_classifier},
      {"lr_encoder_adv", lr_encoder_adv},
      {"critic_steps", critic_steps},
      {"clip_bound", clip_bound},
      {"grad_clip", grad_clip},
      {"epochs", epochs},
      {"patience", patience},
      {"max_steps_per_epoch", max_steps_per_epoch},
      {"seed", seed},
      {"lambda_lab", lambda_lab},
      {"lambda_anti", lambda_anti},
      {"anti_sign", anti_sign},
      {"lambda_style_adv", lambda_style_adv},
      {"use_gm", use_gm},
      {"condition_levels", condition_levels},
      {"use_classifiers", use_classifiers},
      {"use_gan", use_gan},
      {"condition_generator", condition_generator},
      {"condition_critic", condition_critic},
      {"condition_decoder", condition_decoder},
  };
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j, const TrainConfig& base) {
  if (!j.is_object()) throw ConfigError("train config: expected a JSON object");
  nlohmann::json merged = base.to_json();
  for (const auto& [key, value] : j.items()) {
    if (!merged.contains(key)) throw ConfigError("train config: unknown key '" + key + "'");
    merged[key] = value;
  }
  TrainConfig c;
  try {
    c.mode = parse_mode(merged.at("mode").get<std::string>());
    c.d_emb = merged.at("d_emb").get<std::size_t>();
    c.d_hidden = merged.at("d_hidden").get<std::size_t>();
    c.d_code = merged.at("d_code").get<std::size_t>();
    c.d_noise = merged.at("d_noise").get<std::size_t>();
    c.d_cond = merged.at("d_cond").get<std::size_t>();
    c.d_reason = merged.at("d_reason").get<std::size_t>();
    c.gan_hidden = merged.at("gan_hidden").get<std::size_t>();
    c.clf_hidden = merged.at("clf_hidden").get<std::size_t>();
    c.components = merged.at("components").get<std::size_t>();
    c.maxlen = merged.at("maxlen").get<std::size_t>();
    c.batch_size = merged.at("batch_size").get<std::size_t>();
    c.lr_ae = merged.at("lr_ae").get<double>();
    c.lr_critic = merged.at("lr_critic").get<double>();
    c.lr_generator = merged.at("lr_generator").get<double>();
    c.lr_classifier = merged.at("lr_classifier").get<double>();
    c.lr_encoder_adv = merged.at("lr_encoder_adv").get<double>();
    c.critic_steps = merged.at("critic_steps").get<std::size_t>();
    c.clip_bound = merged.at("clip_bound").get<double>();
    c.grad_clip = merged.at("grad_clip").get<double>();
    c.epochs = merged.at("epochs").get<std::size_t>();
    c.patience = merged.at("patience").get<std::size_t>();
    c.max_steps_per_epoch = merged.at("max_steps_per_epoch").get<std::size_t>();
    c.seed = merged.at("seed").get<std::uint64_t>();
    c.lambda_lab = merged.at("lambda_lab").get<double>();
    c.lambda_anti = merged.at("lambda_anti").get<double>();
    c.anti_sign = merged.at("anti_sign").get<int>();
    c.lambda_style_adv = merged.at("lambda_style_adv").get<double>();
    c.use_gm = merged.at("use_gm").get<bool>();
    c.condition_levels = merged.at("condition_levels").get<int>();
    c.use_classifiers = merged.at("use_classifiers").get<bool>();
    c.use_gan = merged.at("use_gan").get<bool>();
    c.condition_generator = merged.at("condition_generator").get<bool>();
    c.condition_critic = merged.at("condition_critic").get<bool>();
    c.condition_decoder = merged.at("condition_decoder").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  }
  return c;
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) { return from_json(j, TrainConfig{}); }

namespace {
constexpr std::array kAll{Variant::Base,           Variant::Gm,           Variant::Gm1L,
                          Variant::Gm2L,           Variant::Gm2LC,        Variant::StyleUnaligned,
                          Variant::StyleUnalignedGm, Variant::StyleAligned};
}  // namespace

std::span<const Variant> all_variants() { return kAll; }
std::span<const Variant> conditional_variants() { return std::span<const Variant>(kAll).first(5); }
std::span<const Variant> style_variants() { return std::span<const Variant>(kAll).subspan(5); }

std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::Base: return "base";
    case Variant::Gm: return "gm";
    case Variant::Gm1L: return "gm-1l";
    case Variant::Gm2L: return "gm-2l";
    case Variant::Gm2LC: return "gm-2l-c";
    case Variant::StyleUnaligned: return "style-unaligned";
    case Variant::StyleUnalignedGm: return "style-unaligned-gm";
    case Variant::StyleAligned: return "style-aligned";
  }
  return "?";
}

Variant parse_variant(std::string_view name) {
  for (auto v : kAll)
    if (variant_name(v) == name) return v;
  std::string valid;
  for (auto v : kAll) valid += (valid.empty() ? "" : "|") + std::string(variant_name(v));
  throw ConfigError("unknown variant '" + std::string(name) + "' (expected " + valid + ")");
}

TrainConfig variant_config(const TrainConfig& base, Variant variant) {
  TrainConfig c = base;
  switch (variant) {
    case Variant::Base:
      c.mode = TrainMode::Conditional;
      c.use_gm = false;
      c.condition_levels = 0;
      c.use_classifiers = false;
      break;
    case Variant::Gm:
      c.mode = TrainMode::Conditional;
      c.use_gm = true;
      c.condition_levels = 0;
      c.use_classifiers = false;
      break;
    case Variant::Gm1L:
      c.mode = TrainMode::Conditional;
      c.use_gm = true;
      c.condition_levels = 1;
      c.use_classifiers = false;
      break;
    case Variant::Gm2L:
      c.mode = TrainMode::Conditional;
      c.use_gm = true;
      c.condition_levels = 2;
      c.use_classifiers = false;
      break;
    case Variant::Gm2LC:
      c.mode = TrainMode::Conditional;
      c.use_gm = true;
      c.condition_levels = 2;
      c.use_classifiers = true;
      break;
    case Variant::StyleUnaligned:
      c.mode = TrainMode::StyleUnaligned;
      c.use_gm = false;
      c.condition_levels = 0;
      c.use_classifiers = false;
      break;
    case Variant::StyleUnalignedGm:
      c.mode = TrainMode::StyleUnaligned;
      c.use_gm = true;
      c.condition_levels = 0;
      c.use_classifiers = false;
      break;
    case Variant::StyleAligned:
      c.mode = TrainMode::StyleAligned;
      c.use_gm = false;
      c.condition_levels = 0;
      c.use_classifiers = false;
      break;
  }
  return c;
}

std::vector<std::string> config_diff(const TrainConfig& a, const TrainConfig& b) {
  const auto ja = a.to_json();
  const auto jb = b.to_json();
  std::vector<std::string> out;
  for (const auto& [key, value] : ja.items())
    if (!jb.contains(key) || jb.at(key) != value) out.push_back(key);
  return out;
}

}  // namespace xgen
