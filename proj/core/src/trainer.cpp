#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_map>

#include <spdlog/spdlog.h>

#include "xgen/training.hpp"

namespace xgen {

namespace {

using Units = std::pair<std::vector<SentenceRecord>, std::vector<SentenceRecord>>;

// Records one training unit per row; `second` is filled only in aligned mode.
Units collect_units(TrainMode mode, std::span<const SentenceRecord> records) {
  Units u;
  switch (mode) {
    case TrainMode::Conditional:
      u.first = filter_style(records, Style::Education);
      break;
    case TrainMode::StyleUnaligned:
      u.first.assign(records.begin(), records.end());
      break;
    case TrainMode::StyleAligned: {
      std::unordered_map<std::uint64_t, const SentenceRecord*> action;
      for (const auto& r : records)
        if (r.style == Style::Action && r.pair_id) action[*r.pair_id] = &r;
      for (const auto& r : records) {
        if (r.style != Style::Education) continue;
        auto it = r.pair_id ? action.find(*r.pair_id) : action.end();
        if (it == action.end()) throw ContractError("aligned training: education record without an action partner");
        u.first.push_back(r);
        u.second.push_back(*it->second);
      }
      if (u.first.size() != action.size())
        throw ContractError("aligned training: action record without an education partner");
      break;
    }
  }
  if (u.first.empty()) throw ContractError(std::string("no training units for mode ") + std::string(mode_name(mode)));
  return u;
}

Batch units_batch(const Units& u, std::span<const std::size_t> order, const Vocabulary& vocab, std::size_t maxlen) {
  std::vector<SentenceRecord> a, b;
  for (auto i : order) {
    a.push_back(u.first[i]);
    if (!u.second.empty()) b.push_back(u.second[i]);
  }
  return b.empty() ? make_batch(a, vocab, maxlen) : make_pair_batch(a, b, vocab, maxlen);
}

TokenBatch select_rows(const TokenBatch& t, std::span<const std::size_t> rows) {
  TokenBatch out;
  out.size = rows.size();
  out.length = t.length;
  for (auto r : rows) out.ids.insert(out.ids.end(), t.ids.begin() + r * t.length, t.ids.begin() + (r + 1) * t.length);
  return out;
}

struct Weighted {
  Tensor sum;
  std::size_t tokens = 0;

  void add_loss(const Decoder::Result& r) {
    Tensor w = scale(r.loss, static_cast<double>(r.tokens));
    sum = sum.defined() ? add(sum, w) : w;
    tokens += r.tokens;
  }
  Tensor mean() const { return scale(sum, 1.0 / static_cast<double>(tokens)); }
};

// Decodes each style group of `target` with that style's decoder.
void decode_by_style(const AraeModel& m, const Tensor& codes, const TokenBatch& target,
                     std::span<const Style> styles, Weighted& acc) {
  for (Style s : {Style::Education, Style::Action}) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < styles.size(); ++i)
      if (styles[i] == s) rows.push_back(i);
    if (rows.empty()) continue;
    const bool all = rows.size() == styles.size();
    Tensor c = all ? codes : embedding(codes, rows);
    acc.add_loss(m.decoder_for(s).teacher_forced(m.embedding, c, Tensor{}, all ? target : select_rows(target, rows)));
  }
}

nlohmann::json rng_to_json(const Rng::State& s) {
  return {{"s", s.s}, {"has_spare", s.has_spare}, {"spare", s.spare}};
}

Rng::State rng_from_json(const nlohmann::json& j) {
  Rng::State s;
  s.s = j.at("s").get<std::array<std::uint64_t, 4>>();
  s.has_spare = j.at("has_spare").get<bool>();
  s.spare = j.at("spare").get<double>();
  return s;
}

std::vector<std::size_t> class_targets(std::span<const Style> styles) {
  std::vector<std::size_t> out;
  for (Style s : styles) out.push_back(s == Style::Education ? 0 : 1);
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Log and state

nlohmann::json StepRecord::to_json() const {
  return {{"kind", "step"}, {"epoch", epoch}, {"step", step}, {"phase", phase}, {"values", values}};
}

std::string TrainLog::to_jsonl() const {
  std::string out;
  for (const auto& s : steps_) out += s.to_json().dump() + "\n";
  for (const auto& e : epochs_) {
    nlohmann::json j = e;
    j["kind"] = "epoch";
    out += j.dump() + "\n";
  }
  return out;
}

void TrainLog::write_jsonl(const std::filesystem::path& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write train log " + path.string());
  f << to_jsonl();
}

nlohmann::json TrainState::to_json() const {
  return {{"epoch", epoch},
          {"global_step", global_step},
          {"best_valid", std::isfinite(best_valid) ? nlohmann::json(best_valid) : nlohmann::json(nullptr)},
          {"stale_epochs", stale_epochs},
          {"stopped", stopped}};
}

TrainState TrainState::from_json(const nlohmann::json& j) {
  TrainState s;
  s.epoch = j.at("epoch").get<std::size_t>();
  s.global_step = j.at("global_step").get<std::size_t>();
  s.best_valid = j.at("best_valid").is_null() ? std::numeric_limits<double>::infinity() : j.at("best_valid").get<double>();
  s.stale_epochs = j.at("stale_epochs").get<std::size_t>();
  s.stopped = j.at("stopped").get<bool>();
  return s;
}

nlohmann::json taxonomy_header(const ReasonTaxonomy& taxonomy) {
  nlohmann::json groups = nlohmann::json::array();
  for (std::size_t b = 0; b < taxonomy.broad_count(); ++b) {
    std::vector<std::string> specifics;
    for (auto s : taxonomy.specifics_of(b)) specifics.push_back(taxonomy.specific_name(s));
    groups.push_back({{"broad", taxonomy.broad_name(b)}, {"specifics", specifics}});
  }
  return groups;
}

ReasonTaxonomy taxonomy_from_header(const nlohmann::json& j) {
  std::vector<std::pair<std::string, std::vector<std::string>>> groups;
  for (const auto& g : j) groups.emplace_back(g.at("broad").get<std::string>(), g.at("specifics").get<std::vector<std::string>>());
  return ReasonTaxonomy(groups);
}

// ---------------------------------------------------------------------------
// Trainer

Trainer::Trainer(TrainConfig config, Vocabulary vocab, ReasonTaxonomy taxonomy)
    : config_(std::move(config)), vocab_(std::move(vocab)), taxonomy_(std::move(taxonomy)), rng_(config_.seed) {
  config_.validate();
  model_ = AraeModel::init(config_, vocab_.size(), taxonomy_, rng_);
  build_optimizers();
}

void Trainer::build_optimizers() {
  const auto& c = config_;
  opt_.autoencoder = Adam(tensors_of(model_.autoencoder_params()), {.lr = c.lr_ae});
  opt_.critic = Adam(tensors_of(model_.critic.params()), {.lr = c.lr_critic});
  opt_.generator = Adam(tensors_of(model_.generator.params()), {.lr = c.lr_generator});
  opt_.encoder_adv = Adam(tensors_of(model_.encoder_params()), {.lr = c.lr_encoder_adv});
  opt_.labeler = Adam(model_.labeler ? tensors_of(model_.labeler->params()) : std::vector<Tensor>{}, {.lr = c.lr_classifier});
  opt_.anti_labeler =
      Adam(model_.anti_labeler ? tensors_of(model_.anti_labeler->params()) : std::vector<Tensor>{}, {.lr = c.lr_classifier});
  opt_.style_adversary = Adam(
      model_.style_adversary ? tensors_of(model_.style_adversary->params()) : std::vector<Tensor>{}, {.lr = c.lr_classifier});
}

std::vector<std::pair<std::string, Adam*>> Trainer::optimizer_list() {
  return {{"autoencoder", &opt_.autoencoder}, {"critic", &opt_.critic},     {"generator", &opt_.generator},
          {"encoder_adv", &opt_.encoder_adv}, {"labeler", &opt_.labeler}, {"anti_labeler", &opt_.anti_labeler},
          {"style_adversary", &opt_.style_adversary}};
}

std::vector<std::pair<std::string, const Adam*>> Trainer::optimizer_list() const {
  std::vector<std::pair<std::string, const Adam*>> out;
  for (auto& [n, p] : const_cast<Trainer*>(this)->optimizer_list()) out.emplace_back(n, p);
  return out;
}

void Trainer::zero_all_grads() {
  for (auto& t : tensors_of(model_.params())) t.zero_grad();
  // Noise parameters are outside params() when the mixture is off.
  model_.generator.noise.mu.zero_grad();
  model_.generator.noise.rho.zero_grad();
}

void Trainer::record(const std::string& phase, nlohmann::json values) {
  log_.add_step({state_.epoch, state_.global_step, phase, std::move(values)});
}

Tensor Trainer::real_codes_detached(const Batch& batch) const {
  NoGradGuard no_grad;
  return model_.encode(batch.tokens);
}

Tensor Trainer::reconstruction_loss(const Batch& batch, const Tensor& codes, std::size_t* tokens) const {
  Weighted acc;
  switch (config_.mode) {
    case TrainMode::Conditional: {
      Tensor v = model_.condition && config_.condition_decoder ? model_.conditions(batch.broad, batch.specific) : Tensor{};
      acc.add_loss(model_.decoders[0].teacher_forced(model_.embedding, codes, v, batch.tokens));
      break;
    }
    case TrainMode::StyleUnaligned:
      decode_by_style(model_, codes, batch.tokens, batch.style, acc);
      break;
    case TrainMode::StyleAligned: {
      if (!batch.partner) throw ContractError("aligned training: batch has no partner sentences");
      std::vector<Style> partner_style;
      for (Style s : batch.style) partner_style.push_back(other_style(s));
      Tensor partner_codes = model_.encode(*batch.partner);
      decode_by_style(model_, codes, batch.tokens, batch.style, acc);
      decode_by_style(model_, partner_codes, *batch.partner, partner_style, acc);
      decode_by_style(model_, codes, *batch.partner, partner_style, acc);
      decode_by_style(model_, partner_codes, batch.tokens, batch.style, acc);
      break;
    }
  }
  if (tokens) *tokens = acc.tokens;
  return acc.mean();
}

double Trainer::ae_phase_step(const Batch& batch) {
  zero_all_grads();
  Tensor codes = model_.encode(batch.tokens);
  Tensor loss = reconstruction_loss(batch, codes, nullptr);
  const double recon = loss.item();
  nlohmann::json values{{"loss", recon}};
  if (model_.style_adversary) {
    // Cross-entropy against the uniform style distribution.
    Tensor confusion = scale(mean(log_softmax(model_.style_adversary->logits(codes))), -1.0);
    values["confusion"] = confusion.item();
    loss = add(loss, scale(confusion, config_.lambda_style_adv));
  }
  backward(loss);
  values["grad_norm"] = global_grad_norm(opt_.autoencoder.params());
  opt_.autoencoder.clip(config_.grad_clip);
  opt_.autoencoder.step();
  zero_all_grads();
  record("ae", std::move(values));
  return recon;
}

double Trainer::style_adversary_phase_step(const Batch& batch) {
  if (!model_.style_adversary) throw ContractError("style_adversary_phase_step: model has no style adversary");
  zero_all_grads();
  Tensor codes = real_codes_detached(batch);
  const auto targets = class_targets(batch.style);
  Tensor logits = model_.style_adversary->logits(codes);
  Tensor loss = cross_entropy(logits, targets);
  const auto pred = argmax_rows(logits);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == targets[i];
  backward(loss);
  opt_.style_adversary.step();
  zero_all_grads();
  const double l = loss.item();
  record("style_adversary", {{"loss", l}, {"accuracy", static_cast<double>(hits) / static_cast<double>(pred.size())}});
  return l;
}

double Trainer::critic_phase_step(const Batch& batch) { return critic_phase_step(batch, real_codes_detached(batch)); }

double Trainer::critic_phase_step(const Batch& batch, const Tensor& real_codes) {
  zero_all_grads();
  Tensor v, fake;
  {
    NoGradGuard no_grad;
    v = model_.conditions(batch.broad, batch.specific);
    fake = model_.generate_codes(rng_, batch.broad, batch.specific, batch.size());
  }
  const Tensor vc = config_.condition_critic ? v : Tensor{};
  Tensor real_score = mean(model_.critic.score(real_codes.detach(), vc));
  Tensor fake_score = mean(model_.critic.score(fake, vc));
  Tensor loss = sub(fake_score, real_score);
  backward(loss);
  opt_.critic.step();
  model_.critic.clip_weights(config_.clip_bound);
  zero_all_grads();
  const double l = loss.item();
  record("critic", {{"loss", l}, {"gap", -l}, {"max_weight", model_.critic.max_abs_weight()}});
  return l;
}

GeneratorLosses Trainer::generator_phase_step(const Batch& batch) {
  zero_all_grads();
  Tensor v;
  {
    NoGradGuard no_grad;
    v = model_.conditions(batch.broad, batch.specific);
  }
  const Tensor vg = config_.condition_generator ? v : Tensor{};
  const Tensor vc = config_.condition_critic ? v : Tensor{};
  GeneratorLosses out;
  Tensor z = model_.generator.noise.sample(rng_, batch.size()).z;
  Tensor fake = model_.generator.forward(z, vg);
  Tensor total = scale(mean(model_.critic.score(fake, vc)), -1.0);
  out.adversarial = total.item();
  if (model_.labeler) {
    Tensor lab = model_.labeler->loss(fake, batch.broad, batch.specific);
    out.labeler = lab.item();
    total = add(total, scale(lab, config_.lambda_lab));
  }
  if (model_.anti_labeler) {
    Tensor anti = model_.anti_labeler->loss(fake, batch.broad, batch.specific);
    out.anti_labeler = anti.item();
    total = add(total, scale(anti, config_.anti_sign * config_.lambda_anti));
  }
  out.total = total.item();
  backward(total);
  const double grad_norm = global_grad_norm(opt_.generator.params());
  const double noise_grad_norm =
      model_.generator.noise.enabled
          ? global_grad_norm(std::vector<Tensor>{model_.generator.noise.mu, model_.generator.noise.rho})
          : 0.0;
  opt_.generator.step();
  zero_all_grads();

  if (config_.lr_encoder_adv > 0) {
    // Pull real codes toward the region the critic scores as fake.
    Tensor codes = model_.encode(batch.tokens);
    Tensor enc_loss = mean(model_.critic.score(codes, vc));
    out.encoder_adversarial = enc_loss.item();
    backward(enc_loss);
    opt_.encoder_adv.step();
    zero_all_grads();
  }
  record("generator", {{"adversarial", out.adversarial},
                       {"labeler", out.labeler},
                       {"anti_labeler", out.anti_labeler},
                       {"total", out.total},
                       {"encoder_adversarial", out.encoder_adversarial},
                       {"grad_norm", grad_norm},
                       {"noise_grad_norm", noise_grad_norm}});
  return out;
}

LabelerLosses Trainer::labeler_phase_step(const Batch& batch) {
  if (!model_.labeler || !model_.anti_labeler) throw ContractError("labeler_phase_step: classifiers are disabled");
  zero_all_grads();
  Tensor real = real_codes_detached(batch);
  Tensor fake;
  {
    NoGradGuard no_grad;
    fake = model_.generate_codes(rng_, batch.broad, batch.specific, batch.size());
  }
  LabelerLosses out;
  Tensor lab = model_.labeler->loss(real, batch.broad, batch.specific);
  out.labeler = lab.item();
  backward(lab);
  opt_.labeler.step();
  zero_all_grads();
  Tensor anti = model_.anti_labeler->loss(fake, batch.broad, batch.specific);
  out.anti_labeler = anti.item();
  backward(anti);
  opt_.anti_labeler.step();
  zero_all_grads();
  record("labeler", {{"labeler", out.labeler}, {"anti_labeler", out.anti_labeler}});
  return out;
}

void Trainer::train_step(const Batch& batch) {
  ae_phase_step(batch);
  if (model_.style_adversary) style_adversary_phase_step(batch);
  if (config_.use_gan) {
    Tensor real = real_codes_detached(batch);
    for (std::size_t i = 0; i < config_.critic_steps; ++i) critic_phase_step(batch, real);
    generator_phase_step(batch);
  }
  if (model_.labeler) labeler_phase_step(batch);
  ++state_.global_step;
}

std::vector<Batch> Trainer::epoch_batches(std::span<const SentenceRecord> records) {
  const Units units = collect_units(config_.mode, records);
  std::vector<std::size_t> order(units.first.size());
  std::iota(order.begin(), order.end(), 0);
  rng_.shuffle(order);
  std::vector<Batch> out;
  for (std::size_t begin = 0; begin < order.size(); begin += config_.batch_size) {
    if (config_.max_steps_per_epoch > 0 && out.size() == config_.max_steps_per_epoch) break;
    const std::size_t end = std::min(order.size(), begin + config_.batch_size);
    out.push_back(units_batch(units, std::span(order).subspan(begin, end - begin), vocab_, config_.maxlen));
  }
  return out;
}

double Trainer::train_epoch(std::span<const SentenceRecord> train) {
  const auto batches = epoch_batches(train);
  const std::size_t first = log_.steps().size();
  for (const auto& b : batches) train_step(b);
  double total = 0.0;
  std::size_t n = 0;
  for (std::size_t i = first; i < log_.steps().size(); ++i)
    if (log_.steps()[i].phase == "ae") {
      total += log_.steps()[i].values.at("loss").get<double>();
      ++n;
    }
  return total / static_cast<double>(n);
}

double Trainer::validation_loss(std::span<const SentenceRecord> valid) const {
  NoGradGuard no_grad;
  const Units units = collect_units(config_.mode, valid);
  double total = 0.0;
  std::size_t tokens = 0;
  std::vector<std::size_t> order(units.first.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t begin = 0; begin < order.size(); begin += config_.batch_size) {
    const std::size_t end = std::min(order.size(), begin + config_.batch_size);
    Batch b = units_batch(units, std::span(order).subspan(begin, end - begin), vocab_, config_.maxlen);
    std::size_t t = 0;
    const double loss = reconstruction_loss(b, model_.encode(b.tokens), &t).item();
    total += loss * static_cast<double>(t);
    tokens += t;
  }
  return total / static_cast<double>(tokens);
}

void Trainer::fit(std::span<const SentenceRecord> train, std::span<const SentenceRecord> valid,
                  const EpochCallback& on_epoch) {
  while (state_.epoch < config_.epochs && !state_.stopped) {
    double train_loss = 0.0, valid_loss = 0.0;
    try {
      train_loss = train_epoch(train);
      valid_loss = valid.empty() ? train_loss : validation_loss(valid);
      if (!std::isfinite(valid_loss)) throw NumericError("validation loss is not finite");
    } catch (const NumericError& e) {
      Tape::active().clear();
      throw TrainingAborted(std::string("training aborted in epoch ") + std::to_string(state_.epoch + 1) + ": " +
                                e.what() + " (last good epoch " + std::to_string(state_.epoch) + ")",
                            state_.epoch);
    }
    ++state_.epoch;
    if (valid_loss < state_.best_valid) {
      state_.best_valid = valid_loss;
      state_.stale_epochs = 0;
    } else {
      ++state_.stale_epochs;
    }
    if (config_.patience > 0 && state_.stale_epochs >= config_.patience) state_.stopped = true;
    log_.add_epoch({{"epoch", state_.epoch},
                    {"train_ae_loss", train_loss},
                    {"valid_loss", valid_loss},
                    {"best_valid", state_.best_valid},
                    {"stale_epochs", state_.stale_epochs},
                    {"stopped", state_.stopped}});
    spdlog::info("epoch {}: train ae {:.4f}, valid {:.4f}", state_.epoch, train_loss, valid_loss);
    if (on_epoch) on_epoch(*this, state_.epoch);
  }
}

// ---------------------------------------------------------------------------
// Checkpoints

Checkpoint Trainer::checkpoint(const nlohmann::json& extra) const {
  Checkpoint ck;
  ck.header = {{"kind", "xgen-model"},
               {"config", config_.to_json()},
               {"vocab", vocab_.words()},
               {"taxonomy", taxonomy_header(taxonomy_)},
               {"state", state_.to_json()},
               {"rng", rng_to_json(rng_.state())},
               {"fingerprint", fingerprint(config_.to_json())},
               {"seed", config_.seed}};
  nlohmann::json opt = nlohmann::json::object();
  for (const auto& [name, adam] : optimizer_list()) opt[name] = {{"t", adam->state().t}};
  ck.header["optimizers"] = opt;
  for (const auto& [k, v] : extra.items()) ck.header[k] = v;

  add_params(ck, model_.params());
  for (const auto& [name, adam] : optimizer_list()) {
    const auto& st = adam->state();
    for (std::size_t i = 0; i < st.m.size(); ++i) {
      ck.blobs.push_back({"opt." + name + ".m." + std::to_string(i), {st.m[i].size()}, st.m[i]});
      ck.blobs.push_back({"opt." + name + ".v." + std::to_string(i), {st.v[i].size()}, st.v[i]});
    }
  }
  return ck;
}

Trainer Trainer::from_checkpoint(const Checkpoint& ck) {
  const auto& h = ck.header;
  if (!h.contains("kind") || h.at("kind") != "xgen-model") throw IntegrityError("checkpoint: not a model checkpoint");
  try {
    Trainer t(TrainConfig::from_json(h.at("config")), Vocabulary(h.at("vocab").get<std::vector<std::string>>()),
              taxonomy_from_header(h.at("taxonomy")));
    restore_params(ck, t.model_.params());
    for (auto& [name, adam] : t.optimizer_list()) {
      auto& st = adam->state();
      st.t = h.at("optimizers").at(name).at("t").get<std::int64_t>();
      if (!ck.has_blob("opt." + name + ".m.0")) continue;
      st.m.clear();
      st.v.clear();
      for (std::size_t i = 0; i < adam->params().size(); ++i) {
        st.m.push_back(ck.blob("opt." + name + ".m." + std::to_string(i)).values);
        st.v.push_back(ck.blob("opt." + name + ".v." + std::to_string(i)).values);
        if (st.m.back().size() != adam->params()[i].numel())
          throw IntegrityError("checkpoint: optimizer state '" + name + "' does not match the model");
      }
    }
    t.rng_.set_state(rng_from_json(h.at("rng")));
    t.state_ = TrainState::from_json(h.at("state"));
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw IntegrityError(std::string("checkpoint: malformed header: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Entry points

std::pair<std::vector<SentenceRecord>, std::vector<SentenceRecord>> split_validation(
    std::span<const SentenceRecord> train, double fraction, Rng& rng) {
  if (fraction < 0.0 || fraction >= 1.0) throw ConfigError("validation fraction must be in [0, 1)");
  std::vector<std::uint64_t> ids;
  for (const auto& r : train)
    if (r.pair_id) ids.push_back(*r.pair_id);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  rng.shuffle(ids);
  const auto n_valid = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(ids.size())));
  std::vector<std::uint64_t> held(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_valid));
  std::sort(held.begin(), held.end());
  std::pair<std::vector<SentenceRecord>, std::vector<SentenceRecord>> out;
  for (const auto& r : train) {
    const bool is_valid = r.pair_id && std::binary_search(held.begin(), held.end(), *r.pair_id);
    (is_valid ? out.second : out.first).push_back(r);
  }
  return out;
}

namespace {

Trainer run_mode(TrainMode mode, const TrainConfig& config, const Vocabulary& vocab, const ReasonTaxonomy& taxonomy,
                 std::span<const SentenceRecord> train, std::span<const SentenceRecord> valid,
                 const Trainer::EpochCallback& on_epoch) {
  if (config.mode != mode)
    throw ConfigError("config mode is " + std::string(mode_name(config.mode)) + ", expected " +
                      std::string(mode_name(mode)));
  Trainer t(config, vocab, taxonomy);
  t.fit(train, valid, on_epoch);
  return t;
}

}  // namespace

Trainer train_conditional(const TrainConfig& config, const Vocabulary& vocab, const ReasonTaxonomy& taxonomy,
                          std::span<const SentenceRecord> train, std::span<const SentenceRecord> valid,
                          const Trainer::EpochCallback& on_epoch) {
  return run_mode(TrainMode::Conditional, config, vocab, taxonomy, train, valid, on_epoch);
}

Trainer train_style_unaligned(const TrainConfig& config, const Vocabulary& vocab, const ReasonTaxonomy& taxonomy,
                              std::span<const SentenceRecord> train, std::span<const SentenceRecord> valid,
                              const Trainer::EpochCallback& on_epoch) {
  return run_mode(TrainMode::StyleUnaligned, config, vocab, taxonomy, train, valid, on_epoch);
}

Trainer train_style_aligned(const TrainConfig& config, const Vocabulary& vocab, const ReasonTaxonomy& taxonomy,
                            std::span<const SentenceRecord> train, std::span<const SentenceRecord> valid,
                            const Trainer::EpochCallback& on_epoch) {
  return run_mode(TrainMode::StyleAligned, config, vocab, taxonomy, train, valid, on_epoch);
}

}  // namespace xgen
