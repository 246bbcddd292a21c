#include "xgen/training.hpp"

#include "xgen/gradcheck.hpp"

namespace xgen {

Batch make_batch(std::span<const SentenceRecord> records, const Vocabulary& vocab, std::size_t maxlen) {
  if (records.empty()) throw ContractError("make_batch: empty record span");
  Batch b;
  std::vector<std::vector<std::size_t>> seqs;
  seqs.reserve(records.size());
  for (const auto& r : records) {
    seqs.push_back(encode_sentence(r.tokens, vocab, maxlen));
    b.broad.push_back(r.broad);
    b.specific.push_back(r.specific);
    b.style.push_back(r.style);
  }
  b.tokens = TokenBatch::from(seqs);
  return b;
}

Batch make_pair_batch(std::span<const SentenceRecord> first, std::span<const SentenceRecord> second,
                      const Vocabulary& vocab, std::size_t maxlen) {
  if (first.size() != second.size())
    throw ContractError("make_pair_batch: " + std::to_string(first.size()) + " vs " + std::to_string(second.size()) +
                        " records");
  for (std::size_t i = 0; i < first.size(); ++i) {
    if (!first[i].pair_id || !second[i].pair_id || *first[i].pair_id != *second[i].pair_id)
      throw ContractError("make_pair_batch: record " + std::to_string(i) + " is unpaired");
    if (first[i].style == second[i].style)
      throw ContractError("make_pair_batch: record " + std::to_string(i) + " pairs two sentences of one style");
  }
  Batch b = make_batch(first, vocab, maxlen);
  b.partner = make_batch(second, vocab, maxlen).tokens;
  return b;
}

AraeModel AraeModel::init(const TrainConfig& config, std::size_t vocab_size, const ReasonTaxonomy& taxonomy,
                          Rng& rng) {
  config.validate();
  AraeModel m;
  m.config = config;
  const std::size_t dc = config.condition_width();
  m.embedding = random_parameter({vocab_size, config.d_emb}, rng, 0.1);
  m.encoder = Encoder::init(config.d_emb, config.d_hidden, config.d_code, rng);
  const std::size_t n_decoders = config.mode == TrainMode::Conditional ? 1 : 2;
  const std::size_t d_context = config.d_code + (config.condition_decoder ? dc : 0);
  for (std::size_t i = 0; i < n_decoders; ++i)
    m.decoders.push_back(Decoder::init(config.d_emb, d_context, config.d_hidden, vocab_size, rng));
  if (config.condition_levels > 0)
    m.condition = ConditionEmbedder::init(taxonomy, config.d_reason, config.d_cond, config.condition_levels, rng);
  auto noise = MixtureNoise::init(config.components, config.d_noise, config.use_gm, rng);
  m.generator = Generator::init(noise, config.condition_generator ? dc : 0, config.gan_hidden, config.d_code, rng);
  m.critic = Critic::init(config.d_code, config.condition_critic ? dc : 0, config.gan_hidden, rng);
  m.critic.clip_weights(config.clip_bound);
  if (config.classifiers_active()) {
    m.labeler = ReasonClassifier::init(config.d_code, config.clf_hidden, taxonomy.broad_count(),
                                       taxonomy.specific_count(), rng);
    m.anti_labeler = ReasonClassifier::init(config.d_code, config.clf_hidden, taxonomy.broad_count(),
                                            taxonomy.specific_count(), rng);
  }
  if (config.mode == TrainMode::StyleUnaligned)
    m.style_adversary = StyleClassifier::init(config.d_code, config.clf_hidden, rng);
  return m;
}

const Decoder& AraeModel::decoder_for(Style style) const {
  if (decoders.size() == 1) return decoders[0];
  return decoders[style == Style::Education ? 0 : 1];
}

Tensor AraeModel::conditions(std::span<const std::size_t> broad, std::span<const std::size_t> specific) const {
  if (!condition) return {};
  return condition->embed(broad, specific);
}

Tensor AraeModel::generate_codes(Rng& rng, std::span<const std::size_t> broad, std::span<const std::size_t> specific,
                                 std::size_t n) const {
  const std::size_t rows = broad.empty() ? n : broad.size();
  if (rows == 0) throw ContractError("generate_codes: nothing to generate");
  Tensor v;
  if (condition && config.condition_generator) {
    if (broad.empty()) throw ContractError("generate_codes: conditioned model needs labels");
    v = conditions(broad, specific);
  }
  auto z = generator.noise.sample(rng, rows).z;
  return generator.forward(z, v);
}

std::vector<std::vector<std::size_t>> AraeModel::generate(Rng& rng, std::span<const std::size_t> broad,
                                                          std::span<const std::size_t> specific) const {
  NoGradGuard no_grad;
  Tensor codes = generate_codes(rng, broad, specific, broad.size());
  Tensor v = condition && config.condition_decoder ? conditions(broad, specific) : Tensor{};
  return decoders[0].greedy(embedding, codes, v, config.maxlen);
}

std::vector<std::vector<std::size_t>> AraeModel::transfer(const TokenBatch& batch, Style target) const {
  if (decoders.size() != 2) throw ContractError("transfer: model has no style decoders");
  NoGradGuard no_grad;
  return decoder_for(target).greedy(embedding, encode(batch), Tensor{}, config.maxlen);
}

NamedParams AraeModel::encoder_params() const {
  NamedParams out{{"embedding", embedding}};
  append(out, "encoder", encoder.params());
  return out;
}

NamedParams AraeModel::autoencoder_params() const {
  NamedParams out = encoder_params();
  if (decoders.size() == 1) {
    append(out, "decoder", decoders[0].params());
  } else {
    append(out, "decoder_education", decoders[0].params());
    append(out, "decoder_action", decoders[1].params());
  }
  if (condition) append(out, "condition", condition->params());
  return out;
}

NamedParams AraeModel::params() const {
  NamedParams out = autoencoder_params();
  append(out, "generator", generator.params());
  append(out, "critic", critic.params());
  if (labeler) append(out, "labeler", labeler->params());
  if (anti_labeler) append(out, "anti_labeler", anti_labeler->params());
  if (style_adversary) append(out, "style_adversary", style_adversary->params());
  return out;
}

}  // namespace xgen
