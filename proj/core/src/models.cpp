#include "xgen/models.hpp"

#include <algorithm>
#include <cmath>

#include "xgen/error.hpp"
#include "xgen/gradcheck.hpp"
#include "xgen/vocab.hpp"

namespace xgen {

// ---------------------------------------------------------------------------
// TokenBatch

TokenBatch TokenBatch::from(std::span<const std::vector<std::size_t>> sequences) {
  if (sequences.empty()) throw ContractError("TokenBatch: empty batch");
  TokenBatch b;
  b.size = sequences.size();
  b.length = sequences[0].size();
  if (b.length == 0) throw ContractError("TokenBatch: zero-length sequence");
  b.ids.reserve(b.size * b.length);
  for (const auto& s : sequences) {
    if (s.size() != b.length)
      throw DimensionError("TokenBatch: sequence lengths differ (" + std::to_string(s.size()) + " vs " +
                           std::to_string(b.length) + ")");
    b.ids.insert(b.ids.end(), s.begin(), s.end());
  }
  return b;
}

std::vector<std::size_t> TokenBatch::column(std::size_t t) const {
  std::vector<std::size_t> out(size);
  for (std::size_t b = 0; b < size; ++b) out[b] = at(b, t);
  return out;
}

Tensor TokenBatch::mask_column(std::size_t t) const {
  std::vector<double> m(size);
  for (std::size_t b = 0; b < size; ++b) m[b] = at(b, t) == Vocabulary::kPad ? 0.0 : 1.0;
  return Tensor::constant({size, 1}, std::move(m));
}

std::size_t TokenBatch::effective_length() const {
  std::size_t eff = 0;
  for (std::size_t b = 0; b < size; ++b)
    for (std::size_t t = length; t-- > 0;)
      if (at(b, t) != Vocabulary::kPad) {
        eff = std::max(eff, t + 1);
        break;
      }
  return eff;
}

namespace {

bool all_ones(const Tensor& mask) {
  return std::all_of(mask.data().begin(), mask.data().end(), [](double v) { return v == 1.0; });
}

Tensor with_condition(const Tensor& x, const Tensor& condition) {
  return condition.defined() ? concat({x, condition}) : x;
}

}  // namespace

// ---------------------------------------------------------------------------
// Encoder

Encoder Encoder::init(std::size_t d_emb, std::size_t d_hidden, std::size_t d_code, Rng& rng) {
  Encoder e;
  e.cell = GruCell::init(d_emb, d_hidden, rng);
  e.projection = Linear::init(d_hidden, d_code, rng);
  return e;
}

Tensor Encoder::encode(const Tensor& table, const TokenBatch& batch) const {
  for (std::size_t b = 0; b < batch.size; ++b) {
    bool any = false;
    for (std::size_t t = 0; t < batch.length && !any; ++t) any = batch.at(b, t) != Vocabulary::kPad;
    if (!any) throw ContractError("encode_sequence: row " + std::to_string(b) + " is all PAD");
  }
  const std::size_t eff = batch.effective_length();
  Tensor h = Tensor::zeros({batch.size, cell.hidden()});
  for (std::size_t t = 0; t < eff; ++t) {
    const auto col = batch.column(t);
    Tensor next = cell.step(cell.input_projection(embedding(table, col)), h);
    Tensor m = batch.mask_column(t);
    h = all_ones(m) ? next : add(h, mul(m, sub(next, h)));
  }
  return l2_normalize(projection(h));
}

NamedParams Encoder::params() const {
  NamedParams out;
  append(out, "cell", cell.params());
  append(out, "projection", projection.params());
  return out;
}

// ---------------------------------------------------------------------------
// Decoder

Decoder Decoder::init(std::size_t d_emb, std::size_t d_context, std::size_t d_hidden, std::size_t vocab_size,
                      Rng& rng) {
  Decoder d;
  d.cell = GruCell::init(d_emb, d_hidden, rng);
  d.w_context = uniform_parameter({d_context, 3 * d_hidden}, 1.0 / std::sqrt(static_cast<double>(d_hidden)), rng);
  d.output = Linear::init(d_hidden, vocab_size, rng);
  return d;
}

Decoder::Result Decoder::teacher_forced(const Tensor& table, const Tensor& code, const Tensor& condition,
                                        const TokenBatch& target) const {
  const Tensor context = with_condition(code, condition);
  if (context.rows() != target.size || context.cols() != context_width())
    throw DimensionError("decode_teacher_forced: context " + shape_str(context.shape()) + " vs batch of " +
                         std::to_string(target.size) + " and context width " + std::to_string(context_width()));
  for (std::size_t b = 0; b < target.size; ++b)
    if (target.at(b, 0) != Vocabulary::kBos) throw ContractError("decode_teacher_forced: target must begin with BOS");

  const Tensor context_proj = matmul(context, w_context);
  Tensor h = Tensor::zeros({target.size, cell.hidden()});
  Result res;
  Tensor total;
  const std::size_t eff = target.effective_length();
  for (std::size_t t = 0; t + 1 < eff; ++t) {
    const auto next = target.column(t + 1);
    std::vector<double> mask(target.size);
    std::size_t live = 0;
    for (std::size_t b = 0; b < target.size; ++b) {
      mask[b] = next[b] == Vocabulary::kPad ? 0.0 : 1.0;
      live += next[b] != Vocabulary::kPad;
    }
    if (live == 0) break;
    const auto cur = target.column(t);
    h = cell.step(add(cell.input_projection(embedding(table, cur)), context_proj), h);
    Tensor logits = output(h);
    res.logits.push_back(logits);
    Tensor ll = sum(mul(pick(log_softmax(logits), next), Tensor::constant({target.size}, std::move(mask))));
    total = total.defined() ? add(total, ll) : ll;
    res.tokens += live;
  }
  if (res.tokens == 0) throw ContractError("decode_teacher_forced: no target tokens after BOS");
  res.loss = scale(total, -1.0 / static_cast<double>(res.tokens));
  return res;
}

std::vector<std::vector<std::size_t>> Decoder::greedy(const Tensor& table, const Tensor& code,
                                                      const Tensor& condition, std::size_t maxlen) const {
  NoGradGuard no_grad;
  const Tensor context = with_condition(code, condition);
  if (context.cols() != context_width())
    throw DimensionError("decode_greedy: context width " + std::to_string(context.cols()) + ", expected " +
                         std::to_string(context_width()));
  const std::size_t n = context.rows();
  const std::size_t max_content = maxlen >= 2 ? maxlen - 2 : 0;
  const Tensor context_proj = matmul(context, w_context);
  Tensor h = Tensor::zeros({n, cell.hidden()});
  std::vector<std::size_t> current(n, Vocabulary::kBos);
  std::vector<std::vector<std::size_t>> out(n);
  std::vector<bool> done(n, max_content == 0);
  std::size_t remaining = max_content == 0 ? 0 : n;
  while (remaining > 0) {
    h = cell.step(add(cell.input_projection(embedding(table, current)), context_proj), h);
    const auto next = argmax_rows(output(h));
    for (std::size_t b = 0; b < n; ++b) {
      if (done[b]) continue;
      if (next[b] == Vocabulary::kEos) {
        done[b] = true;
        --remaining;
        continue;
      }
      out[b].push_back(next[b]);
      if (out[b].size() == max_content) {
        done[b] = true;
        --remaining;
      }
    }
    current = next;
  }
  return out;
}

NamedParams Decoder::params() const {
  NamedParams out;
  append(out, "cell", cell.params());
  out.emplace_back("w_context", w_context);
  append(out, "output", output.params());
  return out;
}

// ---------------------------------------------------------------------------
// ConditionEmbedder

ConditionEmbedder ConditionEmbedder::init(const ReasonTaxonomy& taxonomy, std::size_t d_reason, std::size_t d_cond,
                                          int levels, Rng& rng) {
  if (levels != 1 && levels != 2) throw ConfigError("condition embedder: levels must be 1 or 2");
  ConditionEmbedder c;
  c.broad_table = random_parameter({taxonomy.broad_count(), d_reason}, rng, 1.0);
  c.specific_table = random_parameter({taxonomy.specific_count(), d_reason}, rng, 1.0);
  c.specific_combiner = Linear::init(2 * d_reason, d_cond, rng);
  c.output = Linear::init(d_reason + d_cond, d_cond, rng);
  for (std::size_t s = 0; s < taxonomy.specific_count(); ++s) c.parent.push_back(taxonomy.parent(s));
  c.levels = levels;
  return c;
}

Tensor ConditionEmbedder::embed(std::span<const std::size_t> broad, std::span<const std::size_t> specific) const {
  if (broad.size() != specific.size() || broad.empty())
    throw DimensionError("embed_conditions: " + std::to_string(broad.size()) + " broad vs " +
                         std::to_string(specific.size()) + " specific ids");
  for (std::size_t i = 0; i < broad.size(); ++i) {
    if (specific[i] >= parent.size())
      throw TaxonomyError("embed_conditions: specific id " + std::to_string(specific[i]) + " out of range");
    if (parent[specific[i]] != broad[i])
      throw TaxonomyError("embed_conditions: specific id " + std::to_string(specific[i]) +
                          " is not under broad id " + std::to_string(broad[i]));
  }
  Tensor e_broad = embedding(broad_table, broad);
  Tensor e_specific =
      levels == 2 ? embedding(specific_table, specific) : Tensor::zeros({broad.size(), specific_table.cols()});
  Tensor g = tanh(specific_combiner(concat({e_broad, e_specific})));
  return tanh(output(concat({e_broad, g})));
}

NamedParams ConditionEmbedder::params() const {
  NamedParams out{{"broad_table", broad_table}, {"specific_table", specific_table}};
  append(out, "specific_combiner", specific_combiner.params());
  append(out, "output", output.params());
  return out;
}

// ---------------------------------------------------------------------------
// Noise, generator, critic, classifiers

MixtureNoise MixtureNoise::init(std::size_t components, std::size_t d_noise, bool enabled, Rng& rng,
                                double initial_sigma) {
  if (components == 0) throw ConfigError("mixture noise: need at least one component");
  MixtureNoise m;
  m.mu = uniform_parameter({components, d_noise}, 1.0, rng);
  const double rho0 = std::log(std::expm1(initial_sigma));
  m.rho = Tensor::parameter({components, d_noise}, std::vector<double>(components * d_noise, rho0));
  m.enabled = enabled;
  return m;
}

NamedParams MixtureNoise::params() const { return {{"mu", mu}, {"rho", rho}}; }

MixtureNoise::Sample MixtureNoise::sample(Rng& rng, std::size_t batch) const {
  Sample s;
  if (!enabled) {
    s.z = sample_gaussian(rng, {batch, width()});
    return s;
  }
  s.component.resize(batch);
  for (auto& k : s.component) k = rng.uniform_int(components());
  Tensor eps = sample_gaussian(rng, {batch, width()});
  s.z = add(embedding(mu, s.component), mul(softplus(embedding(rho, s.component)), eps));
  return s;
}

Generator Generator::init(const MixtureNoise& noise, std::size_t d_cond, std::size_t d_hidden, std::size_t d_code,
                          Rng& rng) {
  Generator g;
  g.noise = noise;
  g.mlp = Mlp::init({noise.width() + d_cond, d_hidden, d_hidden, d_code}, rng);
  return g;
}

Tensor Generator::forward(const Tensor& z, const Tensor& condition) const {
  return l2_normalize(mlp(with_condition(z, condition)));
}

NamedParams Generator::params() const {
  NamedParams out;
  if (noise.enabled) append(out, "noise", noise.params());
  append(out, "mlp", mlp.params());
  return out;
}

Critic Critic::init(std::size_t d_code, std::size_t d_cond, std::size_t d_hidden, Rng& rng) {
  return {Mlp::init({d_code + d_cond, d_hidden, d_hidden, 1}, rng)};
}

Tensor Critic::score(const Tensor& code, const Tensor& condition) const { return mlp(with_condition(code, condition)); }

void Critic::clip_weights(double bound) {
  for (auto& t : tensors_of(mlp.params()))
    for (auto& w : t.mutable_data()) w = std::clamp(w, -bound, bound);
}

double Critic::max_abs_weight() const {
  double m = 0.0;
  for (const auto& t : tensors_of(mlp.params()))
    for (double w : t.data()) m = std::max(m, std::abs(w));
  return m;
}

ReasonClassifier ReasonClassifier::init(std::size_t d_code, std::size_t d_hidden, std::size_t n_broad,
                                        std::size_t n_specific, Rng& rng) {
  return {Mlp::init({d_code, d_hidden, n_broad + n_specific}, rng), n_broad, n_specific};
}

std::pair<Tensor, Tensor> ReasonClassifier::logits(const Tensor& code) const {
  Tensor all = mlp(code);
  return {slice(all, 0, n_broad), slice(all, n_broad, n_broad + n_specific)};
}

Tensor ReasonClassifier::loss(const Tensor& code, std::span<const std::size_t> broad,
                              std::span<const std::size_t> specific) const {
  auto [b, s] = logits(code);
  return add(cross_entropy(b, broad), cross_entropy(s, specific));
}

StyleClassifier StyleClassifier::init(std::size_t d_code, std::size_t d_hidden, Rng& rng) {
  return {Mlp::init({d_code, d_hidden, 2}, rng)};
}

}  // namespace xgen
