#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "xgen/layers.hpp"
#include "xgen/rng.hpp"
#include "xgen/taxonomy.hpp"
#include "xgen/tensor.hpp"

namespace xgen {

/// A batch of padded id sequences, row-major [size, length].
struct TokenBatch {
  std::size_t size = 0;
  std::size_t length = 0;
  std::vector<std::size_t> ids;

  /// All sequences must share one length.
  static TokenBatch from(std::span<const std::vector<std::size_t>> sequences);

  std::size_t at(std::size_t b, std::size_t t) const { return ids[b * length + t]; }
  std::vector<std::size_t> column(std::size_t t) const;
  /// 1.0 where column t is not PAD, as a [size, 1] constant.
  Tensor mask_column(std::size_t t) const;
  /// One past the last non-PAD position over all rows.
  std::size_t effective_length() const;
};

/// Sentence encoder: shared token embeddings -> GRU -> linear -> unit sphere.
struct Encoder {
  GruCell cell;
  Linear projection;  // hidden -> d_code

  static Encoder init(std::size_t d_emb, std::size_t d_hidden, std::size_t d_code, Rng& rng);
  /// Codes [size, d_code], each row of unit L2 norm. PAD steps leave the
  /// hidden state unchanged, so trailing padding does not affect the code.
  Tensor encode(const Tensor& embedding_table, const TokenBatch& batch) const;
  NamedParams params() const;
};

/// Style- or task-specific GRU decoder.
///
/// Every step sees the previous token's embedding concatenated with a fixed
/// context (latent code, then the condition vector when present). The
/// context projection is computed once per sequence.
struct Decoder {
  GruCell cell;      // input = token embedding
  Tensor w_context;  // [d_code + d_cond, 3H]
  Linear output;     // hidden -> |V|

  static Decoder init(std::size_t d_emb, std::size_t d_context, std::size_t d_hidden, std::size_t vocab_size,
                      Rng& rng);

  struct Result {
    std::vector<Tensor> logits;  // one [size, |V|] tensor per predicted position
    Tensor loss;                 // mean NLL over non-PAD targets
    std::size_t tokens = 0;
  };

  /// Predicts target[t+1] from target[..t]. `condition` may be undefined.
  Result teacher_forced(const Tensor& embedding_table, const Tensor& code, const Tensor& condition,
                        const TokenBatch& target) const;

  /// Argmax decoding from BOS until EOS or maxlen total positions. Returns
  /// the content ids of each row (no BOS, no EOS).
  std::vector<std::vector<std::size_t>> greedy(const Tensor& embedding_table, const Tensor& code,
                                               const Tensor& condition, std::size_t maxlen) const;

  std::size_t context_width() const { return w_context.shape()[0]; }
  NamedParams params() const;
};

/// Two-level reason embedder.
///
///   e_b = broad_table[b], e_s = specific_table[s] (zero in one-level mode)
///   g   = tanh(W_g [e_b ; e_s] + b_g)
///   v   = tanh(W_v [e_b ; g] + b_v)
///
/// The broad embedding feeds both levels.
struct ConditionEmbedder {
  Tensor broad_table;     // [n_broad, d_reason]
  Tensor specific_table;  // [n_specific, d_reason]
  Linear specific_combiner;
  Linear output;
  std::vector<std::size_t> parent;  // specific -> broad
  int levels = 2;                   // 1 or 2

  static ConditionEmbedder init(const ReasonTaxonomy& taxonomy, std::size_t d_reason, std::size_t d_cond, int levels,
                                Rng& rng);
  /// [n, d_cond]. Throws TaxonomyError when a specific is not under its broad.
  Tensor embed(std::span<const std::size_t> broad, std::span<const std::size_t> specific) const;
  std::size_t width() const { return output.out_features(); }
  NamedParams params() const;
};

/// Generator noise source.
///
/// With the mixture enabled, each sample picks a component k uniformly and
/// returns mu_k + softplus(rho_k) * eps, so gradients reach mu and rho. With
/// the mixture disabled, noise is plain N(0, I).
struct MixtureNoise {
  Tensor mu;   // [K, d_noise]
  Tensor rho;  // [K, d_noise]; sigma = softplus(rho) > 0
  bool enabled = true;

  static MixtureNoise init(std::size_t components, std::size_t d_noise, bool enabled, Rng& rng,
                           double initial_sigma = 0.2);
  std::size_t components() const { return mu.shape()[0]; }
  std::size_t width() const { return mu.shape()[1]; }
  Tensor sigma() const { return softplus(rho); }
  NamedParams params() const;

  struct Sample {
    Tensor z;
    std::vector<std::size_t> component;
  };
  Sample sample(Rng& rng, std::size_t batch) const;
};

/// Fake-code generator: MLP over noise (and condition) onto the unit sphere.
struct Generator {
  MixtureNoise noise;
  Mlp mlp;

  static Generator init(const MixtureNoise& noise, std::size_t d_cond, std::size_t d_hidden, std::size_t d_code,
                        Rng& rng);
  Tensor forward(const Tensor& z, const Tensor& condition) const;
  NamedParams params() const;
};

/// Code-space critic; raw score, no output nonlinearity.
struct Critic {
  Mlp mlp;

  static Critic init(std::size_t d_code, std::size_t d_cond, std::size_t d_hidden, Rng& rng);
  /// [n, 1].
  Tensor score(const Tensor& code, const Tensor& condition) const;
  /// Clamps every weight into [-bound, bound].
  void clip_weights(double bound);
  double max_abs_weight() const;
  NamedParams params() const { return mlp.params(); }
};

/// Labeler / anti-labeler: predicts (broad, specific) reasons from a code.
struct ReasonClassifier {
  Mlp mlp;
  std::size_t n_broad = 0;
  std::size_t n_specific = 0;

  static ReasonClassifier init(std::size_t d_code, std::size_t d_hidden, std::size_t n_broad, std::size_t n_specific,
                               Rng& rng);
  std::pair<Tensor, Tensor> logits(const Tensor& code) const;
  /// CE(broad) + CE(specific).
  Tensor loss(const Tensor& code, std::span<const std::size_t> broad, std::span<const std::size_t> specific) const;
  NamedParams params() const { return mlp.params(); }
};

/// Binary style classifier on codes (education = 0, action = 1).
struct StyleClassifier {
  Mlp mlp;

  static StyleClassifier init(std::size_t d_code, std::size_t d_hidden, Rng& rng);
  Tensor logits(const Tensor& code) const { return mlp(code); }
  NamedParams params() const { return mlp.params(); }
};

}  // namespace xgen
