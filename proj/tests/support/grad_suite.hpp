#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "xgen/gradcheck.hpp"
#include "xgen/layers.hpp"
#include "xgen/models.hpp"
#include "xgen/rng.hpp"
#include "xgen/taxonomy.hpp"
#include "xgen/tensor.hpp"

namespace xgen::testing {

struct GradCheckResult {
  std::string name;
  std::size_t trials = 0;
  double max_error = 0.0;
};

// Reduces any tensor to a scalar through fixed random weights so that every
// output coordinate carries a distinct gradient.
inline Tensor weighted_sum(const Tensor& y, Rng& rng) {
  std::vector<double> w(y.numel());
  for (auto& v : w) v = rng.normal();
  return sum(mul(y, Tensor::constant(y.shape(), std::move(w))));
}

inline std::size_t dim(Rng& rng, std::size_t lo, std::size_t hi) { return lo + rng.uniform_int(hi - lo + 1); }

inline Tensor away_from_zero(const Shape& shape, Rng& rng) {
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) {
    x = rng.normal();
    if (std::abs(x) < 0.05) x = x < 0 ? x - 0.1 : x + 0.1;
  }
  return Tensor::parameter(shape, std::move(v));
}

// Runs `trial` for each trial index and keeps the worst error.
inline GradCheckResult repeat(const std::string& name, std::size_t trials, std::uint64_t seed,
                              const std::function<double(Rng&)>& trial) {
  GradCheckResult r{name, trials, 0.0};
  Rng rng(seed);
  for (std::size_t i = 0; i < trials; ++i) {
    Rng t = rng.split();
    r.max_error = std::max(r.max_error, trial(t));
  }
  return r;
}

// Checks d/d(inputs[which]) of weighted_sum(forward_op(kind, inputs)).
inline double op_trial(OpKind kind, std::vector<Tensor> inputs, std::size_t which, const OpArgs& args, Rng& rng) {
  const std::uint64_t wseed = rng.next_u64();
  auto f = [&](const Tensor&) {
    Rng w(wseed);
    return weighted_sum(forward_op(kind, inputs, args), w);
  };
  return grad_check(f, inputs[which]);
}

inline std::vector<GradCheckResult> op_grad_checks(std::size_t trials, std::uint64_t seed) {
  std::vector<GradCheckResult> out;
  for (OpKind kind : all_op_kinds()) {
    const std::string name(op_name(kind));
    switch (kind) {
      case OpKind::MatMul:
        out.push_back(repeat(name, trials, seed, [&](Rng& rng) {
          const std::size_t m = dim(rng, 1, 4), k = dim(rng, 1, 4), n = dim(rng, 1, 4);
          std::vector<Tensor> in{random_parameter({m, k}, rng), random_parameter({k, n}, rng)};
          return std::max(op_trial(kind, in, 0, {}, rng), op_trial(kind, in, 1, {}, rng));
        }));
        break;
      case OpKind::Add:
      case OpKind::Sub:
      case OpKind::Mul:
        out.push_back(repeat(name, trials, seed, [&](Rng& rng) {
          const std::size_t m = dim(rng, 1, 4), n = dim(rng, 2, 4);
          const std::vector<std::pair<Shape, Shape>> layouts{
              {{m, n}, {m, n}}, {{m, n}, {n}}, {{n}, {m, n}}, {{m, n}, {m, 1}}, {{m, 1}, {m, n}}, {{m, 1}, {1, n}}};
          const auto& [sa, sb] = layouts[rng.uniform_int(layouts.size())];
          std::vector<Tensor> in{random_parameter(sa, rng), random_parameter(sb, rng)};
          return std::max(op_trial(kind, in, 0, {}, rng), op_trial(kind, in, 1, {}, rng));
        }));
        break;
      case OpKind::Relu:
        out.push_back(repeat(name, trials, seed, [&](Rng& rng) {
          std::vector<Tensor> in{away_from_zero({dim(rng, 1, 4), dim(rng, 1, 5)}, rng)};
          return op_trial(kind, in, 0, {}, rng);
        }));
        break;
      case OpKind::Concat:
        out.push_back(repeat(name, trials, seed, [&](Rng& rng) {
          const std::size_t m = dim(rng, 1, 4);
          std::vector<Tensor> in;
          const std::size_t parts = dim(rng, 2, 3);
          for (std::size_t p = 0; p < parts; ++p) in.push_back(random_parameter({m, dim(rng, 1, 4)}, rng));
          double worst = 0.0;
          for (std::size_t p = 0; p < parts; ++p) worst = std::max(worst, op_trial(kind, in, p, {}, rng));
          return worst;
        }));
        break;
      case OpKind::Slice:
        out.push_back(repeat(name, trials, seed, [&](Rng& rng) {
          const std::size_t n = dim(rng, 2, 6);
          OpArgs args;
          args.begin = rng.uniform_int(n);
          args.end = args.begin + 1 + rng.uniform_int(n - args.begin);
          std::vector<Tensor> in{random_parameter({dim(rng, 1, 4), n}, rng)};
          return op_trial(kind, in, 0, args, rng);
        }));
        break;
      case OpKind::Embedding:
        out.push_back(repeat(name, trials, seed, [&](Rng& rng) {
          const std::size_t v = dim(rng, 2, 6);
          OpArgs args;
          for (std::size_t i = 0, n = dim(rng, 1, 6); i < n; ++i) args.ids.push_back(rng.uniform_int(v));
          std::vector<Tensor> in{random_parameter({v, dim(rng, 1, 4)}, rng)};
          return op_trial(kind, in, 0, args, rng);
        }));
        break;
      case OpKind::Pick:
        out.push_back(repeat(name, trials, seed, [&](Rng& rng) {
          const std::size_t n = dim(rng, 1, 5), c = dim(rng, 2, 5);
          OpArgs args;
          for (std::size_t i = 0; i < n; ++i) args.ids.push_back(rng.uniform_int(c));
          std::vector<Tensor> in{random_parameter({n, c}, rng)};
          return op_trial(kind, in, 0, args, rng);
        }));
        break;
      default:
        out.push_back(repeat(name, trials, seed, [&](Rng& rng) {
          std::vector<Tensor> in{random_parameter({dim(rng, 1, 4), dim(rng, 1, 5)}, rng)};
          return op_trial(kind, in, 0, {}, rng);
        }));
        break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Model components at small dimensions (d_emb 8, d_code 16, |V| 50).

inline constexpr std::size_t kGcVocab = 50;
inline constexpr std::size_t kGcEmb = 8;
inline constexpr std::size_t kGcHidden = 6;
inline constexpr std::size_t kGcCode = 16;
inline constexpr std::size_t kGcCond = 5;

inline ReasonTaxonomy small_taxonomy() {
  return ReasonTaxonomy({{"credit", {"low score", "short history"}},
                         {"job", {"no job"}},
                         {"income", {"low income", "unverified income"}},
                         {"debt", {"high debt"}}});
}

inline TokenBatch random_tokens(Rng& rng, std::size_t rows, std::size_t length) {
  std::vector<std::vector<std::size_t>> seqs;
  for (std::size_t r = 0; r < rows; ++r) {
    std::vector<std::size_t> s(length, 0);
    const std::size_t n = 1 + rng.uniform_int(length - 2);
    s[0] = 1;
    for (std::size_t t = 1; t <= n; ++t) s[t] = 4 + rng.uniform_int(kGcVocab - 4);
    s[n + 1] = 2;
    seqs.push_back(std::move(s));
  }
  return TokenBatch::from(seqs);
}

inline Tensor unit_rows(Rng& rng, std::size_t n, std::size_t d) { return l2_normalize(sample_gaussian(rng, {n, d})); }

inline Tensor unit_parameter(Rng& rng, std::size_t n, std::size_t d) {
  const Tensor u = unit_rows(rng, n, d);
  return Tensor::parameter({n, d}, std::vector<double>(u.data().begin(), u.data().end()));
}

// Checks f against every tensor in `params`; f must rebuild its output from
// the same handles on each call.
inline double params_trial(const std::vector<Tensor>& params, const std::function<Tensor()>& f) {
  double worst = 0.0;
  for (const auto& p : params) worst = std::max(worst, grad_check([&](const Tensor&) { return f(); }, p));
  return worst;
}

inline std::vector<GradCheckResult> component_grad_checks(std::size_t trials, std::uint64_t seed) {
  std::vector<GradCheckResult> out;

  out.push_back(repeat("linear", trials, seed, [](Rng& rng) {
    const Linear lin = Linear::init(4, 3, rng);
    const Tensor x = sample_gaussian(rng, {3, 4});
    const std::uint64_t w = rng.next_u64();
    return params_trial(tensors_of(lin.params()), [&] {
      Rng r(w);
      return weighted_sum(lin(x), r);
    });
  }));

  out.push_back(repeat("mlp", trials, seed, [](Rng& rng) {
    const Mlp mlp = Mlp::init({4, 5, 5, 3}, rng);
    const Tensor x = sample_gaussian(rng, {3, 4});
    const std::uint64_t w = rng.next_u64();
    return params_trial(tensors_of(mlp.params()), [&] {
      Rng r(w);
      return weighted_sum(mlp(x), r);
    });
  }));

  out.push_back(repeat("gru_cell", trials, seed, [](Rng& rng) {
    const GruCell cell = GruCell::init(4, kGcHidden, rng);
    const Tensor x = sample_gaussian(rng, {2, 4});
    Tensor h = random_parameter({2, kGcHidden}, rng, 0.5);
    const std::uint64_t w = rng.next_u64();
    auto params = tensors_of(cell.params());
    params.push_back(h);
    return params_trial(params, [&] {
      Rng r(w);
      return weighted_sum(cell.step(cell.input_projection(x), h), r);
    });
  }));

  out.push_back(repeat("encoder", trials, seed, [](Rng& rng) {
    const Tensor table = random_parameter({kGcVocab, kGcEmb}, rng, 0.3);
    const Encoder enc = Encoder::init(kGcEmb, kGcHidden, kGcCode, rng);
    const TokenBatch batch = random_tokens(rng, 2, 7);
    const std::uint64_t w = rng.next_u64();
    auto params = tensors_of(enc.params());
    params.push_back(table);
    return params_trial(params, [&] {
      Rng r(w);
      return weighted_sum(enc.encode(table, batch), r);
    });
  }));

  out.push_back(repeat("decoder", trials, seed, [](Rng& rng) {
    const Tensor table = random_parameter({kGcVocab, kGcEmb}, rng, 0.3);
    const Decoder dec = Decoder::init(kGcEmb, kGcCode + kGcCond, kGcHidden, kGcVocab, rng);
    const TokenBatch batch = random_tokens(rng, 2, 6);
    Tensor code = unit_parameter(rng, 2, kGcCode);
    const Tensor cond = sample_gaussian(rng, {2, kGcCond});
    auto params = tensors_of(dec.params());
    params.push_back(table);
    params.push_back(code);
    return params_trial(params, [&] { return dec.teacher_forced(table, code, cond, batch).loss; });
  }));

  out.push_back(repeat("condition_embedder", trials, seed, [](Rng& rng) {
    const auto tax = small_taxonomy();
    const int levels = rng.uniform_int(2) == 0 ? 1 : 2;
    const ConditionEmbedder emb = ConditionEmbedder::init(tax, 4, kGcCond, levels, rng);
    std::vector<std::size_t> broad, specific;
    for (int i = 0; i < 3; ++i) {
      const std::size_t s = rng.uniform_int(tax.specific_count());
      specific.push_back(s);
      broad.push_back(tax.parent(s));
    }
    const std::uint64_t w = rng.next_u64();
    return params_trial(tensors_of(emb.params()), [&] {
      Rng r(w);
      return weighted_sum(emb.embed(broad, specific), r);
    });
  }));

  out.push_back(repeat("mixture_noise", trials, seed, [](Rng& rng) {
    const MixtureNoise noise = MixtureNoise::init(3, 4, true, rng);
    const std::uint64_t draw = rng.next_u64(), w = rng.next_u64();
    return params_trial(tensors_of(noise.params()), [&] {
      Rng d(draw), r(w);
      return weighted_sum(noise.sample(d, 5).z, r);
    });
  }));

  out.push_back(repeat("generator", trials, seed, [](Rng& rng) {
    const MixtureNoise noise = MixtureNoise::init(3, 4, true, rng);
    const Generator gen = Generator::init(noise, kGcCond, 7, kGcCode, rng);
    const Tensor cond = sample_gaussian(rng, {3, kGcCond});
    const std::uint64_t draw = rng.next_u64(), w = rng.next_u64();
    return params_trial(tensors_of(gen.params()), [&] {
      Rng d(draw), r(w);
      return weighted_sum(gen.forward(gen.noise.sample(d, 3).z, cond), r);
    });
  }));

  out.push_back(repeat("critic", trials, seed, [](Rng& rng) {
    const Critic critic = Critic::init(kGcCode, kGcCond, 7, rng);
    Tensor code = unit_parameter(rng, 3, kGcCode);
    const Tensor cond = sample_gaussian(rng, {3, kGcCond});
    auto params = tensors_of(critic.params());
    params.push_back(code);
    return params_trial(params, [&] { return mean(critic.score(code, cond)); });
  }));

  out.push_back(repeat("reason_classifier", trials, seed, [](Rng& rng) {
    const auto tax = small_taxonomy();
    const ReasonClassifier clf = ReasonClassifier::init(kGcCode, 7, tax.broad_count(), tax.specific_count(), rng);
    const Tensor code = unit_rows(rng, 4, kGcCode);
    std::vector<std::size_t> broad, specific;
    for (int i = 0; i < 4; ++i) {
      specific.push_back(rng.uniform_int(tax.specific_count()));
      broad.push_back(tax.parent(specific.back()));
    }
    return params_trial(tensors_of(clf.params()), [&] { return clf.loss(code, broad, specific); });
  }));

  out.push_back(repeat("style_classifier", trials, seed, [](Rng& rng) {
    const StyleClassifier clf = StyleClassifier::init(kGcCode, 7, rng);
    const Tensor code = unit_rows(rng, 4, kGcCode);
    std::vector<std::size_t> style;
    for (int i = 0; i < 4; ++i) style.push_back(rng.uniform_int(2));
    return params_trial(tensors_of(clf.params()), [&] { return cross_entropy(clf.logits(code), style); });
  }));

  return out;
}

}  // namespace xgen::testing
