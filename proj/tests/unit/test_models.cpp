#include <doctest.h>

#include <cmath>
#include <numbers>

#include "grad_suite.hpp"
#include "xgen/error.hpp"
#include "xgen/models.hpp"
#include "xgen/ngram.hpp"
#include "xgen/optim.hpp"

using namespace xgen;
using namespace xgen::testing;

namespace {

TokenBatch batch_of(std::vector<std::vector<std::size_t>> rows) { return TokenBatch::from(rows); }

std::vector<std::size_t> padded(std::vector<std::size_t> ids, std::size_t length) {
  ids.resize(length, Vocabulary::kPad);
  return ids;
}

void check_unit_rows(const Tensor& t) {
  for (std::size_t r = 0; r < t.rows(); ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < t.cols(); ++c) s += t.at(r, c) * t.at(r, c);
    CHECK(std::sqrt(s) == doctest::Approx(1.0).epsilon(1e-9));
  }
}

}  // namespace

TEST_SUITE("models") {

TEST_CASE("token batch helpers") {
  const auto b = batch_of({{1, 5, 2, 0}, {1, 6, 7, 2}});
  CHECK(b.size == 2);
  CHECK(b.length == 4);
  CHECK(b.column(1) == std::vector<std::size_t>{5, 6});
  CHECK(b.mask_column(3).data()[0] == 0.0);
  CHECK(b.mask_column(3).data()[1] == 1.0);
  CHECK(b.effective_length() == 4);
  CHECK(batch_of({{1, 2, 0, 0}}).effective_length() == 2);
  CHECK_THROWS_AS(batch_of({{1, 2}, {1, 2, 0}}), DimensionError);
}

TEST_CASE("encoder codes lie on the unit sphere") {
  Rng rng(1);
  const Tensor table = random_parameter({kGcVocab, kGcEmb}, rng, 0.3);
  const auto enc = Encoder::init(kGcEmb, kGcHidden, kGcCode, rng);
  const auto codes = enc.encode(table, random_tokens(rng, 6, 9));
  CHECK(codes.shape() == Shape{6, kGcCode});
  check_unit_rows(codes);
}

TEST_CASE("encoder ignores trailing padding") {
  Rng rng(2);
  const Tensor table = random_parameter({kGcVocab, kGcEmb}, rng, 0.3);
  const auto enc = Encoder::init(kGcEmb, kGcHidden, kGcCode, rng);
  const std::vector<std::size_t> s{1, 9, 12, 30, 2};
  const auto a = enc.encode(table, batch_of({s}));
  const auto b = enc.encode(table, batch_of({padded(s, 12)}));
  for (std::size_t i = 0; i < kGcCode; ++i) CHECK(a.at(i) == doctest::Approx(b.at(i)).epsilon(1e-12));
}

TEST_CASE("decoder with zero output layer gives log vocabulary loss") {
  Rng rng(3);
  const Tensor table = random_parameter({kGcVocab, kGcEmb}, rng, 0.3);
  auto dec = Decoder::init(kGcEmb, kGcCode, kGcHidden, kGcVocab, rng);
  for (auto& v : dec.output.weight.mutable_data()) v = 0.0;
  for (auto& v : dec.output.bias.mutable_data()) v = 0.0;
  const auto batch = random_tokens(rng, 4, 8);
  const auto r = dec.teacher_forced(table, unit_rows(rng, 4, kGcCode), Tensor(), batch);
  CHECK(r.loss.item() == doctest::Approx(std::log(double(kGcVocab))).epsilon(1e-12));
  CHECK(r.tokens > 0);
}

TEST_CASE("decoder loss ignores padding positions") {
  Rng rng(4);
  const Tensor table = random_parameter({kGcVocab, kGcEmb}, rng, 0.3);
  const auto dec = Decoder::init(kGcEmb, kGcCode, kGcHidden, kGcVocab, rng);
  const Tensor code = unit_rows(rng, 1, kGcCode);
  const std::vector<std::size_t> s{1, 7, 8, 9, 2};
  const auto a = dec.teacher_forced(table, code, Tensor(), batch_of({s}));
  const auto b = dec.teacher_forced(table, code, Tensor(), batch_of({padded(s, 11)}));
  CHECK(a.tokens == 4);
  CHECK(b.tokens == 4);
  CHECK(a.loss.item() == doctest::Approx(b.loss.item()).epsilon(1e-12));
}

TEST_CASE("decoder overfits one sentence and greedy decodes it") {
  Rng rng(5);
  Tensor table = random_parameter({kGcVocab, kGcEmb}, rng, 0.3);
  const auto dec = Decoder::init(kGcEmb, kGcCode, 16, kGcVocab, rng);
  const Tensor code = unit_rows(rng, 1, kGcCode);
  const std::vector<std::size_t> s{1, 11, 23, 5, 41, 17, 2};
  const auto batch = batch_of({s});
  auto params = tensors_of(dec.params());
  params.push_back(table);
  Adam opt(params, AdamHyper{.lr = 0.01});
  double loss = 0.0;
  for (int step = 0; step < 500; ++step) {
    opt.zero_grad();
    const auto r = dec.teacher_forced(table, code, Tensor(), batch);
    loss = r.loss.item();
    backward(r.loss);
    opt.step();
  }
  CHECK(loss < 0.01);
  NoGradGuard guard;
  const auto out = dec.greedy(table, code, Tensor(), 23);
  REQUIRE(out.size() == 1);
  CHECK(out[0] == std::vector<std::size_t>(s.begin() + 1, s.end() - 1));
}

TEST_CASE("greedy output respects maxlen") {
  Rng rng(6);
  const Tensor table = random_parameter({kGcVocab, kGcEmb}, rng, 0.3);
  auto dec = Decoder::init(kGcEmb, kGcCode, kGcHidden, kGcVocab, rng);
  // bias toward a content token so EOS never wins
  for (auto& v : dec.output.bias.mutable_data()) v = 0.0;
  dec.output.bias.mutable_data()[10] = 100.0;
  NoGradGuard guard;
  const auto out = dec.greedy(table, unit_rows(rng, 3, kGcCode), Tensor(), 8);
  for (const auto& row : out) CHECK(row.size() == 6);
}

TEST_CASE("condition embedder gives distinct vectors") {
  Rng rng(7);
  const auto tax = ReasonTaxonomy::lending_default();
  const auto emb = ConditionEmbedder::init(tax, 8, 6, 2, rng);
  std::vector<std::size_t> broad, specific;
  for (std::size_t s = 0; s < tax.specific_count(); ++s) {
    broad.push_back(tax.parent(s));
    specific.push_back(s);
  }
  const auto v = emb.embed(broad, specific);
  CHECK(v.shape() == Shape{tax.specific_count(), 6});
  for (std::size_t i = 0; i < v.rows(); ++i)
    for (std::size_t j = i + 1; j < v.rows(); ++j) {
      double d = 0.0;
      for (std::size_t c = 0; c < v.cols(); ++c) d += std::abs(v.at(i, c) - v.at(j, c));
      CHECK(d > 1e-6);
    }
}

TEST_CASE("one-level embedder ignores the specific reason") {
  Rng rng(8);
  const auto tax = ReasonTaxonomy::lending_default();
  const auto emb = ConditionEmbedder::init(tax, 8, 6, 1, rng);
  const auto credit = tax.specifics_of(0);
  REQUIRE(credit.size() >= 2);
  const std::vector<std::size_t> broad{0, 0};
  const std::vector<std::size_t> specific{credit[0], credit[1]};
  const auto v = emb.embed(broad, specific);
  for (std::size_t c = 0; c < v.cols(); ++c) CHECK(v.at(0, c) == v.at(1, c));
}

TEST_CASE("embedder rejects a specific outside its broad") {
  Rng rng(9);
  const auto tax = ReasonTaxonomy::lending_default();
  const auto emb = ConditionEmbedder::init(tax, 8, 6, 2, rng);
  const std::vector<std::size_t> broad{1};
  const std::vector<std::size_t> specific{tax.specifics_of(0)[0]};
  CHECK_THROWS_AS(emb.embed(broad, specific), TaxonomyError);
}

TEST_CASE("single standard component matches N(0, 1) moments") {
  Rng rng(10);
  auto noise = MixtureNoise::init(1, 4, true, rng);
  for (auto& v : noise.mu.mutable_data()) v = 0.0;
  for (auto& v : noise.rho.mutable_data()) v = std::log(std::numbers::e - 1.0);
  CHECK(noise.sigma().at(0) == doctest::Approx(1.0).epsilon(1e-12));
  const auto s = noise.sample(rng, 20000);
  double m = 0.0, sq = 0.0;
  for (double v : s.z.data()) {
    m += v;
    sq += v * v;
  }
  const double n = static_cast<double>(s.z.numel());
  m /= n;
  CHECK(std::abs(m) < 0.02);
  CHECK(std::abs(sq / n - m * m - 1.0) < 0.03);
}

TEST_CASE("mixture sample has unit gradient with respect to mu") {
  Rng rng(11);
  const auto noise = MixtureNoise::init(3, 5, true, rng);
  const auto s = noise.sample(rng, 40);
  backward(sum(s.z));
  std::vector<double> expected(15, 0.0);
  for (auto k : s.component)
    for (std::size_t d = 0; d < 5; ++d) expected[k * 5 + d] += 1.0;
  for (std::size_t i = 0; i < 15; ++i) CHECK(noise.mu.grad()[i] == doctest::Approx(expected[i]));
  double rho_norm = 0.0;
  for (double g : noise.rho.grad()) rho_norm += std::abs(g);
  CHECK(rho_norm > 0.0);
}

TEST_CASE("disabled mixture draws untracked standard normals") {
  Rng rng(12);
  const auto noise = MixtureNoise::init(3, 5, false, rng);
  const auto s = noise.sample(rng, 4);
  CHECK(s.z.shape() == Shape{4, 5});
  CHECK_FALSE(s.z.requires_grad());
}

TEST_CASE("generator output is unit norm and critic returns one score per row") {
  Rng rng(13);
  const auto noise = MixtureNoise::init(4, 6, true, rng);
  const auto gen = Generator::init(noise, kGcCond, 12, kGcCode, rng);
  const Tensor cond = sample_gaussian(rng, {5, kGcCond});
  const auto fake = gen.forward(noise.sample(rng, 5).z, cond);
  CHECK(fake.shape() == Shape{5, kGcCode});
  check_unit_rows(fake);

  auto critic = Critic::init(kGcCode, kGcCond, 12, rng);
  CHECK(critic.score(fake, cond).shape() == Shape{5, 1});
  critic.clip_weights(0.01);
  CHECK(critic.max_abs_weight() <= 0.01);
}

TEST_CASE("zero-initialized labeler has uniform loss") {
  Rng rng(14);
  const auto tax = ReasonTaxonomy::lending_default();
  auto clf = ReasonClassifier::init(kGcCode, 10, tax.broad_count(), tax.specific_count(), rng);
  for (auto& t : tensors_of(clf.params()))
    for (auto& v : t.mutable_data()) v = 0.0;
  const std::vector<std::size_t> broad{0, 1, 2};
  const std::vector<std::size_t> specific{0, 5, 10};
  const double expected = std::log(double(tax.broad_count())) + std::log(double(tax.specific_count()));
  CHECK(clf.loss(unit_rows(rng, 3, kGcCode), broad, specific).item() == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("style classifier emits two logits per row") {
  Rng rng(15);
  const auto clf = StyleClassifier::init(kGcCode, 8, rng);
  CHECK(clf.logits(unit_rows(rng, 3, kGcCode)).shape() == Shape{3, 2});
}

TEST_CASE("uniform language model has perplexity equal to the outcome count") {
  NgramLm lm(3, 1.0, 37);
  const std::vector<std::vector<std::size_t>> sents{{4, 5, 6}, {7}, {8, 9}};
  CHECK(lm.perplexity_ids(sents) == doctest::Approx(37.0).epsilon(1e-12));
}

TEST_CASE("language model probabilities sum to one") {
  std::vector<SentenceRecord> recs(3);
  recs[0].tokens = tokenize("a b c");
  recs[1].tokens = tokenize("a b d");
  recs[2].tokens = tokenize("b c a");
  const auto vocab = Vocabulary::build(recs);
  std::vector<std::vector<std::string>> sents;
  for (const auto& r : recs) sents.push_back(r.tokens);
  const auto lm = NgramLm::train(sents, vocab, 3, 0.1);
  const std::vector<std::size_t> hist{Vocabulary::kBos, vocab.id("a")};
  double total = 0.0;
  for (std::size_t w = 0; w < vocab.size(); ++w) {
    if (w == Vocabulary::kPad || w == Vocabulary::kBos) continue;
    total += lm.probability(hist, w);
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("trained language model prefers training-like text") {
  CorpusSpec spec;
  spec.count = 300;
  Rng rng(16);
  const auto corpus = generate_synthetic_corpus(spec, rng);
  const auto vocab = Vocabulary::build(corpus);
  std::vector<std::vector<std::string>> train, test, noise;
  for (std::size_t i = 0; i < corpus.size(); ++i) (i < 500 ? train : test).push_back(corpus[i].tokens);
  const auto words = vocab.words();
  for (const auto& s : test) {
    std::vector<std::string> r(s.size());
    for (auto& w : r) w = words[rng.uniform_int(words.size())];
    noise.push_back(r);
  }
  const auto lm = NgramLm::train(train, vocab);
  const double ppl_test = lm.perplexity(test, vocab);
  CHECK(ppl_test < lm.perplexity(noise, vocab));
  CHECK(NgramLm::train(train, vocab).perplexity(test, vocab) == ppl_test);
  CHECK_THROWS_AS((void)lm.perplexity(std::vector<std::vector<std::string>>{}, vocab), ContractError);
}

TEST_CASE("every model component passes 20 gradient checks") {
  for (const auto& r : component_grad_checks(20, 2024)) {
    INFO(r.name);
    CHECK(r.trials >= 20);
    CHECK(r.max_error < 1e-4);
  }
}

}  // TEST_SUITE
