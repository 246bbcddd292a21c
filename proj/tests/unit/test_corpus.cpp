#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "xgen/corpus.hpp"
#include "xgen/error.hpp"
#include "xgen/taxonomy.hpp"
#include "xgen/vocab.hpp"

using namespace xgen;

namespace {

const std::vector<SentenceRecord>& default_corpus() {
  static const std::vector<SentenceRecord> corpus = [] {
    CorpusSpec spec;
    Rng rng(spec.seed);
    return generate_synthetic_corpus(spec, rng);
  }();
  return corpus;
}

std::filesystem::path temp_path(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "xgen_unit_corpus";
  std::filesystem::create_directories(dir);
  return dir / name;
}

SentenceRecord make_record(const std::string& text) {
  SentenceRecord r;
  r.tokens = tokenize(text);
  return r;
}

}  // namespace

TEST_SUITE("corpus") {

TEST_CASE("tokenize lowercases and keeps inner apostrophes and hyphens") {
  CHECK(tokenize("The applicant's credit-score is LOW.") ==
        std::vector<std::string>{"the", "applicant's", "credit-score", "is", "low"});
  CHECK(tokenize("  ").empty());
  CHECK(join_tokens(std::vector<std::string>{"a", "b"}) == "a b");
}

TEST_CASE("lending taxonomy invariants") {
  const auto tax = ReasonTaxonomy::lending_default();
  CHECK(tax.combination_count() < 100);
  CHECK_NOTHROW(tax.require_core_reasons());
  for (std::size_t s = 0; s < tax.specific_count(); ++s) {
    CHECK(tax.parent(s) < tax.broad_count());
    CHECK_NOTHROW(tax.check_pair(tax.parent(s), s));
  }
  CHECK(ReasonTaxonomy::from_json(tax.to_json()) == tax);
}

TEST_CASE("taxonomy rejects duplicates and parent mismatches") {
  CHECK_THROWS_AS(ReasonTaxonomy({{"a", {"x"}}, {"a", {"y"}}}), ConfigError);
  CHECK_THROWS_AS(ReasonTaxonomy({{"a", {"x"}}, {"b", {"x"}}}), ConfigError);
  const ReasonTaxonomy tax({{"a", {"x"}}, {"b", {"y"}}});
  CHECK_THROWS_AS(tax.check_pair(0, 1), TaxonomyError);
}

TEST_CASE("default corpus has 2432 pairs") {
  const auto& corpus = default_corpus();
  CHECK(corpus.size() == 2 * 2432);
  std::map<std::uint64_t, std::vector<const SentenceRecord*>> pairs;
  for (const auto& r : corpus) {
    REQUIRE(r.pair_id.has_value());
    pairs[*r.pair_id].push_back(&r);
  }
  CHECK(pairs.size() == 2432);
  for (const auto& [id, recs] : pairs) {
    REQUIRE(recs.size() == 2);
    CHECK(recs[0]->style != recs[1]->style);
    CHECK(recs[0]->broad == recs[1]->broad);
    CHECK(recs[0]->specific == recs[1]->specific);
  }
}

TEST_CASE("corpus records respect the taxonomy and maxlen") {
  const auto tax = ReasonTaxonomy::lending_default();
  for (const auto& r : default_corpus()) {
    CHECK(tax.parent(r.specific) == r.broad);
    CHECK(r.tokens.size() + 2 <= 23);
    CHECK(!r.tokens.empty());
  }
}

TEST_CASE("generation is deterministic per seed") {
  CorpusSpec spec;
  spec.count = 1;
  Rng a(3), b(3);
  CHECK(generate_synthetic_corpus(spec, a) == generate_synthetic_corpus(spec, b));
}

TEST_CASE("credit is the most frequent broad reason and the core four lead") {
  const auto tax = ReasonTaxonomy::lending_default();
  std::vector<std::size_t> counts(tax.broad_count(), 0);
  for (const auto& r : default_corpus()) ++counts[r.broad];
  std::vector<std::size_t> order(tax.broad_count());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return counts[a] > counts[b]; });
  CHECK(tax.broad_name(order[0]) == "credit");
  std::set<std::string> top4;
  for (std::size_t i = 0; i < 4; ++i) top4.insert(tax.broad_name(order[i]));
  CHECK(top4 == std::set<std::string>{"credit", "job", "debt", "income"});
}

TEST_CASE("spec validation rejects bad settings") {
  CorpusSpec spec;
  spec.maxlen = 19;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec = CorpusSpec{};
  spec.count = 0;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec = CorpusSpec{};
  spec.templates.phrases.erase(spec.templates.phrases.begin());
  CHECK_THROWS_AS(spec.validate(), ConfigError);
}

TEST_CASE("vocabulary with min_count") {
  const std::vector<SentenceRecord> train{make_record("a b"), make_record("a c")};
  const auto v2 = Vocabulary::build(train, 2);
  CHECK(v2.size() == Vocabulary::kReserved + 1);
  CHECK(v2.contains("a"));
  CHECK(v2.id("b") == Vocabulary::kUnk);
  CHECK(v2.id("c") == Vocabulary::kUnk);

  const auto v1 = Vocabulary::build(train, 1);
  for (const auto& w : {"a", "b", "c"}) CHECK(v1.id(w) != Vocabulary::kUnk);
  CHECK(v1.token(Vocabulary::kPad) != v1.token(Vocabulary::kBos));
}

TEST_CASE("encode_sentence layout") {
  const auto vocab = Vocabulary::build(std::vector<SentenceRecord>{make_record("low credit")});
  const std::vector<std::string> s{"low", "credit"};
  const auto ids = encode_sentence(s, vocab, 6);
  CHECK(ids == std::vector<std::size_t>{Vocabulary::kBos, vocab.id("low"), vocab.id("credit"), Vocabulary::kEos,
                                        Vocabulary::kPad, Vocabulary::kPad});
  CHECK(valid_layout(ids));
  const std::vector<std::string> unk{"low", "zebra"};
  CHECK(encode_sentence(unk, vocab, 6)[2] == Vocabulary::kUnk);
  CHECK_THROWS_AS(encode_sentence(std::vector<std::string>{}, vocab, 6), ContractError);
}

TEST_CASE("encode_sentence truncates overlong input") {
  const auto vocab = Vocabulary::build(std::vector<SentenceRecord>{make_record("a b c d e")});
  const auto ids = encode_sentence(tokenize("a b c d e"), vocab, 5);
  CHECK(ids.size() == 5);
  CHECK(valid_layout(ids));
  CHECK(decode_ids(ids, vocab) == std::vector<std::string>{"a", "b", "c"});
}

TEST_CASE("decode inverts encode on random in-vocab sentences") {
  const auto& corpus = default_corpus();
  const auto vocab = Vocabulary::build(corpus);
  const auto words = vocab.words();
  Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::string> s(1 + rng.uniform_int(20));
    for (auto& w : s) w = words[rng.uniform_int(words.size())];
    CHECK(decode_ids(encode_sentence(s, vocab, 23), vocab) == s);
  }
}

TEST_CASE("split protocols") {
  const auto& corpus = default_corpus();
  const auto tax = ReasonTaxonomy::lending_default();
  Rng rng(11);
  const auto idx = split_protocols(corpus, tax, rng);
  CHECK(idx.all_content.size() == 100);
  CHECK(idx.limited_reasons.size() == 100);
  CHECK(idx.credit_only.size() == 100);

  const std::size_t credit = tax.broad_id("credit");
  for (auto i : idx.credit_only) CHECK(corpus[i].broad == credit);
  std::set<std::size_t> limited;
  for (auto n : kLimitedReasons) limited.insert(tax.broad_id(n));
  for (auto i : idx.limited_reasons) CHECK(limited.count(corpus[i].broad) == 1);

  std::set<std::uint64_t> train_pairs, test_pairs;
  for (auto i : idx.train) train_pairs.insert(*corpus[i].pair_id);
  for (const auto* set : {&idx.all_content, &idx.limited_reasons, &idx.credit_only})
    for (auto i : *set) {
      CHECK(corpus[i].style == Style::Education);
      CHECK(train_pairs.count(*corpus[i].pair_id) == 0);
      CHECK(test_pairs.insert(*corpus[i].pair_id).second);
    }
  CHECK(idx.heldout.size() == 2 * test_pairs.size());
  CHECK(idx.train.size() + idx.heldout.size() == corpus.size());

  Rng again(11);
  CHECK(split_protocols(corpus, tax, again).to_json() == idx.to_json());
  CHECK(SplitIndices::from_json(idx.to_json()).to_json() == idx.to_json());
}

TEST_CASE("split rejects undersized strata") {
  CorpusSpec spec;
  spec.count = 150;
  Rng rng(1);
  const auto small = generate_synthetic_corpus(spec, rng);
  Rng srng(2);
  CHECK_THROWS_AS(split_protocols(small, spec.taxonomy, srng), ConfigError);
}

TEST_CASE("corpus file round trip") {
  const auto tax = ReasonTaxonomy::lending_default();
  const auto path = temp_path("corpus.jsonl");
  save_corpus(path, default_corpus(), tax);
  CHECK(load_corpus(path, tax) == default_corpus());

  const auto empty = temp_path("empty.jsonl");
  std::ofstream(empty).close();
  CHECK(load_corpus(empty, tax).empty());
}

TEST_CASE("missing field is reported with field and line") {
  const auto tax = ReasonTaxonomy::lending_default();
  const auto path = temp_path("bad.jsonl");
  {
    std::ofstream f(path);
    f << record_to_json(default_corpus()[0], tax).dump() << "\n";
    auto j = record_to_json(default_corpus()[1], tax);
    j.erase("specific");
    f << j.dump() << "\n";
  }
  try {
    (void)load_corpus(path, tax);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("specific") != std::string::npos);
    CHECK(msg.find("line 2") != std::string::npos);
  }
}

TEST_CASE("taxonomy file round trip") {
  const auto tax = ReasonTaxonomy::lending_default();
  const auto path = temp_path("taxonomy.json");
  save_taxonomy(path, tax);
  CHECK(load_taxonomy(path) == tax);
}

TEST_CASE("find_partner and filter_style") {
  const auto& corpus = default_corpus();
  const auto edu = filter_style(corpus, Style::Education);
  CHECK(edu.size() == 2432);
  const auto* partner = find_partner(corpus, edu[5]);
  REQUIRE(partner != nullptr);
  CHECK(partner->style == Style::Action);
  CHECK(partner->pair_id == edu[5].pair_id);
}

}  // TEST_SUITE
