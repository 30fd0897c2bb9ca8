#include <map>

#include "doctest.h"
#include "relfilter/error.hpp"
#include "relfilter/features.hpp"
#include "relfilter/rng.hpp"
#include "relfilter/text_io.hpp"

using namespace relfilter;

namespace {

using Tokens = std::vector<std::string>;

AnalyzedTweet tweet(const std::string& lemmas, std::optional<std::string> pos = std::nullopt) {
  AnalyzedTweet t;
  t.tweet.id = lemmas;
  t.lemmas = whitespace_split(lemmas);
  if (pos) t.pos = whitespace_split(*pos);
  return t;
}

FeatureConfig lemma_config(std::set<int> orders, int min_count) {
  FeatureConfig c;
  c.lemma_orders = std::move(orders);
  c.min_count = min_count;
  return c;
}

}  // namespace

TEST_CASE("feature presets") {
  CHECK(feature_preset("lex1").source == FeatureSource::lemma);
  CHECK(feature_preset("LEX1-2").lemma_orders == std::set<int>{1, 2});
  CHECK(feature_preset("pos1-3").pos_orders == std::set<int>{1, 2, 3});
  CHECK(feature_preset("pos1").source == FeatureSource::pos);
  const auto both = feature_preset("lex1-2_pos1-3");
  CHECK(both.source == FeatureSource::both);
  CHECK(both.uses(StreamKind::lemma));
  CHECK(both.uses(StreamKind::pos));
  for (const auto& name : feature_preset_names()) CHECK_NOTHROW(feature_preset(name).validate());
  CHECK_THROWS_AS(feature_preset("lex3"), UsageError);
}

TEST_CASE("feature config validation") {
  FeatureConfig c;
  c.lemma_orders = {3};
  CHECK_THROWS_AS(c.validate(), UsageError);
  c.lemma_orders = {};
  CHECK_THROWS_AS(c.validate(), UsageError);
  c = feature_preset("pos1");
  c.pos_orders = {4};
  CHECK_THROWS_AS(c.validate(), UsageError);
  c = feature_preset("lex1");
  c.min_count = 0;
  CHECK_THROWS_AS(c.validate(), UsageError);
}

TEST_CASE("vocabulary counts occurrences against min_count") {
  const std::vector<AnalyzedTweet> corpus = {tweet("a a b"), tweet("a c"), tweet("b d")};
  const auto vocab = Vocabulary::build(corpus, lemma_config({1}, 2));
  REQUIRE(vocab.size() == 2);
  CHECK(vocab.entries()[0].tokens == Tokens{"a"});
  CHECK(vocab.entries()[1].tokens == Tokens{"b"});
  CHECK(vocab.index_of({StreamKind::lemma, {"a"}}) == 1);
  CHECK(vocab.index_of({StreamKind::lemma, {"c"}}) == 0);

  auto docs = lemma_config({1}, 3);
  CHECK(Vocabulary::build(corpus, docs).size() == 1);  // "a" occurs 3 times
  docs.count_mode = CountMode::documents;
  CHECK(Vocabulary::build(corpus, docs).size() == 0);  // but in only 2 tweets
}

TEST_CASE("vocabulary with bigrams") {
  const std::vector<AnalyzedTweet> corpus = {tweet("x y z"), tweet("x y")};
  const auto vocab = Vocabulary::build(corpus, lemma_config({1, 2}, 2));
  // x, y, "x y"; z and "y z" occur once.
  REQUIRE(vocab.size() == 3);
  CHECK(vocab.index_of({StreamKind::lemma, {"x", "y"}}) > 0);
  CHECK(vocab.index_of({StreamKind::lemma, {"y", "z"}}) == 0);
  const auto v = vocab.vectorize(tweet("x y x y"));
  CHECK(v.indices.size() == 3);
  CHECK(v.binary());
  CHECK(std::is_sorted(v.indices.begin(), v.indices.end()));
}

TEST_CASE("lemma and POS entries are kept apart") {
  const std::vector<AnalyzedTweet> corpus = {tweet("NOUN run", "NOUN VERB"), tweet("NOUN", "NOUN")};
  auto config = feature_preset("lex1-2_pos1-3");
  config.min_count = 1;
  const auto vocab = Vocabulary::build(corpus, config);
  const auto lemma = vocab.index_of({StreamKind::lemma, {"NOUN"}});
  const auto pos = vocab.index_of({StreamKind::pos, {"NOUN"}});
  CHECK(lemma > 0);
  CHECK(pos > 0);
  CHECK(lemma != pos);
  // All lemma entries sort before POS entries.
  CHECK(vocab.entries().front().kind == StreamKind::lemma);
  CHECK(vocab.entries().back().kind == StreamKind::pos);
}

TEST_CASE("vocabulary errors") {
  CHECK_THROWS_AS(Vocabulary::build(std::vector<AnalyzedTweet>{}, feature_preset("lex1")), DataError);
  const std::vector<AnalyzedTweet> no_pos = {tweet("a b")};
  CHECK_THROWS_AS(Vocabulary::build(no_pos, feature_preset("pos1")), DataError);
  CHECK_THROWS_AS(Vocabulary::parse("2\tlemma\ta\n"), DataError);
  CHECK_THROWS_AS(Vocabulary::parse("1\tword\ta\n"), DataError);
  CHECK_THROWS_AS(Vocabulary::parse("1\tlemma\n"), DataError);
}

TEST_CASE("vocabulary serialization round trip") {
  Rng rng(11);
  std::vector<AnalyzedTweet> corpus;
  for (int i = 0; i < 200; ++i) {
    std::string lemmas, pos;
    const int len = 1 + static_cast<int>(rng.uniform(8));
    for (int j = 0; j < len; ++j) {
      lemmas += (j ? " w" : "w") + std::to_string(rng.uniform(30));
      pos += (j ? " P" : "P") + std::to_string(rng.uniform(5));
    }
    corpus.push_back(tweet(lemmas, pos));
  }
  auto config = feature_preset("lex1-2_pos1-3");
  config.min_count = 2;
  const auto vocab = Vocabulary::build(corpus, config);
  REQUIRE(vocab.size() > 0);
  const auto back = Vocabulary::parse(vocab.serialize());
  CHECK(back == vocab);
  CHECK(back.serialize() == vocab.serialize());
  CHECK(back.config().lemma_orders == std::set<int>{1, 2});
  CHECK(back.config().pos_orders == std::set<int>{1, 2, 3});
  for (const auto& t : corpus) CHECK(back.vectorize(t) == vocab.vectorize(t));
}

TEST_CASE("vectorize matches a direct ngram count") {
  Rng rng(5);
  std::vector<AnalyzedTweet> corpus;
  for (int i = 0; i < 100; ++i) {
    std::string lemmas;
    for (int j = 0; j < 6; ++j) lemmas += (j ? " t" : "t") + std::to_string(rng.uniform(12));
    corpus.push_back(tweet(lemmas));
  }
  const auto vocab = Vocabulary::build(corpus, lemma_config({1, 2}, 3));
  for (const auto& t : corpus) {
    std::set<std::int32_t> expected;
    for (std::size_t i = 0; i < t.lemmas.size(); ++i) {
      if (auto k = vocab.index_of({StreamKind::lemma, {t.lemmas[i]}})) expected.insert(k);
      if (i + 1 < t.lemmas.size()) {
        if (auto k = vocab.index_of({StreamKind::lemma, {t.lemmas[i], t.lemmas[i + 1]}})) expected.insert(k);
      }
    }
    const auto v = vocab.vectorize(t);
    CHECK(std::vector<std::int32_t>(expected.begin(), expected.end()) == v.indices);
  }
}

TEST_CASE("sparse_line") {
  FeatureVector v;
  v.indices = {2, 7};
  CHECK(sparse_line(v, 1) == "+1 2:1 7:1");
  CHECK(sparse_line(v, -1) == "-1 2:1 7:1");
  CHECK(sparse_line(FeatureVector{}, 0) == "0");
  v.values = {0.5, -2.0};
  CHECK(sparse_line(v, 1) == "+1 2:0.5 7:-2");
}
