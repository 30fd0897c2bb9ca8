#include <filesystem>

#include "doctest.h"
#include "relfilter/error.hpp"
#include "relfilter/ingest.hpp"
#include "relfilter/rng.hpp"
#include "relfilter/text_io.hpp"

using namespace relfilter;
namespace fs = std::filesystem;

namespace {

using Tokens = std::vector<std::string>;

AnalyzedTweet record(const std::string& id, std::int64_t ts, const std::string& text,
                     const NormalizationConfig& config = {}) {
  AnalyzedTweet t;
  t.tweet = {id, ts, text, std::nullopt};
  t.lemmas = whitespace_split(text);
  return normalize_record(t, config);
}

Tokens ids(const std::vector<AnalyzedTweet>& v) {
  Tokens out;
  for (const auto& t : v) out.push_back(t.tweet.id);
  return out;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "relfilter-ingest-test";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("parse_records: passthrough tokenizer") {
  const auto r = parse_records(R"({"id":"t1","ts":5,"text":"a b"})");
  REQUIRE(r.errors.empty());
  REQUIRE(r.records.size() == 1);
  CHECK(r.records[0].lemmas == Tokens{"a", "b"});
  CHECK_FALSE(r.records[0].pos.has_value());
  CHECK_FALSE(r.records[0].tweet.label.has_value());
}

TEST_CASE("parse_records: analyzed streams and labels") {
  const auto r = parse_records(
      R"({"id":"x","ts":1,"text":"t","lemmas":["a","b"],"pos":["NOUN","VERB"],"label":1})");
  REQUIRE(r.records.size() == 1);
  CHECK(r.records[0].pos == Tokens{"NOUN", "VERB"});
  CHECK(r.records[0].tweet.label == 1);
}

TEST_CASE("parse_records: malformed lines are reported and skipped") {
  const std::string text =
      "{\"id\":\"a\",\"ts\":1,\"text\":\"x\",\"lemmas\":[\"p\",\"q\",\"r\"],\"pos\":[\"N\",\"V\"]}\n"
      "not json\n"
      "{\"ts\":1,\"text\":\"no id\"}\n"
      "{\"id\":\"b\",\"ts\":1,\"text\":\"x\",\"label\":2}\n"
      "{\"id\":\"c\",\"text\":\"no ts\"}\n"
      "\n"
      "{\"id\":\"d\",\"ts\":2,\"text\":\"fine\"}\n"
      "{\"id\":\"d\",\"ts\":3,\"text\":\"again\"}\n";
  const auto r = parse_records(text);
  CHECK(ids(r.records) == Tokens{"d"});
  REQUIRE(r.errors.size() == 6);
  CHECK(r.errors[0].line == 1);
  CHECK(r.errors[0].message.find("length") != std::string::npos);
  CHECK(r.errors[1].line == 2);
  CHECK(r.errors[2].line == 3);
  CHECK(r.errors[3].line == 4);
  CHECK(r.errors[4].line == 5);
  CHECK(r.errors[5].line == 8);
  CHECK(r.errors[5].message.find("line 7") != std::string::npos);
  CHECK(r.errors[5].message.find("line 8") != std::string::npos);
}

TEST_CASE("parse_records: lenient timestamp and empty input") {
  ParseOptions lenient;
  lenient.require_timestamp = false;
  CHECK(parse_records(R"({"id":"c","text":"no ts"})", lenient).records.size() == 1);
  const auto empty = parse_records("");
  CHECK(empty.records.empty());
  CHECK(empty.errors.empty());
}

TEST_CASE("record JSON round trip") {
  AnalyzedTweet t;
  t.tweet = {"id-1", 99, "نص \"quoted\"", 0};
  t.lemmas = {"نص", "quoted"};
  t.pos = Tokens{"NOUN", "ADJ"};
  const auto back = record_from_json_text(to_json_line(t));
  CHECK(back.tweet.id == t.tweet.id);
  CHECK(back.tweet.timestamp == 99);
  CHECK(back.tweet.text == t.tweet.text);
  CHECK(back.tweet.label == 0);
  CHECK(back.lemmas == t.lemmas);
  CHECK(back.pos == t.pos);
}

TEST_CASE("normalize: links, numbers, hashtags") {
  NormalizationConfig config;
  CHECK(normalize("see http://t.co/ab 42 #demo", config) == Tokens{"see", "LINK", "NUMBER", "#demo"});
  CHECK(normalize("a,b.c", config) == Tokens{"a", "b", "c"});
  CHECK(normalize("line\nbreak", config) == Tokens{"line", "break"});
  CHECK(normalize("@user_1: hi!", config) == Tokens{"@user_1", "hi"});
  CHECK(normalize("www.example.com/x?y=1 done", config) == Tokens{"LINK", "done"});
  CHECK(normalize("٤٥ and 12abc", config) == Tokens{"NUMBER", "and", "12abc"});
  CHECK(normalize("3.14", config) == Tokens{"NUMBER", "NUMBER"});
  CHECK(normalize("", config).empty());
  CHECK(normalize("... !!", config).empty());
}

TEST_CASE("normalize: emojis") {
  NormalizationConfig config;
  config.emoji_table.add(U"\U0001F600", 7);
  config.emoji_table.add(U"\U0001F44D\U0001F3FD", 12);
  config.emoji_table.add(U"\U0001F44D", 11);
  CHECK(normalize("good \U0001F600 day", config) == Tokens{"good", "emoji7", "day"});
  CHECK(normalize("ok\U0001F600ok", config) == Tokens{"ok", "emoji7", "ok"});
  // Longest match wins; a trailing variation selector is absorbed.
  CHECK(normalize("\U0001F44D\U0001F3FD\U0001F44D️", config) == Tokens{"emoji12", "emoji11"});
  // Unknown emojis pass through.
  CHECK(normalize("\U0001F680", config) == Tokens{"\U0001F680"});
}

TEST_CASE("normalize is idempotent on tricky input") {
  NormalizationConfig config;
  config.emoji_table.add(U"\U0001F600", 3);
  for (const char* text : {"RT @a: http://x.y/z,42 #tag \U0001F600!", "a..b", "emoji3 LINK NUMBER", "x\xF0\x9F",
                           "__ # @ ", "http://", "٣٤٥٦"}) {
    const auto once = normalize(text, config);
    CHECK(normalize(join(once, " "), config) == once);
  }
}

TEST_CASE("emoji table rejects bad entries") {
  EmojiTable table;
  table.add(U"\U0001F600", 1);
  CHECK_THROWS(table.add(U"\U0001F601", 1));
  CHECK_THROWS(table.add(U"\U0001F602", 0));
}

TEST_CASE("filter_stopwords") {
  CHECK(filter_stopwords(Tokens{"the", "protest"}, {"the"}) == Tokens{"protest"});
  CHECK(filter_stopwords(Tokens{"the", "a"}, {"the", "a"}).empty());
  CHECK(filter_stopwords(Tokens{"b", "a", "b"}, {}) == Tokens{"b", "a", "b"});
}

TEST_CASE("collapse_pos") {
  const PosCollapseMap map = {{"ADJ_COMP", "ADJ"}, {"ADJ", "ADJ"}, {"IV", "VERB"}};
  CHECK(collapse_pos(Tokens{"ADJ_COMP", "IV", "UNKNOWN"}, map) == Tokens{"ADJ", "VERB", "UNKNOWN"});
}

TEST_CASE("finalize applies stopwords to lemmas only") {
  NormalizationConfig config;
  config.stopwords = {"the"};
  AnalyzedTweet t;
  t.tweet = {"1", 0, "the protest", std::nullopt};
  t.lemmas = {"the", "protest"};
  t.pos = Tokens{"DET", "NOUN"};
  const auto out = clean_record(t, config);
  CHECK(out.lemmas == Tokens{"protest"});
  CHECK(out.pos == Tokens{"DET", "NOUN"});
  CHECK(clean_record(out, config).lemmas == out.lemmas);
}

TEST_CASE("keyword_prefilter is token-level") {
  const std::vector<AnalyzedTweet> tweets = {record("1", 1, "big protest today"), record("2", 2, "quiet day"),
                                             record("3", 3, "protesters gathered"),
                                             record("4", 4, "police lines")};
  const std::set<std::string> keywords = {"protest", "police"};
  const auto kept = keyword_prefilter(tweets, keywords);
  CHECK(ids(kept) == Tokens{"1", "4"});
  for (const auto& t : kept) {
    bool any = false;
    for (const auto& tok : t.lemmas) any = any || keywords.contains(tok);
    CHECK(any);
  }
  CHECK_THROWS_AS(keyword_prefilter(tweets, {}), UsageError);
}

TEST_CASE("script_filter") {
  const auto allowed = default_allowed_scripts();
  const std::vector<AnalyzedTweet> tweets = {
      record("arabic", 1, "مظاهرة في الشارع"), record("hangul", 2, "한국 مظاهرة"),
      record("bopomofo", 3, "ㄅㄆ"),             record("exempt", 4, "http://x.co 15"),
      record("latin", 5, "protest #demo"),      record("farsi", 6, "پیام"),
      record("cyrillic", 7, "протест")};
  const auto kept = script_filter(tweets, allowed);
  CHECK(ids(kept) == Tokens{"arabic", "exempt", "latin"});
  CHECK(ids(script_filter(kept, allowed)) == ids(kept));
}

TEST_CASE("drop_blocked") {
  const std::vector<AnalyzedTweet> tweets = {record("1", 1, "fine text"), record("2", 2, "spam offer")};
  CHECK(ids(drop_blocked(tweets, {"spam"})) == Tokens{"1"});
}

TEST_CASE("deduplicate") {
  const std::vector<AnalyzedTweet> tweets = {record("a", 1, "hello world"), record("b", 2, "RT @u: hello world"),
                                             record("c", 3, "hello, world!"), record("d", 4, "other"),
                                             record("e", 5, "RT")};
  const auto kept = deduplicate(tweets);
  CHECK(ids(kept) == Tokens{"a", "d", "e"});
  CHECK(ids(deduplicate(kept)) == ids(kept));
  CHECK(dedup_key(Tokens{"RT", "@u", "x"}) == Tokens{"x"});
  CHECK(dedup_key(Tokens{"RT", "x"}) == Tokens{"x"});
  CHECK(dedup_key(Tokens{"x", "RT", "@u"}) == Tokens{"x", "RT", "@u"});
}

TEST_CASE("stratified_sample") {
  std::vector<AnalyzedTweet> tweets;
  // Shuffled timestamps 1..10.
  for (int ts : {7, 2, 9, 1, 5, 10, 3, 6, 4, 8}) tweets.push_back(record(std::to_string(ts), ts, "x"));
  const auto batch = stratified_sample(tweets, 5, 3);
  REQUIRE(batch.size() == 5);
  for (int k = 0; k < 5; ++k) {
    const auto ts = batch[static_cast<std::size_t>(k)].tweet.timestamp;
    CHECK(ts >= 2 * k + 1);
    CHECK(ts <= 2 * k + 2);
  }
  CHECK(ids(stratified_sample(tweets, 5, 3)) == ids(batch));
  CHECK(stratified_sample(tweets, 10, 1).size() == 10);
  CHECK_THROWS_AS(stratified_sample(tweets, 0, 1), UsageError);
  CHECK_THROWS_AS(stratified_sample(tweets, 11, 1), UsageError);
}

TEST_CASE("preprocess_corpus runs the stages in order") {
  NormalizationConfig config;
  config.stopwords = {"the"};
  config.blocked_keywords = {"spam"};
  std::vector<AnalyzedTweet> raw;
  auto add = [&](const std::string& id, const std::string& text) {
    AnalyzedTweet t;
    t.tweet = {id, static_cast<std::int64_t>(raw.size()), text, std::nullopt};
    t.lemmas = whitespace_split(text);
    raw.push_back(t);
  };
  add("1", "the protest grows");
  add("2", "RT @x: the protest grows");
  add("3", "protest 한국");
  add("4", "protest spam");
  add("5", "nothing relevant");
  PipelineOptions options;
  options.keywords = std::set<std::string>{"protest"};
  const auto report = preprocess_corpus(raw, config, options);
  CHECK(report.input == 5);
  CHECK(report.after_dedup == 4);
  CHECK(report.after_keywords == 3);
  CHECK(report.after_script == 2);
  CHECK(report.after_blocked == 1);
  REQUIRE(report.records.size() == 1);
  CHECK(report.records[0].lemmas == Tokens{"protest", "grows"});
}

TEST_CASE("config loaders") {
  const auto emoji = scratch("emoji.tsv");
  write_file_atomic(emoji, "1F600\t1\nU+1F44D 1F3FD\t2\n");
  const auto table = load_emoji_table(emoji);
  CHECK(table.size() == 2);
  write_file_atomic(emoji, "1F600\n");
  CHECK_THROWS_AS(load_emoji_table(emoji), DataError);

  const auto words = scratch("words.txt");
  write_file_atomic(words, "a\n\nb\r\n");
  CHECK(load_word_list(words) == std::set<std::string>{"a", "b"});

  const auto pos = scratch("pos.tsv");
  write_file_atomic(pos, "ADJ_COMP\tADJ\nADJ\tADJ\n");
  CHECK(load_pos_map(pos).size() == 2);
  write_file_atomic(pos, "ADJ_COMP\tADJ\nADJ\tNOUN\n");
  CHECK_THROWS_AS(load_pos_map(pos), DataError);
  CHECK_THROWS_AS(load_word_list(scratch("missing.txt")), DataError);
}

TEST_CASE("shipped data files load") {
  const fs::path data = RELFILTER_DATA_DIR;
  CHECK(load_emoji_table(data / "emoji_table.tsv").size() == 842);
  const auto map = load_pos_map(data / "pos_collapse.tsv");
  CHECK(map.size() == 55);
  std::set<std::string> collapsed;
  for (const auto& [fine, coarse] : map) collapsed.insert(coarse);
  CHECK(collapsed.size() == 19);
}
