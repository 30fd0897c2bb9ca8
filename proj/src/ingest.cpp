#include "relfilter/ingest.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <sstream>
#include <unordered_map>

#include "json.hpp"
#include "relfilter/error.hpp"
#include "relfilter/rng.hpp"
#include "relfilter/text_io.hpp"

namespace relfilter {

using utf8::Codepoint;

void EmojiTable::add(std::u32string sequence, int index) {
  if (sequence.empty()) throw DataError("empty emoji sequence");
  if (index < 1) throw DataError("emoji index must be >= 1, got " + std::to_string(index));
  if (!indices_.insert(index).second) {
    throw DataError("duplicate emoji index " + std::to_string(index));
  }
  max_length_ = std::max(max_length_, sequence.size());
  if (!entries_.emplace(std::move(sequence), index).second) {
    throw DataError("duplicate emoji sequence for index " + std::to_string(index));
  }
}

std::size_t EmojiTable::match(std::span<const Codepoint> text, std::size_t pos, int* index) const {
  if (entries_.empty()) return 0;
  const std::size_t longest = std::min(max_length_, text.size() - pos);
  for (std::size_t len = longest; len > 0; --len) {
    std::u32string probe(text.begin() + static_cast<std::ptrdiff_t>(pos),
                         text.begin() + static_cast<std::ptrdiff_t>(pos + len));
    auto it = entries_.find(probe);
    if (it != entries_.end()) {
      *index = it->second;
      return len;
    }
  }
  return 0;
}

std::vector<CodepointRange> default_allowed_scripts() {
  return {
      {U'A', U'Z'},     {U'a', U'z'},
      {0x0621, 0x063A},  // hamza .. ghain
      {0x0640, 0x065F},  // tatweel, fa .. yeh, harakat
      {0x0670, 0x0671},  // superscript alef, alef wasla
      {0xFE70, 0xFEFC},  // presentation forms of the above
  };
}

namespace {

bool is_variation_selector(Codepoint cp) { return cp == 0xFE0E || cp == 0xFE0F; }

bool starts_with_url(std::span<const Codepoint> cps, std::size_t pos) {
  auto has_prefix = [&](std::u32string_view prefix) {
    if (cps.size() - pos < prefix.size()) return false;
    for (std::size_t i = 0; i < prefix.size(); ++i) {
      Codepoint c = cps[pos + i];
      if (c >= U'A' && c <= U'Z') c = c - U'A' + U'a';
      if (c != prefix[i]) return false;
    }
    return true;
  };
  return has_prefix(U"http://") || has_prefix(U"https://") || has_prefix(U"www.");
}

bool all_digits(const std::u32string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), utf8::is_digit);
}

bool is_emoji_token(std::string_view token) {
  constexpr std::string_view prefix = "emoji";
  if (token.size() <= prefix.size() || token.substr(0, prefix.size()) != prefix) return false;
  return std::all_of(token.begin() + prefix.size(), token.end(),
                     [](char c) { return c >= '0' && c <= '9'; });
}

bool in_ranges(Codepoint cp, std::span<const CodepointRange> ranges) {
  return std::any_of(ranges.begin(), ranges.end(),
                     [cp](const CodepointRange& r) { return cp >= r.first && cp <= r.last; });
}

const nlohmann::json* find_field(const nlohmann::json& obj, const char* name) {
  auto it = obj.find(name);
  return it == obj.end() || it->is_null() ? nullptr : &*it;
}

std::vector<std::string> string_array(const nlohmann::json& value, const char* name) {
  if (!value.is_array()) throw DataError(std::string("field '") + name + "' must be an array");
  std::vector<std::string> out;
  out.reserve(value.size());
  for (const auto& item : value) {
    if (!item.is_string()) {
      throw DataError(std::string("field '") + name + "' must contain only strings");
    }
    out.push_back(item.get<std::string>());
  }
  return out;
}

AnalyzedTweet record_from_json(const nlohmann::json& obj, const ParseOptions& options) {
  if (!obj.is_object()) throw DataError("record is not a JSON object");
  AnalyzedTweet rec;
  const auto* id = find_field(obj, "id");
  if (!id || !id->is_string() || id->get<std::string>().empty()) {
    throw DataError("missing or empty string field 'id'");
  }
  rec.tweet.id = id->get<std::string>();

  const auto* text = find_field(obj, "text");
  if (!text || !text->is_string()) throw DataError("missing string field 'text'");
  rec.tweet.text = text->get<std::string>();

  const auto* ts = find_field(obj, "ts");
  if (ts) {
    if (!ts->is_number_integer()) throw DataError("field 'ts' must be an integer");
    rec.tweet.timestamp = ts->get<std::int64_t>();
  } else if (options.require_timestamp) {
    throw DataError("missing integer field 'ts'");
  }

  if (const auto* label = find_field(obj, "label")) {
    if (!label->is_number_integer() || (label->get<std::int64_t>() != 0 && label->get<std::int64_t>() != 1)) {
      throw DataError("field 'label' must be 0 or 1");
    }
    rec.tweet.label = static_cast<int>(label->get<std::int64_t>());
  }

  if (const auto* lemmas = find_field(obj, "lemmas")) {
    rec.lemmas = string_array(*lemmas, "lemmas");
  } else {
    rec.lemmas = whitespace_split(rec.tweet.text);
  }
  if (const auto* pos = find_field(obj, "pos")) {
    rec.pos = string_array(*pos, "pos");
    if (rec.pos->size() != rec.lemmas.size()) {
      throw DataError("lemma/pos length mismatch: " + std::to_string(rec.lemmas.size()) +
                      " lemmas, " + std::to_string(rec.pos->size()) + " tags");
    }
  }
  return rec;
}

}  // namespace

std::vector<std::string> whitespace_split(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  for (Codepoint cp : utf8::decode(text)) {
    if (utf8::is_whitespace(cp)) {
      if (!current.empty()) out.push_back(std::move(current));
      current.clear();
    } else {
      utf8::append(current, cp);
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

AnalyzedTweet record_from_json_text(std::string_view json_text, const ParseOptions& options) {
  nlohmann::json obj;
  try {
    obj = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(std::string("invalid JSON: ") + e.what());
  }
  return record_from_json(obj, options);
}

ParseResult parse_records(std::istream& in, const ParseOptions& options) {
  ParseResult result;
  std::unordered_map<std::string, std::size_t> seen;  // id -> line
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      AnalyzedTweet rec = record_from_json_text(line, options);
      auto [it, inserted] = seen.emplace(rec.tweet.id, line_no);
      if (!inserted) {
        result.errors.push_back({line_no, "duplicate id '" + rec.tweet.id + "' (first seen on line " +
                                              std::to_string(it->second) + ", repeated on line " +
                                              std::to_string(line_no) + ")"});
        continue;
      }
      result.records.push_back(std::move(rec));
    } catch (const DataError& e) {
      result.errors.push_back({line_no, e.what()});
    }
  }
  return result;
}

ParseResult parse_records(std::string_view text, const ParseOptions& options) {
  std::istringstream in{std::string(text)};
  return parse_records(in, options);
}

std::string to_json_line(const AnalyzedTweet& record) {
  nlohmann::ordered_json obj;
  obj["id"] = record.tweet.id;
  obj["ts"] = record.tweet.timestamp;
  obj["text"] = record.tweet.text;
  if (record.tweet.label) obj["label"] = *record.tweet.label;
  obj["lemmas"] = record.lemmas;
  if (record.pos) obj["pos"] = *record.pos;
  return obj.dump(-1, ' ', false, nlohmann::ordered_json::error_handler_t::replace);
}

std::vector<std::string> normalize(std::string_view text, const NormalizationConfig& config) {
  const std::vector<Codepoint> cps = utf8::decode(text);
  std::vector<std::string> tokens;
  std::u32string current;

  auto flush = [&] {
    if (current.empty()) return;
    if (all_digits(current)) {
      tokens.emplace_back(kNumberToken);
    } else {
      std::string token;
      for (Codepoint cp : current) utf8::append(token, cp);
      tokens.push_back(std::move(token));
    }
    current.clear();
  };

  std::size_t pos = 0;
  while (pos < cps.size()) {
    const Codepoint cp = cps[pos];
    if (utf8::is_whitespace(cp)) {
      flush();
      ++pos;
      continue;
    }
    int emoji_index = 0;
    if (std::size_t len = config.emoji_table.match(cps, pos, &emoji_index); len > 0) {
      flush();
      tokens.push_back("emoji" + std::to_string(emoji_index));
      pos += len;
      while (pos < cps.size() && is_variation_selector(cps[pos])) ++pos;
      continue;
    }
    if (current.empty() && starts_with_url(cps, pos)) {
      // A URL runs to the next whitespace.
      while (pos < cps.size() && !utf8::is_whitespace(cps[pos])) ++pos;
      tokens.emplace_back(kLinkToken);
      continue;
    }
    if (utf8::is_punctuation(cp) && config.keep_chars.find(cp) == std::u32string::npos) {
      flush();
      ++pos;
      continue;
    }
    current.push_back(cp);
    ++pos;
  }
  flush();
  return tokens;
}

std::vector<std::string> filter_stopwords(std::span<const std::string> tokens,
                                          const std::set<std::string>& stopwords) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) {
    if (!stopwords.contains(t)) out.push_back(t);
  }
  return out;
}

std::vector<std::string> collapse_pos(std::span<const std::string> tags, const PosCollapseMap& map) {
  std::vector<std::string> out;
  out.reserve(tags.size());
  for (const auto& t : tags) {
    auto it = map.find(t);
    out.push_back(it == map.end() ? t : it->second);
  }
  return out;
}

AnalyzedTweet normalize_record(const AnalyzedTweet& record, const NormalizationConfig& config) {
  AnalyzedTweet out;
  out.tweet = record.tweet;
  out.pos = record.pos;
  for (const auto& lemma : record.lemmas) {
    // Hashtags are passed through by the analyzer and keep their form here:
    // '#' is a kept character, so normalize() only strips other punctuation.
    auto pieces = normalize(lemma, config);
    out.lemmas.insert(out.lemmas.end(), std::make_move_iterator(pieces.begin()),
                      std::make_move_iterator(pieces.end()));
  }
  return out;
}

AnalyzedTweet finalize_record(const AnalyzedTweet& record, const NormalizationConfig& config) {
  AnalyzedTweet out;
  out.tweet = record.tweet;
  out.lemmas = filter_stopwords(record.lemmas, config.stopwords);
  if (record.pos) out.pos = collapse_pos(*record.pos, config.pos_collapse_map);
  return out;
}

AnalyzedTweet clean_record(const AnalyzedTweet& record, const NormalizationConfig& config) {
  return finalize_record(normalize_record(record, config), config);
}

std::vector<AnalyzedTweet> keyword_prefilter(std::span<const AnalyzedTweet> tweets,
                                             const std::set<std::string>& keywords) {
  if (keywords.empty()) {
    throw UsageError("keyword prefilter needs at least one keyword; omit the filter instead");
  }
  std::vector<AnalyzedTweet> out;
  for (const auto& t : tweets) {
    if (std::any_of(t.lemmas.begin(), t.lemmas.end(),
                    [&](const std::string& tok) { return keywords.contains(tok); })) {
      out.push_back(t);
    }
  }
  return out;
}

std::vector<AnalyzedTweet> script_filter(std::span<const AnalyzedTweet> tweets,
                                         std::span<const CodepointRange> allowed_scripts,
                                         std::u32string_view keep_chars) {
  std::vector<AnalyzedTweet> out;
  for (const auto& t : tweets) {
    bool ok = true;
    for (const auto& token : t.lemmas) {
      if (token == kLinkToken || token == kNumberToken || is_emoji_token(token)) continue;
      for (Codepoint cp : utf8::decode(token)) {
        if (keep_chars.find(cp) != std::u32string_view::npos) continue;
        if (utf8::is_letter(cp) && !in_ranges(cp, allowed_scripts)) {
          ok = false;
          break;
        }
      }
      if (!ok) break;
    }
    if (ok) out.push_back(t);
  }
  return out;
}

std::vector<AnalyzedTweet> drop_blocked(std::span<const AnalyzedTweet> tweets,
                                        const std::set<std::string>& blocked) {
  std::vector<AnalyzedTweet> out;
  for (const auto& t : tweets) {
    if (std::none_of(t.lemmas.begin(), t.lemmas.end(),
                     [&](const std::string& tok) { return blocked.contains(tok); })) {
      out.push_back(t);
    }
  }
  return out;
}

std::vector<std::string> dedup_key(std::span<const std::string> tokens) {
  std::size_t start = 0;
  if (!tokens.empty() && tokens[0] == "RT") {
    start = 1;
    if (tokens.size() > 1 && tokens[1].size() > 1 && tokens[1][0] == '@') start = 2;
  }
  return {tokens.begin() + static_cast<std::ptrdiff_t>(start), tokens.end()};
}

std::vector<AnalyzedTweet> deduplicate(std::span<const AnalyzedTweet> tweets) {
  std::set<std::vector<std::string>> seen;
  std::vector<AnalyzedTweet> out;
  for (const auto& t : tweets) {
    if (seen.insert(dedup_key(t.lemmas)).second) out.push_back(t);
  }
  return out;
}

std::vector<AnalyzedTweet> stratified_sample(std::span<const AnalyzedTweet> tweets,
                                             std::int64_t batch_size, std::uint64_t seed) {
  if (batch_size <= 0) throw UsageError("batch size must be positive");
  const auto n = static_cast<std::int64_t>(tweets.size());
  if (batch_size > n) {
    throw UsageError("batch size " + std::to_string(batch_size) + " exceeds corpus size " +
                     std::to_string(n));
  }
  std::vector<std::size_t> order(tweets.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return tweets[a].tweet.timestamp < tweets[b].tweet.timestamp;
  });
  Rng rng(seed);
  std::vector<AnalyzedTweet> out;
  out.reserve(static_cast<std::size_t>(batch_size));
  for (std::int64_t k = 0; k < batch_size; ++k) {
    const std::int64_t lo = k * n / batch_size;
    const std::int64_t hi = (k + 1) * n / batch_size;
    const auto pick = lo + static_cast<std::int64_t>(rng.uniform(static_cast<std::uint64_t>(hi - lo)));
    out.push_back(tweets[order[static_cast<std::size_t>(pick)]]);
  }
  return out;
}

PipelineReport preprocess_corpus(std::span<const AnalyzedTweet> records,
                                 const NormalizationConfig& config,
                                 const PipelineOptions& options) {
  PipelineReport report;
  report.input = records.size();
  std::vector<AnalyzedTweet> current;
  current.reserve(records.size());
  for (const auto& r : records) current.push_back(normalize_record(r, config));

  if (options.deduplicate) current = deduplicate(current);
  report.after_dedup = current.size();
  if (options.keywords) current = keyword_prefilter(current, *options.keywords);
  report.after_keywords = current.size();
  if (options.script_filter) current = script_filter(current, config.allowed_scripts, config.keep_chars);
  report.after_script = current.size();
  if (!config.blocked_keywords.empty()) current = drop_blocked(current, config.blocked_keywords);
  report.after_blocked = current.size();
  if (options.sample_size) current = stratified_sample(current, *options.sample_size, options.seed);

  report.records.reserve(current.size());
  for (const auto& r : current) report.records.push_back(finalize_record(r, config));
  return report;
}

EmojiTable load_emoji_table(const std::filesystem::path& path) {
  EmojiTable table;
  std::size_t line_no = 0;
  for (const auto& line : read_lines(path)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cols = split(line, '\t');
    auto fail = [&](const std::string& why) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + why);
    };
    if (cols.size() != 2) fail("expected '<codepoints> TAB <index>'");
    std::u32string seq;
    for (const auto& part : whitespace_split(cols[0])) {
      std::string_view hex = part;
      if (hex.starts_with("U+") || hex.starts_with("u+")) hex.remove_prefix(2);
      std::size_t used = 0;
      unsigned long value = 0;
      try {
        value = std::stoul(std::string(hex), &used, 16);
      } catch (const std::exception&) {
        fail("bad codepoint '" + part + "'");
      }
      if (used != hex.size() || value > 0x10FFFF) fail("bad codepoint '" + part + "'");
      seq.push_back(static_cast<Codepoint>(value));
    }
    int index = 0;
    try {
      std::size_t used = 0;
      index = std::stoi(cols[1], &used);
      if (used != cols[1].size()) fail("bad index '" + cols[1] + "'");
    } catch (const std::logic_error&) {
      fail("bad index '" + cols[1] + "'");
    }
    try {
      table.add(std::move(seq), index);
    } catch (const DataError& e) {
      fail(e.what());
    }
  }
  return table;
}

std::set<std::string> load_word_list(const std::filesystem::path& path) {
  std::set<std::string> words;
  for (const auto& line : read_lines(path)) {
    for (auto& w : whitespace_split(line)) words.insert(std::move(w));
  }
  return words;
}

PosCollapseMap load_pos_map(const std::filesystem::path& path) {
  PosCollapseMap map;
  std::size_t line_no = 0;
  for (const auto& line : read_lines(path)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cols = split(line, '\t');
    if (cols.size() != 2 || cols[0].empty() || cols[1].empty()) {
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": expected '<fine tag> TAB <collapsed tag>'");
    }
    if (!map.emplace(cols[0], cols[1]).second) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": duplicate tag " + cols[0]);
    }
  }
  for (const auto& [fine, collapsed] : map) {
    auto it = map.find(collapsed);
    if (it != map.end() && it->second != collapsed) {
      throw DataError(path.string() + ": collapsed tag " + collapsed + " is itself remapped to " +
                      it->second);
    }
  }
  return map;
}

}  // namespace relfilter
