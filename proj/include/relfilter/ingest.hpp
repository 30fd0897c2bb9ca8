#pragma once

// Record parsing and the text-cleaning pipeline: emoji indexing, URL and
// number tokens, punctuation stripping, stopwords, POS collapsing, and the
// corpus-level filters (keyword OR-filter, script filter, blocked terms,
// deduplication, timestamp-stratified sampling).

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "relfilter/utf8.hpp"

namespace relfilter {

struct Tweet {
  std::string id;
  std::int64_t timestamp = 0;  // UTC seconds
  std::string text;
  std::optional<int> label;  // 1 = relevant, 0 = irrelevant
};

struct AnalyzedTweet {
  Tweet tweet;
  std::vector<std::string> lemmas;
  // Collapsed POS tags. On parsed records, aligned with lemmas. Cleaning
  // edits the lemma stream only, after which the streams are independent.
  std::optional<std::vector<std::string>> pos;
};

// Tokens produced by normalize().
inline constexpr std::string_view kLinkToken = "LINK";
inline constexpr std::string_view kNumberToken = "NUMBER";

struct CodepointRange {
  utf8::Codepoint first;
  utf8::Codepoint last;
};

// Emoji codepoint sequence -> index (1-based). Matching is longest-first.
class EmojiTable {
 public:
  void add(std::u32string sequence, int index);
  // Length of the longest entry starting at text[pos], 0 if none.
  std::size_t match(std::span<const utf8::Codepoint> text, std::size_t pos, int* index) const;
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

 private:
  std::map<std::u32string, int> entries_;
  std::set<int> indices_;
  std::size_t max_length_ = 0;
};

// Fine POS tag -> collapsed tag. Tags outside the declared input set pass
// through unchanged.
using PosCollapseMap = std::map<std::string, std::string>;

// Standard Arabic letters and marks plus Basic Latin letters. Urdu and Farsi
// additions in the Arabic block (e.g. U+067E, U+0686, U+06A9, U+06CC) are
// outside these ranges.
std::vector<CodepointRange> default_allowed_scripts();

struct NormalizationConfig {
  EmojiTable emoji_table;
  std::set<std::string> stopwords;
  std::u32string keep_chars = U"#@_";
  std::vector<CodepointRange> allowed_scripts = default_allowed_scripts();
  std::set<std::string> blocked_keywords;
  PosCollapseMap pos_collapse_map;
};

struct ParseIssue {
  std::size_t line = 0;  // 1-based
  std::string message;
};

struct ParseResult {
  std::vector<AnalyzedTweet> records;
  std::vector<ParseIssue> errors;
};

struct ParseOptions {
  // The /filter endpoint accepts records without a timestamp.
  bool require_timestamp = true;
};

// One JSON object per line: id (string), ts (integer), text (string),
// optional lemmas/pos (string arrays) and label (0|1). Records without a
// lemma stream get the whitespace split of text. Bad lines are reported with
// their line number and skipped.
ParseResult parse_records(std::istream& in, const ParseOptions& options = {});
ParseResult parse_records(std::string_view text, const ParseOptions& options = {});
// Parses one record from a JSON value; throws DataError when malformed.
AnalyzedTweet record_from_json_text(std::string_view json_text, const ParseOptions& options = {});
std::string to_json_line(const AnalyzedTweet& record);

std::vector<std::string> whitespace_split(std::string_view text);

std::vector<std::string> normalize(std::string_view text, const NormalizationConfig& config);
std::vector<std::string> filter_stopwords(std::span<const std::string> tokens,
                                          const std::set<std::string>& stopwords);
std::vector<std::string> collapse_pos(std::span<const std::string> tags, const PosCollapseMap& map);

// Normalizes every lemma (a lemma may split into several tokens or vanish).
// Stopwords and the POS map are applied by finalize_record().
AnalyzedTweet normalize_record(const AnalyzedTweet& record, const NormalizationConfig& config);
AnalyzedTweet finalize_record(const AnalyzedTweet& record, const NormalizationConfig& config);
// normalize_record followed by finalize_record.
AnalyzedTweet clean_record(const AnalyzedTweet& record, const NormalizationConfig& config);

// Keeps tweets whose lemma stream contains at least one keyword as a whole
// token. Throws UsageError on an empty keyword set.
std::vector<AnalyzedTweet> keyword_prefilter(std::span<const AnalyzedTweet> tweets,
                                             const std::set<std::string>& keywords);

// Drops tweets with any letter outside the allowed ranges. LINK, NUMBER,
// emojiN tokens and keep_chars are exempt.
std::vector<AnalyzedTweet> script_filter(std::span<const AnalyzedTweet> tweets,
                                         std::span<const CodepointRange> allowed_scripts,
                                         std::u32string_view keep_chars = U"#@_");

std::vector<AnalyzedTweet> drop_blocked(std::span<const AnalyzedTweet> tweets,
                                        const std::set<std::string>& blocked);

// Key for duplicate detection: the lemma stream without a leading "RT" and
// the @-mention that follows it.
std::vector<std::string> dedup_key(std::span<const std::string> tokens);
std::vector<AnalyzedTweet> deduplicate(std::span<const AnalyzedTweet> tweets);

// Sorts by timestamp (stable), cuts the corpus into batch_size contiguous
// equal-count strata and draws one tweet per stratum. Result is in
// timestamp order.
std::vector<AnalyzedTweet> stratified_sample(std::span<const AnalyzedTweet> tweets,
                                             std::int64_t batch_size, std::uint64_t seed);

struct PipelineOptions {
  std::optional<std::set<std::string>> keywords;
  bool script_filter = true;
  bool deduplicate = true;
  std::optional<std::int64_t> sample_size;
  std::uint64_t seed = 0;
};

struct PipelineReport {
  std::vector<AnalyzedTweet> records;
  std::size_t input = 0;
  std::size_t after_dedup = 0;
  std::size_t after_keywords = 0;
  std::size_t after_script = 0;
  std::size_t after_blocked = 0;
};

// normalize -> dedup -> keyword filter -> script filter -> blocked terms ->
// (sample) -> stopwords and POS collapse.
PipelineReport preprocess_corpus(std::span<const AnalyzedTweet> records,
                                 const NormalizationConfig& config,
                                 const PipelineOptions& options);

// Config file loaders. All throw DataError on unreadable or malformed files.
// Emoji table: "<hex codepoints separated by spaces> TAB <index>".
EmojiTable load_emoji_table(const std::filesystem::path& path);
// One token per line; blank lines ignored.
std::set<std::string> load_word_list(const std::filesystem::path& path);
// "<fine tag> TAB <collapsed tag>". Rejects maps whose output tags are
// themselves remapped, so collapsing twice equals collapsing once.
PosCollapseMap load_pos_map(const std::filesystem::path& path);

}  // namespace relfilter
