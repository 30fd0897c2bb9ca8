#pragma once

// Bag-of-ngrams vocabularies over lemma and POS streams, and binary sparse
// feature vectors.

#include <cstdint>
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "relfilter/ingest.hpp"

namespace relfilter {

enum class StreamKind { lemma, pos };

std::string_view stream_kind_name(StreamKind kind);

enum class FeatureSource { lemma, pos, both };

// How the minimum-count threshold is measured.
enum class CountMode {
  occurrences,  // total occurrences across the corpus (default)
  documents,    // number of tweets containing the ngram
};

struct FeatureConfig {
  FeatureSource source = FeatureSource::lemma;
  std::set<int> lemma_orders = {1};  // subset of {1, 2}
  std::set<int> pos_orders;          // subset of {1, 2, 3}
  int min_count = 3;
  CountMode count_mode = CountMode::occurrences;

  // Throws UsageError when the orders do not fit the source.
  void validate() const;
  bool uses(StreamKind kind) const;
  const std::set<int>& orders(StreamKind kind) const;
};

// Presets: pos1, pos1-2, pos1-3, lex1, lex1-2, lex1-2_pos1-3 (case-insensitive).
FeatureConfig feature_preset(std::string_view name);
std::vector<std::string> feature_preset_names();

// Ascending, duplicate-free feature indices (1-based). Vectors built from a
// vocabulary are binary and leave `values` empty; a nonempty `values` gives
// one real value per index.
struct FeatureVector {
  std::vector<std::int32_t> indices;
  std::vector<double> values;

  bool binary() const { return values.empty(); }
  double value(std::size_t k) const { return values.empty() ? 1.0 : values[k]; }

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

struct NgramKey {
  StreamKind kind = StreamKind::lemma;
  std::vector<std::string> tokens;

  friend auto operator<=>(const NgramKey&, const NgramKey&) = default;
  friend bool operator==(const NgramKey&, const NgramKey&) = default;
};

class Vocabulary {
 public:
  Vocabulary() = default;

  // Counts the configured ngrams over the corpus and keeps those at or above
  // min_count. Entries are indexed 1..size() in (kind, tokens) order.
  // Throws DataError when the corpus is empty or a tweet lacks a required
  // POS stream.
  static Vocabulary build(std::span<const AnalyzedTweet> corpus, const FeatureConfig& config);

  // Reads "index TAB kind TAB tokens" lines. Orders are inferred from the
  // entries.
  static Vocabulary load(const std::filesystem::path& path);
  static Vocabulary parse(std::string_view text);
  std::string serialize() const;

  FeatureVector vectorize(const AnalyzedTweet& tweet) const;

  std::size_t size() const { return entries_.size(); }
  const std::vector<NgramKey>& entries() const { return entries_; }
  const FeatureConfig& config() const { return config_; }
  // 0 when absent.
  std::int32_t index_of(const NgramKey& key) const;

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.entries_ == b.entries_; }

 private:
  void index_entries();

  FeatureConfig config_;
  std::vector<NgramKey> entries_;  // entries_[i] has index i + 1
  std::unordered_map<std::string, std::int32_t> lookup_;
};

// "label index:1 index:1 ..." with label +1, -1, or 0 when unknown.
std::string sparse_line(const FeatureVector& vector, int label);

}  // namespace relfilter
