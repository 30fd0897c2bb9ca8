#include "relfilter/features.hpp"

#include <algorithm>
#include <cctype>
#include <map>

#include "relfilter/error.hpp"
#include "relfilter/text_io.hpp"

namespace relfilter {

namespace {

constexpr char kKeySep = '\x1f';

std::string lookup_key(StreamKind kind, std::span<const std::string> tokens) {
  std::string key(1, kind == StreamKind::lemma ? 'L' : 'P');
  for (const auto& t : tokens) {
    key.push_back(kKeySep);
    key += t;
  }
  return key;
}

const std::vector<std::string>* stream_of(const AnalyzedTweet& tweet, StreamKind kind) {
  if (kind == StreamKind::lemma) return &tweet.lemmas;
  return tweet.pos ? &*tweet.pos : nullptr;
}

template <typename Fn>
void for_each_ngram(const std::vector<std::string>& stream, int order, Fn&& fn) {
  const auto n = static_cast<std::size_t>(order);
  if (stream.size() < n) return;
  for (std::size_t i = 0; i + n <= stream.size(); ++i) {
    fn(std::span<const std::string>(stream.data() + i, n));
  }
}

constexpr StreamKind kKinds[] = {StreamKind::lemma, StreamKind::pos};

}  // namespace

std::string_view stream_kind_name(StreamKind kind) {
  return kind == StreamKind::lemma ? "lemma" : "pos";
}

bool FeatureConfig::uses(StreamKind kind) const {
  if (kind == StreamKind::lemma) return source != FeatureSource::pos;
  return source != FeatureSource::lemma;
}

const std::set<int>& FeatureConfig::orders(StreamKind kind) const {
  return kind == StreamKind::lemma ? lemma_orders : pos_orders;
}

void FeatureConfig::validate() const {
  if (min_count < 1) throw UsageError("min_count must be >= 1");
  for (int o : lemma_orders) {
    if (o < 1 || o > 2) throw UsageError("lemma ngram orders must be 1 or 2");
  }
  for (int o : pos_orders) {
    if (o < 1 || o > 3) throw UsageError("POS ngram orders must be 1, 2 or 3");
  }
  if (uses(StreamKind::lemma) && lemma_orders.empty()) {
    throw UsageError("lemma features selected without any lemma ngram order");
  }
  if (uses(StreamKind::pos) && pos_orders.empty()) {
    throw UsageError("POS features selected without any POS ngram order");
  }
}

FeatureConfig feature_preset(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  FeatureConfig c;
  if (lower == "pos1") {
    c.source = FeatureSource::pos;
    c.lemma_orders = {};
    c.pos_orders = {1};
  } else if (lower == "pos1-2") {
    c.source = FeatureSource::pos;
    c.lemma_orders = {};
    c.pos_orders = {1, 2};
  } else if (lower == "pos1-3") {
    c.source = FeatureSource::pos;
    c.lemma_orders = {};
    c.pos_orders = {1, 2, 3};
  } else if (lower == "lex1") {
    c.source = FeatureSource::lemma;
    c.lemma_orders = {1};
  } else if (lower == "lex1-2") {
    c.source = FeatureSource::lemma;
    c.lemma_orders = {1, 2};
  } else if (lower == "lex1-2_pos1-3") {
    c.source = FeatureSource::both;
    c.lemma_orders = {1, 2};
    c.pos_orders = {1, 2, 3};
  } else {
    throw UsageError("unknown feature set '" + std::string(name) + "'");
  }
  return c;
}

std::vector<std::string> feature_preset_names() {
  return {"pos1", "pos1-2", "pos1-3", "lex1", "lex1-2", "lex1-2_pos1-3"};
}

Vocabulary Vocabulary::build(std::span<const AnalyzedTweet> corpus, const FeatureConfig& config) {
  config.validate();
  if (corpus.empty()) throw DataError("cannot build a vocabulary from an empty corpus");

  std::unordered_map<std::string, std::int64_t> counts;
  std::unordered_map<std::string, NgramKey> keys;
  std::unordered_map<std::string, std::size_t> last_doc;  // for document counting

  for (std::size_t doc = 0; doc < corpus.size(); ++doc) {
    const auto& tweet = corpus[doc];
    for (StreamKind kind : kKinds) {
      if (!config.uses(kind)) continue;
      const auto* stream = stream_of(tweet, kind);
      if (!stream) throw DataError("tweet '" + tweet.tweet.id + "' has no POS stream");
      for (int order : config.orders(kind)) {
        for_each_ngram(*stream, order, [&](std::span<const std::string> gram) {
          std::string key = lookup_key(kind, gram);
          if (config.count_mode == CountMode::documents) {
            auto [it, fresh] = last_doc.try_emplace(key, doc);
            if (!fresh) {
              if (it->second == doc) return;
              it->second = doc;
            }
          }
          auto [it, fresh] = counts.try_emplace(key, 0);
          ++it->second;
          if (fresh) keys.emplace(std::move(key), NgramKey{kind, {gram.begin(), gram.end()}});
        });
      }
    }
  }

  Vocabulary vocab;
  vocab.config_ = config;
  for (const auto& [key, count] : counts) {
    if (count >= config.min_count) vocab.entries_.push_back(keys.at(key));
  }
  std::sort(vocab.entries_.begin(), vocab.entries_.end());
  vocab.index_entries();
  return vocab;
}

void Vocabulary::index_entries() {
  lookup_.clear();
  lookup_.reserve(entries_.size());
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    lookup_.emplace(lookup_key(entries_[i].kind, entries_[i].tokens), static_cast<std::int32_t>(i + 1));
  }
}

std::int32_t Vocabulary::index_of(const NgramKey& key) const {
  auto it = lookup_.find(lookup_key(key.kind, key.tokens));
  return it == lookup_.end() ? 0 : it->second;
}

FeatureVector Vocabulary::vectorize(const AnalyzedTweet& tweet) const {
  FeatureVector out;
  std::string key;
  for (StreamKind kind : kKinds) {
    if (!config_.uses(kind)) continue;
    const auto* stream = stream_of(tweet, kind);
    if (!stream) continue;
    for (int order : config_.orders(kind)) {
      for_each_ngram(*stream, order, [&](std::span<const std::string> gram) {
        auto it = lookup_.find(lookup_key(kind, gram));
        if (it != lookup_.end()) out.indices.push_back(it->second);
      });
    }
  }
  std::sort(out.indices.begin(), out.indices.end());
  out.indices.erase(std::unique(out.indices.begin(), out.indices.end()), out.indices.end());
  return out;
}

std::string Vocabulary::serialize() const {
  std::string out;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    out += std::to_string(i + 1);
    out += '\t';
    out += stream_kind_name(entries_[i].kind);
    out += '\t';
    out += join(entries_[i].tokens, " ");
    out += '\n';
  }
  return out;
}

Vocabulary Vocabulary::parse(std::string_view text) {
  Vocabulary vocab;
  vocab.config_.lemma_orders.clear();
  vocab.config_.pos_orders.clear();
  vocab.config_.min_count = 1;
  bool any_lemma = false;
  bool any_pos = false;
  std::size_t line_no = 0;
  for (const auto& raw : split(text, '\n')) {
    ++line_no;
    std::string line = raw;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cols = split(line, '\t');
    auto fail = [&](const std::string& why) {
      throw DataError("vocabulary line " + std::to_string(line_no) + ": " + why);
    };
    if (cols.size() != 3) fail("expected 'index TAB kind TAB tokens'");
    if (cols[0] != std::to_string(vocab.entries_.size() + 1)) fail("indices must be dense and ascending");
    NgramKey key;
    if (cols[1] == "lemma") {
      key.kind = StreamKind::lemma;
      any_lemma = true;
    } else if (cols[1] == "pos") {
      key.kind = StreamKind::pos;
      any_pos = true;
    } else {
      fail("unknown stream kind '" + cols[1] + "'");
    }
    key.tokens = whitespace_split(cols[2]);
    if (key.tokens.empty()) fail("empty ngram");
    auto& orders = key.kind == StreamKind::lemma ? vocab.config_.lemma_orders : vocab.config_.pos_orders;
    orders.insert(static_cast<int>(key.tokens.size()));
    vocab.entries_.push_back(std::move(key));
  }
  vocab.config_.source = any_lemma && any_pos ? FeatureSource::both
                         : any_pos            ? FeatureSource::pos
                                              : FeatureSource::lemma;
  vocab.index_entries();
  return vocab;
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) { return parse(read_file(path)); }

std::string sparse_line(const FeatureVector& vector, int label) {
  std::string out = label > 0 ? "+1" : label < 0 ? "-1" : "0";
  for (std::size_t k = 0; k < vector.indices.size(); ++k) {
    out += ' ';
    out += std::to_string(vector.indices[k]);
    out += vector.binary() ? std::string(":1") : ':' + format_exact(vector.values[k]);
  }
  return out;
}

}  // namespace relfilter
