#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "litatlas/document.hpp"

namespace litatlas {

/// The English stopword list shipped in data/stopwords.txt.
const std::set<std::string>& default_stopwords();
std::set<std::string> load_stopwords(const std::string& path);

struct TokenizerConfig {
  bool lowercase = true;
  int min_token_length = 2;
  std::set<std::string> stopwords = default_stopwords();
  int min_document_frequency = 2;
  double max_document_fraction = 0.9;

  void validate() const;
  bool operator==(const TokenizerConfig&) const = default;
};

nlohmann::json to_json(const TokenizerConfig& config);
TokenizerConfig tokenizer_config_from_json(const nlohmann::json& j);

/// Splits UTF-8 text on non-alphanumeric code points. Letters and digits of
/// any script are kept; invalid UTF-8 bytes act as separators.
std::vector<std::string> tokenize(std::string_view text, const TokenizerConfig& config);

/// The text a document contributes to the bag of words.
std::string_view document_text(const Document& doc);

struct SparseEntry {
  std::uint32_t index;
  double weight;

  bool operator==(const SparseEntry&) const = default;
};

/// Entries sorted by strictly increasing index. tf-idf vectors are
/// L2-normalized or empty.
struct SparseVector {
  std::vector<SparseEntry> entries;
  std::size_t dimensionality = 0;

  bool empty() const { return entries.empty(); }
  double norm() const;
  bool operator==(const SparseVector&) const = default;
};

/// Term list (sorted, index = dimension) and per-term document frequency.
class Vocabulary {
 public:
  Vocabulary() = default;
  Vocabulary(std::vector<std::string> terms, std::vector<std::uint32_t> document_frequency,
             std::size_t corpus_size, TokenizerConfig build_params);

  std::size_t size() const { return terms_.size(); }
  std::size_t corpus_size() const { return corpus_size_; }
  const std::vector<std::string>& terms() const { return terms_; }
  const std::vector<std::uint32_t>& document_frequency() const { return document_frequency_; }
  const TokenizerConfig& build_params() const { return build_params_; }

  std::optional<std::uint32_t> index_of(std::string_view term) const;

  /// ln(|D| / df(t)); throws Error(kUnknownTerm).
  double idf(std::string_view term) const;
  double idf(std::uint32_t index) const { return idf_[index]; }

  bool operator==(const Vocabulary& other) const {
    return terms_ == other.terms_ && document_frequency_ == other.document_frequency_ &&
           corpus_size_ == other.corpus_size_ && build_params_ == other.build_params_;
  }

 private:
  std::vector<std::string> terms_;
  std::vector<std::uint32_t> document_frequency_;
  std::size_t corpus_size_ = 0;
  TokenizerConfig build_params_;
  std::vector<double> idf_;
  std::unordered_map<std::string, std::uint32_t> lookup_;
};

nlohmann::json to_json(const Vocabulary& vocabulary);
Vocabulary vocabulary_from_json(const nlohmann::json& j);

/// Throws Error(kEmptyCorpus) when `corpus` is empty.
Vocabulary build_vocabulary(std::span<const Document> corpus, const TokenizerConfig& config);

/// Raw term counts times idf over vocabulary terms, L2-normalized. Tokens
/// outside the vocabulary and zero-idf terms contribute no entry.
SparseVector tfidf_from_text(std::string_view text, const Vocabulary& vocabulary);
SparseVector tfidf_vector(const Document& doc, const Vocabulary& vocabulary);

}  // namespace litatlas
