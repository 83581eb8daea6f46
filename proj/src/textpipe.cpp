#include "litatlas/textpipe.hpp"

#include <clocale>
#include <cmath>
#include <cwctype>
#include <fstream>
#include <locale.h>
#include <map>
#include <sstream>
#include <unordered_set>

#include <fmt/format.h>

#include "litatlas/error.hpp"

namespace litatlas {

extern const char* const kStopwordsText;  // generated from data/stopwords.txt

namespace {

std::set<std::string> parse_stopwords(std::istream& in) {
  std::set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos || line[b] == '#') continue;
    auto e = line.find_last_not_of(" \t\r");
    words.insert(line.substr(b, e - b + 1));
  }
  return words;
}

locale_t utf8_locale() {
  static locale_t loc = [] {
    locale_t l = newlocale(LC_CTYPE_MASK, "C.UTF-8", static_cast<locale_t>(nullptr));
    if (l == static_cast<locale_t>(nullptr)) {
      l = newlocale(LC_CTYPE_MASK, "C", static_cast<locale_t>(nullptr));
    }
    return l;
  }();
  return loc;
}

// Decodes one code point at s[i], advancing i. Returns -1 on invalid input
// (i advances by one byte).
long decode_utf8(std::string_view s, std::size_t& i) {
  auto byte = [&](std::size_t k) { return static_cast<unsigned char>(s[k]); };
  unsigned char c = byte(i);
  if (c < 0x80) {
    ++i;
    return c;
  }
  int len = 0;
  long cp = 0;
  if ((c & 0xE0) == 0xC0) {
    len = 2;
    cp = c & 0x1F;
  } else if ((c & 0xF0) == 0xE0) {
    len = 3;
    cp = c & 0x0F;
  } else if ((c & 0xF8) == 0xF0) {
    len = 4;
    cp = c & 0x07;
  } else {
    ++i;
    return -1;
  }
  if (i + len > s.size()) {
    ++i;
    return -1;
  }
  for (int k = 1; k < len; ++k) {
    unsigned char cc = byte(i + k);
    if ((cc & 0xC0) != 0x80) {
      ++i;
      return -1;
    }
    cp = (cp << 6) | (cc & 0x3F);
  }
  static constexpr long kMinForLen[] = {0, 0, 0x80, 0x800, 0x10000};
  if (cp < kMinForLen[len] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
    ++i;
    return -1;
  }
  i += len;
  return cp;
}

void append_utf8(std::string& out, long cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

}  // namespace

const std::set<std::string>& default_stopwords() {
  static const std::set<std::string> words = [] {
    std::istringstream in(kStopwordsText);
    return parse_stopwords(in);
  }();
  return words;
}

std::set<std::string> load_stopwords(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoFailure, path + ": cannot open stopword list");
  return parse_stopwords(in);
}

void TokenizerConfig::validate() const {
  if (min_token_length < 1) {
    throw Error(ErrorCode::kInvalidArgument, "min_token_length must be >= 1");
  }
  if (min_document_frequency < 1) {
    throw Error(ErrorCode::kInvalidArgument, "min_document_frequency must be >= 1");
  }
  if (!(max_document_fraction > 0.0 && max_document_fraction <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "max_document_fraction must be in (0, 1]");
  }
}

nlohmann::json to_json(const TokenizerConfig& config) {
  return {
      {"lowercase", config.lowercase},
      {"min_token_length", config.min_token_length},
      {"stopword_list", config.stopwords},
      {"min_document_frequency", config.min_document_frequency},
      {"max_document_fraction", config.max_document_fraction},
  };
}

TokenizerConfig tokenizer_config_from_json(const nlohmann::json& j) {
  TokenizerConfig c;
  c.lowercase = j.value("lowercase", c.lowercase);
  c.min_token_length = j.value("min_token_length", c.min_token_length);
  if (j.contains("stopword_list")) {
    c.stopwords = j["stopword_list"].get<std::set<std::string>>();
  } else if (j.contains("stopword_file")) {
    c.stopwords = load_stopwords(j["stopword_file"].get<std::string>());
  }
  c.min_document_frequency = j.value("min_document_frequency", c.min_document_frequency);
  c.max_document_fraction = j.value("max_document_fraction", c.max_document_fraction);
  c.validate();
  return c;
}

std::vector<std::string> tokenize(std::string_view text, const TokenizerConfig& config) {
  std::vector<std::string> tokens;
  std::string current;
  std::size_t current_len = 0;  // in code points
  locale_t loc = utf8_locale();

  auto flush = [&] {
    if (current_len >= static_cast<std::size_t>(config.min_token_length) &&
        !config.stopwords.contains(current)) {
      tokens.push_back(current);
    }
    current.clear();
    current_len = 0;
  };

  std::size_t i = 0;
  while (i < text.size()) {
    long cp = decode_utf8(text, i);
    bool alnum = cp >= 0 && iswalnum_l(static_cast<wint_t>(cp), loc);
    if (!alnum) {
      if (!current.empty()) flush();
      continue;
    }
    if (config.lowercase) cp = static_cast<long>(towlower_l(static_cast<wint_t>(cp), loc));
    append_utf8(current, cp);
    ++current_len;
  }
  if (!current.empty()) flush();
  return tokens;
}

std::string_view document_text(const Document& doc) { return doc.abstract_text; }

double SparseVector::norm() const {
  double s = 0.0;
  for (const auto& e : entries) s += e.weight * e.weight;
  return std::sqrt(s);
}

Vocabulary::Vocabulary(std::vector<std::string> terms,
                       std::vector<std::uint32_t> document_frequency, std::size_t corpus_size,
                       TokenizerConfig build_params)
    : terms_(std::move(terms)),
      document_frequency_(std::move(document_frequency)),
      corpus_size_(corpus_size),
      build_params_(std::move(build_params)) {
  if (terms_.size() != document_frequency_.size()) {
    throw Error(ErrorCode::kInvalidArgument, "terms and document_frequency differ in length");
  }
  idf_.reserve(terms_.size());
  lookup_.reserve(terms_.size());
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    if (i > 0 && !(terms_[i - 1] < terms_[i])) {
      throw Error(ErrorCode::kInvalidArgument, "vocabulary terms must be unique and sorted");
    }
    std::uint32_t df = document_frequency_[i];
    if (df < 1 || df > corpus_size_) {
      throw Error(ErrorCode::kInvalidArgument,
                  fmt::format("document frequency {} of '{}' outside [1, {}]", df, terms_[i],
                              corpus_size_));
    }
    idf_.push_back(std::log(static_cast<double>(corpus_size_) / static_cast<double>(df)));
    lookup_.emplace(terms_[i], static_cast<std::uint32_t>(i));
  }
}

std::optional<std::uint32_t> Vocabulary::index_of(std::string_view term) const {
  auto it = lookup_.find(std::string(term));
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

double Vocabulary::idf(std::string_view term) const {
  auto idx = index_of(term);
  if (!idx) throw Error(ErrorCode::kUnknownTerm, std::string(term));
  return idf_[*idx];
}

nlohmann::json to_json(const Vocabulary& vocabulary) {
  return {
      {"terms", vocabulary.terms()},
      {"document_frequency", vocabulary.document_frequency()},
      {"corpus_size", vocabulary.corpus_size()},
      {"build_params", to_json(vocabulary.build_params())},
  };
}

Vocabulary vocabulary_from_json(const nlohmann::json& j) {
  return Vocabulary(j.at("terms").get<std::vector<std::string>>(),
                    j.at("document_frequency").get<std::vector<std::uint32_t>>(),
                    j.at("corpus_size").get<std::size_t>(),
                    tokenizer_config_from_json(j.at("build_params")));
}

Vocabulary build_vocabulary(std::span<const Document> corpus, const TokenizerConfig& config) {
  config.validate();
  if (corpus.empty()) throw Error(ErrorCode::kEmptyCorpus, "cannot build a vocabulary");

  std::map<std::string, std::uint32_t> df;
  for (const auto& doc : corpus) {
    auto tokens = tokenize(document_text(doc), config);
    std::unordered_set<std::string> unique(tokens.begin(), tokens.end());
    for (const auto& t : unique) ++df[t];
  }

  const double n = static_cast<double>(corpus.size());
  std::vector<std::string> terms;
  std::vector<std::uint32_t> freq;
  for (auto& [term, count] : df) {
    if (count < static_cast<std::uint32_t>(config.min_document_frequency)) continue;
    if (static_cast<double>(count) / n > config.max_document_fraction) continue;
    terms.push_back(term);
    freq.push_back(count);
  }
  return Vocabulary(std::move(terms), std::move(freq), corpus.size(), config);
}

SparseVector tfidf_from_text(std::string_view text, const Vocabulary& vocabulary) {
  std::map<std::uint32_t, std::uint32_t> counts;
  for (const auto& token : tokenize(text, vocabulary.build_params())) {
    if (auto idx = vocabulary.index_of(token)) ++counts[*idx];
  }

  SparseVector v;
  v.dimensionality = vocabulary.size();
  double sq = 0.0;
  for (auto [idx, tf] : counts) {
    double w = static_cast<double>(tf) * vocabulary.idf(idx);
    if (w <= 0.0) continue;
    v.entries.push_back({idx, w});
    sq += w * w;
  }
  if (sq > 0.0) {
    double norm = std::sqrt(sq);
    for (auto& e : v.entries) e.weight /= norm;
  }
  return v;
}

SparseVector tfidf_vector(const Document& doc, const Vocabulary& vocabulary) {
  return tfidf_from_text(document_text(doc), vocabulary);
}

}  // namespace litatlas
