#pragma once

#include <chrono>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace litatlas {

using Timestamp = std::chrono::sys_seconds;

Timestamp utc_now();
std::string format_timestamp(Timestamp t);  // 2017-02-14T09:30:00Z
Timestamp parse_timestamp(std::string_view text);

enum class Source { pubmed, arxiv, custom };

std::string_view to_string(Source source);
Source parse_source(std::string_view text);

/// One publication record as scraped from a source API.
struct Document {
  std::string doc_id;  // source-prefixed, e.g. "pubmed:12345"
  Source source = Source::custom;
  std::string title;
  std::string abstract_text;
  std::vector<std::string> authors;
  std::string venue;
  std::optional<int> published_year;
  std::string url;
  Timestamp fetched_at{};

  bool operator==(const Document&) const = default;
};

/// Inclusive bounds on Document::published_year.
int min_publication_year();
int max_publication_year();  // current year + 1

/// Throws Error(kInvalidDocument) naming the doc_id and the violated rule.
void validate(const Document& doc);

nlohmann::json to_json(const Document& doc);
Document document_from_json(const nlohmann::json& j);

struct UpsertResult {
  std::size_t inserted = 0;
  std::size_t updated = 0;

  bool operator==(const UpsertResult&) const = default;
};

/// The document corpus, keyed and iterated in doc_id order. Writes follow a
/// single-writer contract; callers serialize upserts.
class Corpus {
 public:
  using Map = std::map<std::string, Document, std::less<>>;

  /// All documents are validated first; on any violation nothing is written.
  UpsertResult upsert(std::span<const Document> docs);

  const Document* find(std::string_view doc_id) const;
  bool contains(std::string_view doc_id) const { return find(doc_id) != nullptr; }
  std::size_t size() const { return docs_.size(); }
  bool empty() const { return docs_.empty(); }

  Map::const_iterator begin() const { return docs_.begin(); }
  Map::const_iterator end() const { return docs_.end(); }

  std::vector<std::string> ids() const;

  /// Newline-delimited JSON, one document per line, doc_id order.
  std::string to_jsonl() const;
  static Corpus from_jsonl(std::string_view text);

  bool operator==(const Corpus&) const = default;

 private:
  Map docs_;
};

}  // namespace litatlas
