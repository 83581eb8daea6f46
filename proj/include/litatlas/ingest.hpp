#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "litatlas/document.hpp"

namespace litatlas {

using Date = std::chrono::year_month_day;

/// "YYYY-MM-DD"; throws Error(kInvalidArgument).
Date parse_date(std::string_view text);
std::string format_date(Date d, char sep = '-');

/// A query against one source API, validated at construction.
class SourceQuery {
 public:
  static constexpr int kDefaultPubmedDelayMs = 350;
  static constexpr int kDefaultArxivDelayMs = 3000;

  /// Throws Error(kInvalidArgument) when max_results < 1, date_from > date_to,
  /// polite_delay_ms < 0, or source is not pubmed/arxiv. A missing delay
  /// takes the per-source default.
  SourceQuery(Source source, std::string query_string, int max_results,
              std::optional<Date> date_from = std::nullopt,
              std::optional<Date> date_to = std::nullopt,
              std::optional<int> polite_delay_ms = std::nullopt);

  Source source() const { return source_; }
  const std::string& query_string() const { return query_string_; }
  int max_results() const { return max_results_; }
  const std::optional<Date>& date_from() const { return date_from_; }
  const std::optional<Date>& date_to() const { return date_to_; }
  int polite_delay_ms() const { return polite_delay_ms_; }

  bool operator==(const SourceQuery&) const = default;

 private:
  Source source_;
  std::string query_string_;
  int max_results_;
  std::optional<Date> date_from_;
  std::optional<Date> date_to_;
  int polite_delay_ms_;
};

nlohmann::json to_json(const SourceQuery& q);
SourceQuery source_query_from_json(const nlohmann::json& j);

struct HttpResponse {
  int status = 0;  // 0 = no response (timeout, connection failure)
  std::string body;
};

/// GET-only HTTP client contract, injected so fetches can run offline.
class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResponse get(const std::string& url) = 0;
};

/// libcurl-backed transport.
class CurlTransport : public HttpTransport {
 public:
  explicit CurlTransport(std::chrono::seconds timeout = std::chrono::seconds(60),
                         std::string user_agent = "litatlas/1.0");
  HttpResponse get(const std::string& url) override;

 private:
  std::chrono::seconds timeout_;
  std::string user_agent_;
};

/// Serves recorded responses from a fixture directory. `responses.json`
/// lists {"match": <url substring>, "file": <name>, "status": <int>} entries;
/// each request consumes the first unused entry whose substring occurs in
/// the URL, or gets a 404.
class ReplayTransport : public HttpTransport {
 public:
  explicit ReplayTransport(const std::filesystem::path& fixture_dir);
  HttpResponse get(const std::string& url) override;

  const std::vector<std::string>& requested_urls() const { return requested_; }

 private:
  struct Entry {
    std::string match;
    HttpResponse response;
    bool used = false;
  };
  std::vector<Entry> entries_;
  std::vector<std::string> requested_;
};

struct FetchOptions {
  std::function<void(std::chrono::milliseconds)> sleep;  // defaults to sleeping
  std::function<Timestamp()> clock;                      // defaults to utc_now
  int max_attempts = 3;
  std::chrono::milliseconds backoff_base{1000};
  std::size_t pubmed_batch = 200;
  std::size_t arxiv_page = 100;
};

struct FetchReport {
  std::size_t requests = 0;
  std::size_t retries = 0;
  std::size_t records_seen = 0;
  std::size_t missing_abstract = 0;
  std::vector<std::string> skipped;  // one reason per skipped record
};

nlohmann::json to_json(const FetchReport& report);

struct FetchResult {
  std::vector<Document> documents;
  FetchReport report;
};

/// Paged, rate-limited fetch. Throws Error(kTransportError) once retries are
/// exhausted (5xx, no response) or immediately on 4xx, and
/// Error(kMalformedResponse) on payloads of the wrong shape.
FetchResult fetch(const SourceQuery& query, HttpTransport& transport,
                  const FetchOptions& options = {});

/// Contract for custom scrapers; fetch() for pubmed/arxiv is built on it.
class DocumentSource {
 public:
  virtual ~DocumentSource() = default;
  virtual std::string name() const = 0;
  virtual FetchResult fetch(HttpTransport& transport, const FetchOptions& options) = 0;
};

std::unique_ptr<DocumentSource> make_source(const SourceQuery& query);

struct ParseResult {
  std::vector<Document> documents;
  std::size_t records_seen = 0;
  std::size_t missing_abstract = 0;
  std::vector<std::string> skipped;
};

/// efetch result set (PubmedArticleSet). Labeled abstract sections are joined
/// with single spaces, labels dropped.
ParseResult parse_pubmed_xml(std::string_view payload, Timestamp fetched_at = utc_now());

struct EsearchResult {
  std::size_t count = 0;
  std::vector<std::string> ids;
};

EsearchResult parse_pubmed_esearch(std::string_view payload);

/// Atom 1.0 feed from the arXiv query API.
ParseResult parse_arxiv_atom(std::string_view payload, Timestamp fetched_at = utc_now());

/// ".../abs/1234.5678v2" -> "arxiv:1234.5678".
std::string arxiv_doc_id(std::string_view entry_id);

/// Collapses whitespace runs to one space and trims.
std::string normalize_whitespace(std::string_view text);

std::string url_encode(std::string_view text);

}  // namespace litatlas
