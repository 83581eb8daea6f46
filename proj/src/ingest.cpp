#include "litatlas/ingest.hpp"

#include <algorithm>
#include <cstdio>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "litatlas/error.hpp"

namespace litatlas {

namespace {

constexpr std::string_view kEutilsBase = "https://eutils.ncbi.nlm.nih.gov/entrez/eutils/";
constexpr std::string_view kArxivBase = "http://export.arxiv.org/api/query";
constexpr std::size_t kEsearchPage = 5000;

// Issues GETs with polite spacing and bounded retries.
class RequestPacer {
 public:
  RequestPacer(HttpTransport& transport, const FetchOptions& options, int delay_ms,
               FetchReport& report)
      : transport_(transport), options_(options), delay_(delay_ms), report_(report) {}

  std::string get(const std::string& url) {
    for (int attempt = 1;; ++attempt) {
      if (report_.requests > 0) sleep(delay_);
      ++report_.requests;
      HttpResponse response = transport_.get(url);
      if (response.status >= 200 && response.status < 300) return std::move(response.body);
      bool retryable = response.status == 0 || response.status >= 500;
      if (!retryable || attempt >= options_.max_attempts) {
        throw Error(ErrorCode::kTransportError,
                    fmt::format("HTTP {} for {} after {} attempt(s)", response.status, url,
                                attempt));
      }
      ++report_.retries;
      auto backoff = options_.backoff_base * (1 << (attempt - 1));
      spdlog::warn("ingest: HTTP {} for {}, retrying in {} ms", response.status, url,
                   backoff.count());
      sleep(backoff);
    }
  }

 private:
  void sleep(std::chrono::milliseconds d) {
    if (d.count() <= 0) return;
    if (options_.sleep) {
      options_.sleep(d);
    } else {
      std::this_thread::sleep_for(d);
    }
  }

  HttpTransport& transport_;
  const FetchOptions& options_;
  std::chrono::milliseconds delay_;
  FetchReport& report_;
};

Timestamp now(const FetchOptions& options) { return options.clock ? options.clock() : utc_now(); }

void absorb(FetchResult& out, ParseResult parsed, std::size_t max_results) {
  out.report.records_seen += parsed.records_seen;
  out.report.missing_abstract += parsed.missing_abstract;
  for (auto& s : parsed.skipped) out.report.skipped.push_back(std::move(s));
  for (auto& d : parsed.documents) {
    if (out.documents.size() >= max_results) break;
    out.documents.push_back(std::move(d));
  }
}

class PubmedSource : public DocumentSource {
 public:
  explicit PubmedSource(SourceQuery query) : query_(std::move(query)) {}
  std::string name() const override { return "pubmed"; }

  FetchResult fetch(HttpTransport& transport, const FetchOptions& options) override {
    FetchResult out;
    RequestPacer pacer(transport, options, query_.polite_delay_ms(), out.report);
    const auto max = static_cast<std::size_t>(query_.max_results());

    std::vector<std::string> ids;
    for (std::size_t start = 0; ids.size() < max;) {
      std::size_t page = std::min(kEsearchPage, max - ids.size());
      std::string url = fmt::format("{}esearch.fcgi?db=pubmed&term={}&retmax={}&retstart={}",
                                    kEutilsBase, url_encode(query_.query_string()), page, start);
      if (query_.date_from() || query_.date_to()) {
        url += "&datetype=pdat";
        url += "&mindate=" + format_date(query_.date_from().value_or(Date{
                                             std::chrono::year{1800}, std::chrono::January,
                                             std::chrono::day{1}}),
                                         '/');
        url += "&maxdate=" + format_date(query_.date_to().value_or(Date{
                                             std::chrono::year{3000}, std::chrono::December,
                                             std::chrono::day{31}}),
                                         '/');
      }
      EsearchResult found = parse_pubmed_esearch(pacer.get(url));
      ids.insert(ids.end(), found.ids.begin(), found.ids.end());
      start += found.ids.size();
      if (found.ids.empty() || start >= found.count) break;
    }
    if (ids.size() > max) ids.resize(max);

    for (std::size_t b = 0; b < ids.size(); b += options.pubmed_batch) {
      std::size_t e = std::min(ids.size(), b + options.pubmed_batch);
      std::string id_list;
      for (std::size_t i = b; i < e; ++i) {
        if (i > b) id_list += ',';
        id_list += ids[i];
      }
      std::string url =
          fmt::format("{}efetch.fcgi?db=pubmed&id={}&rettype=abstract&retmode=xml", kEutilsBase,
                      id_list);
      absorb(out, parse_pubmed_xml(pacer.get(url), now(options)), max);
    }
    return out;
  }

 private:
  SourceQuery query_;
};

class ArxivSource : public DocumentSource {
 public:
  explicit ArxivSource(SourceQuery query) : query_(std::move(query)) {}
  std::string name() const override { return "arxiv"; }

  FetchResult fetch(HttpTransport& transport, const FetchOptions& options) override {
    FetchResult out;
    RequestPacer pacer(transport, options, query_.polite_delay_ms(), out.report);
    const auto max = static_cast<std::size_t>(query_.max_results());

    std::string search = query_.query_string();
    if (query_.date_from() || query_.date_to()) {
      std::string from = query_.date_from() ? format_date(*query_.date_from(), '\0') : "18000101";
      std::string to = query_.date_to() ? format_date(*query_.date_to(), '\0') : "30001231";
      search = fmt::format("({}) AND submittedDate:[{}0000 TO {}2359]", search, from, to);
    }
    for (std::size_t start = 0; out.documents.size() < max;) {
      std::size_t page = std::min(options.arxiv_page, max - out.documents.size());
      std::string url = fmt::format(
          "{}?search_query={}&start={}&max_results={}&sortBy=submittedDate&sortOrder=descending",
          kArxivBase, url_encode(search), start, page);
      ParseResult parsed = parse_arxiv_atom(pacer.get(url), now(options));
      std::size_t seen = parsed.records_seen;
      absorb(out, std::move(parsed), max);
      if (seen < page) break;
      start += seen;
    }
    return out;
  }

 private:
  SourceQuery query_;
};

}  // namespace

Date parse_date(std::string_view text) {
  int y = 0;
  unsigned m = 0;
  unsigned d = 0;
  std::string s(text);
  char tail = 0;
  if (std::sscanf(s.c_str(), "%d-%u-%u%c", &y, &m, &d, &tail) != 3) {
    throw Error(ErrorCode::kInvalidArgument, fmt::format("bad date '{}', want YYYY-MM-DD", s));
  }
  Date date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!date.ok()) throw Error(ErrorCode::kInvalidArgument, fmt::format("invalid date '{}'", s));
  return date;
}

std::string format_date(Date d, char sep) {
  if (sep == '\0') {
    return fmt::format("{:04d}{:02d}{:02d}", static_cast<int>(d.year()),
                       static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
  }
  return fmt::format("{:04d}{}{:02d}{}{:02d}", static_cast<int>(d.year()), sep,
                     static_cast<unsigned>(d.month()), sep, static_cast<unsigned>(d.day()));
}

SourceQuery::SourceQuery(Source source, std::string query_string, int max_results,
                         std::optional<Date> date_from, std::optional<Date> date_to,
                         std::optional<int> polite_delay_ms)
    : source_(source),
      query_string_(std::move(query_string)),
      max_results_(max_results),
      date_from_(date_from),
      date_to_(date_to),
      polite_delay_ms_(polite_delay_ms.value_or(
          source == Source::arxiv ? kDefaultArxivDelayMs : kDefaultPubmedDelayMs)) {
  if (source_ == Source::custom) {
    throw Error(ErrorCode::kInvalidArgument, "source queries target pubmed or arxiv");
  }
  if (max_results_ < 1) {
    throw Error(ErrorCode::kInvalidArgument, "max_results must be >= 1");
  }
  if (date_from_ && date_to_ && *date_from_ > *date_to_) {
    throw Error(ErrorCode::kInvalidArgument, "date_from is after date_to");
  }
  if (polite_delay_ms_ < 0) {
    throw Error(ErrorCode::kInvalidArgument, "polite_delay_ms must be non-negative");
  }
}

nlohmann::json to_json(const SourceQuery& q) {
  nlohmann::json j = {{"source", to_string(q.source())},
                      {"query", q.query_string()},
                      {"max_results", q.max_results()},
                      {"polite_delay_ms", q.polite_delay_ms()}};
  if (q.date_from()) j["date_from"] = format_date(*q.date_from());
  if (q.date_to()) j["date_to"] = format_date(*q.date_to());
  return j;
}

SourceQuery source_query_from_json(const nlohmann::json& j) {
  std::optional<Date> from;
  std::optional<Date> to;
  std::optional<int> delay;
  if (j.contains("date_from")) from = parse_date(j["date_from"].get<std::string>());
  if (j.contains("date_to")) to = parse_date(j["date_to"].get<std::string>());
  if (j.contains("polite_delay_ms")) delay = j["polite_delay_ms"].get<int>();
  return SourceQuery(parse_source(j.at("source").get<std::string>()),
                     j.at("query").get<std::string>(), j.at("max_results").get<int>(), from, to,
                     delay);
}

nlohmann::json to_json(const FetchReport& r) {
  return {{"requests", r.requests},
          {"retries", r.retries},
          {"records_seen", r.records_seen},
          {"missing_abstract", r.missing_abstract},
          {"skipped", r.skipped}};
}

std::unique_ptr<DocumentSource> make_source(const SourceQuery& query) {
  if (query.source() == Source::arxiv) return std::make_unique<ArxivSource>(query);
  return std::make_unique<PubmedSource>(query);
}

FetchResult fetch(const SourceQuery& query, HttpTransport& transport,
                  const FetchOptions& options) {
  auto source = make_source(query);
  FetchResult result = source->fetch(transport, options);
  spdlog::info("ingest[{}]: {} documents from {} records in {} requests ({} without abstract)",
               source->name(), result.documents.size(), result.report.records_seen,
               result.report.requests, result.report.missing_abstract);
  return result;
}

std::string url_encode(std::string_view text) {
  std::string out;
  for (unsigned char c : text) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out += static_cast<char>(c);
    } else {
      out += fmt::format("%{:02X}", c);
    }
  }
  return out;
}

}  // namespace litatlas
