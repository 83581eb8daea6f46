#include "litatlas/document.hpp"

#include <ctime>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "litatlas/error.hpp"

namespace litatlas {

namespace {

bool is_blank(std::string_view s) {
  return s.find_first_not_of(" \t\r\n\f\v") == std::string_view::npos;
}

}  // namespace

Timestamp utc_now() {
  return std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
}

std::string format_timestamp(Timestamp t) {
  std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  return fmt::format("{:04d}-{:02d}-{:02d}T{:02d}:{:02d}:{:02d}Z", tm.tm_year + 1900,
                     tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
}

Timestamp parse_timestamp(std::string_view text) {
  std::tm tm{};
  std::string s(text);
  int year = 0, mon = 0, day = 0, hour = 0, min = 0, sec = 0;
  int n = std::sscanf(s.c_str(), "%d-%d-%dT%d:%d:%d", &year, &mon, &day, &hour, &min, &sec);
  if (n < 3) {
    throw Error(ErrorCode::kInvalidArgument, fmt::format("bad timestamp '{}'", s));
  }
  tm.tm_year = year - 1900;
  tm.tm_mon = mon - 1;
  tm.tm_mday = day;
  tm.tm_hour = hour;
  tm.tm_min = min;
  tm.tm_sec = sec;
  return std::chrono::time_point_cast<std::chrono::seconds>(
      std::chrono::system_clock::from_time_t(timegm(&tm)));
}

std::string_view to_string(Source source) {
  switch (source) {
    case Source::pubmed: return "pubmed";
    case Source::arxiv: return "arxiv";
    case Source::custom: return "custom";
  }
  return "custom";
}

Source parse_source(std::string_view text) {
  if (text == "pubmed") return Source::pubmed;
  if (text == "arxiv") return Source::arxiv;
  if (text == "custom") return Source::custom;
  throw Error(ErrorCode::kInvalidArgument, fmt::format("unknown source '{}'", text));
}

int min_publication_year() { return 1800; }

int max_publication_year() {
  std::time_t tt = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  return tm.tm_year + 1900 + 1;
}

void validate(const Document& doc) {
  if (doc.doc_id.empty()) {
    throw Error(ErrorCode::kInvalidDocument, "<empty>: doc_id is empty");
  }
  if (is_blank(doc.abstract_text)) {
    throw Error(ErrorCode::kInvalidDocument, doc.doc_id + ": abstract is empty");
  }
  if (doc.published_year &&
      (*doc.published_year < min_publication_year() ||
       *doc.published_year > max_publication_year())) {
    throw Error(ErrorCode::kInvalidDocument,
                fmt::format("{}: published_year {} outside [{}, {}]", doc.doc_id,
                            *doc.published_year, min_publication_year(),
                            max_publication_year()));
  }
}

nlohmann::json to_json(const Document& doc) {
  nlohmann::json j = {
      {"doc_id", doc.doc_id},
      {"source", to_string(doc.source)},
      {"title", doc.title},
      {"abstract_text", doc.abstract_text},
      {"authors", doc.authors},
      {"venue", doc.venue},
      {"published_year", nullptr},
      {"url", doc.url},
      {"fetched_at", format_timestamp(doc.fetched_at)},
  };
  if (doc.published_year) j["published_year"] = *doc.published_year;
  return j;
}

Document document_from_json(const nlohmann::json& j) {
  try {
    Document doc;
    doc.doc_id = j.at("doc_id").get<std::string>();
    doc.source = parse_source(j.value("source", "custom"));
    doc.title = j.value("title", "");
    doc.abstract_text = j.at("abstract_text").get<std::string>();
    doc.authors = j.value("authors", std::vector<std::string>{});
    doc.venue = j.value("venue", "");
    if (j.contains("published_year") && !j["published_year"].is_null()) {
      doc.published_year = j["published_year"].get<int>();
    }
    doc.url = j.value("url", "");
    if (j.contains("fetched_at")) {
      doc.fetched_at = parse_timestamp(j["fetched_at"].get<std::string>());
    }
    return doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidDocument, std::string("malformed document JSON: ") + e.what());
  }
}

UpsertResult Corpus::upsert(std::span<const Document> docs) {
  std::set<std::string_view> seen_in_batch;
  for (const auto& doc : docs) validate(doc);

  UpsertResult result;
  for (const auto& doc : docs) {
    auto [it, inserted] = docs_.insert_or_assign(doc.doc_id, doc);
    // A doc_id repeated inside one batch counts once, as its last occurrence.
    if (!seen_in_batch.insert(it->first).second) continue;
    if (inserted) {
      ++result.inserted;
    } else {
      ++result.updated;
    }
  }
  return result;
}

const Document* Corpus::find(std::string_view doc_id) const {
  auto it = docs_.find(doc_id);
  return it == docs_.end() ? nullptr : &it->second;
}

std::vector<std::string> Corpus::ids() const {
  std::vector<std::string> out;
  out.reserve(docs_.size());
  for (const auto& [id, _] : docs_) out.push_back(id);
  return out;
}

std::string Corpus::to_jsonl() const {
  std::string out;
  for (const auto& [_, doc] : docs_) {
    out += to_json(doc).dump();
    out += '\n';
  }
  return out;
}

Corpus Corpus::from_jsonl(std::string_view text) {
  Corpus corpus;
  std::vector<Document> docs;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::kInvalidDocument,
                  fmt::format("line {}: {}", line_no, e.what()));
    }
    docs.push_back(document_from_json(j));
  }
  corpus.upsert(docs);
  return corpus;
}

}  // namespace litatlas
