// PubMed efetch/esearch and arXiv Atom parsers.

#include <cctype>
#include <regex>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "litatlas/error.hpp"
#include "litatlas/ingest.hpp"

namespace litatlas {

namespace pt = boost::property_tree;

namespace {

pt::ptree parse_xml(std::string_view payload, std::string_view what) {
  pt::ptree tree;
  std::istringstream in{std::string(payload)};
  try {
    pt::read_xml(in, tree, pt::xml_parser::no_concat_text);
  } catch (const pt::xml_parser_error& e) {
    throw Error(ErrorCode::kMalformedResponse, fmt::format("{}: {}", what, e.what()));
  }
  return tree;
}

bool is_markup_key(const std::string& key) {
  return key == "<xmlattr>" || key == "<xmlcomment>";
}

// Concatenates all text below `node` in document order, including text
// inside inline markup such as <i> or <sup>.
void gather_text(const pt::ptree& node, std::string& out) {
  out += node.data();
  for (const auto& [key, child] : node) {
    if (key == "<xmltext>") {
      out += child.data();
    } else if (!is_markup_key(key)) {
      gather_text(child, out);
    }
  }
}

std::string text_of(const pt::ptree& node) {
  std::string out;
  gather_text(node, out);
  return normalize_whitespace(out);
}

std::string child_text(const pt::ptree& node, const std::string& path) {
  auto child = node.get_child_optional(path);
  return child ? text_of(*child) : std::string();
}

std::string attribute(const pt::ptree& node, const std::string& name) {
  return node.get<std::string>("<xmlattr>." + name, "");
}

// Only a single root element is accepted.
const pt::ptree& root_element(const pt::ptree& tree, std::string_view expected,
                              std::string_view what) {
  for (const auto& [key, child] : tree) {
    if (is_markup_key(key) || key == "<xmltext>") continue;
    if (key != expected) {
      throw Error(ErrorCode::kMalformedResponse,
                  fmt::format("{}: root element <{}>, expected <{}>", what, key, expected));
    }
    return child;
  }
  throw Error(ErrorCode::kMalformedResponse, fmt::format("{}: no root element", what));
}

std::optional<int> leading_year(std::string_view text) {
  static const std::regex year_re(R"((\d{4}))");
  std::string s(text);
  std::smatch m;
  if (!std::regex_search(s, m, year_re)) return std::nullopt;
  int year = std::stoi(m[1].str());
  if (year < min_publication_year() || year > max_publication_year()) return std::nullopt;
  return year;
}

std::optional<Document> pubmed_record(const pt::ptree& article, Timestamp fetched_at,
                                      ParseResult& result) {
  const auto citation = article.get_child_optional("MedlineCitation");
  std::string pmid = citation ? child_text(*citation, "PMID") : "";
  if (pmid.empty()) {
    result.skipped.push_back("record without PMID");
    return std::nullopt;
  }
  const auto art = citation->get_child_optional("Article");
  if (!art) {
    result.skipped.push_back(fmt::format("pubmed:{}: no Article element", pmid));
    return std::nullopt;
  }

  Document doc;
  doc.doc_id = "pubmed:" + pmid;
  doc.source = Source::pubmed;
  doc.title = child_text(*art, "ArticleTitle");
  doc.url = fmt::format("https://pubmed.ncbi.nlm.nih.gov/{}/", pmid);
  doc.fetched_at = fetched_at;

  if (auto abstract = art->get_child_optional("Abstract")) {
    std::string joined;
    for (const auto& [key, section] : *abstract) {
      if (key != "AbstractText") continue;
      std::string text = text_of(section);
      if (text.empty()) continue;
      if (!joined.empty()) joined += ' ';
      joined += text;
    }
    doc.abstract_text = std::move(joined);
  }
  if (doc.abstract_text.empty()) {
    ++result.missing_abstract;
    result.skipped.push_back(doc.doc_id + ": no abstract");
    return std::nullopt;
  }

  if (auto authors = art->get_child_optional("AuthorList")) {
    for (const auto& [key, author] : *authors) {
      if (key != "Author") continue;
      std::string collective = child_text(author, "CollectiveName");
      if (!collective.empty()) {
        doc.authors.push_back(collective);
        continue;
      }
      std::string last = child_text(author, "LastName");
      std::string first = child_text(author, "ForeName");
      if (first.empty()) first = child_text(author, "Initials");
      if (last.empty()) continue;
      doc.authors.push_back(first.empty() ? last : last + " " + first);
    }
  }

  doc.venue = child_text(*art, "Journal.Title");
  if (auto pub_date = art->get_child_optional("Journal.JournalIssue.PubDate")) {
    std::string year = child_text(*pub_date, "Year");
    doc.published_year = leading_year(year.empty() ? child_text(*pub_date, "MedlineDate") : year);
  }
  if (!doc.published_year) {
    if (auto article_date = art->get_child_optional("ArticleDate")) {
      doc.published_year = leading_year(child_text(*article_date, "Year"));
    }
  }

  try {
    validate(doc);
  } catch (const Error& e) {
    result.skipped.push_back(e.detail());
    return std::nullopt;
  }
  return doc;
}

}  // namespace

std::string normalize_whitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += c;
  }
  return out;
}

ParseResult parse_pubmed_xml(std::string_view payload, Timestamp fetched_at) {
  pt::ptree tree = parse_xml(payload, "efetch");
  const pt::ptree& set = root_element(tree, "PubmedArticleSet", "efetch");
  ParseResult result;
  for (const auto& [key, record] : set) {
    if (key == "PubmedBookArticle") {
      ++result.records_seen;
      result.skipped.push_back("book record skipped");
      continue;
    }
    if (key != "PubmedArticle") continue;
    ++result.records_seen;
    if (auto doc = pubmed_record(record, fetched_at, result)) {
      result.documents.push_back(std::move(*doc));
    }
  }
  for (const auto& reason : result.skipped) spdlog::debug("pubmed: skipped {}", reason);
  return result;
}

EsearchResult parse_pubmed_esearch(std::string_view payload) {
  pt::ptree tree = parse_xml(payload, "esearch");
  const pt::ptree& root = root_element(tree, "eSearchResult", "esearch");
  if (auto err = root.get_child_optional("ERROR")) {
    throw Error(ErrorCode::kMalformedResponse, "esearch error: " + text_of(*err));
  }
  EsearchResult out;
  try {
    out.count = static_cast<std::size_t>(std::stoull(child_text(root, "Count")));
  } catch (const std::exception&) {
    throw Error(ErrorCode::kMalformedResponse, "esearch: missing Count");
  }
  if (auto ids = root.get_child_optional("IdList")) {
    for (const auto& [key, id] : *ids) {
      if (key == "Id") out.ids.push_back(text_of(id));
    }
  }
  return out;
}

std::string arxiv_doc_id(std::string_view entry_id) {
  std::string id(entry_id);
  if (auto pos = id.find("/abs/"); pos != std::string::npos) id = id.substr(pos + 5);
  static const std::regex version_re(R"(v\d+$)");
  return "arxiv:" + std::regex_replace(id, version_re, "");
}

ParseResult parse_arxiv_atom(std::string_view payload, Timestamp fetched_at) {
  pt::ptree tree = parse_xml(payload, "arxiv");
  const pt::ptree& feed = root_element(tree, "feed", "arxiv");
  ParseResult result;
  for (const auto& [key, entry] : feed) {
    if (key != "entry") continue;
    ++result.records_seen;
    std::string raw_id = child_text(entry, "id");
    if (raw_id.find("/api/errors") != std::string::npos) {
      throw Error(ErrorCode::kMalformedResponse, "arxiv error: " + child_text(entry, "summary"));
    }
    if (raw_id.empty()) {
      result.skipped.push_back("entry without id");
      continue;
    }

    Document doc;
    doc.doc_id = arxiv_doc_id(raw_id);
    doc.source = Source::arxiv;
    doc.title = child_text(entry, "title");
    doc.abstract_text = child_text(entry, "summary");
    doc.fetched_at = fetched_at;
    doc.published_year = leading_year(child_text(entry, "published"));
    doc.url = raw_id;
    for (const auto& [k, child] : entry) {
      if (k == "author") {
        std::string name = child_text(child, "name");
        if (!name.empty()) doc.authors.push_back(name);
      } else if (k == "arxiv:primary_category") {
        doc.venue = attribute(child, "term");
      } else if (k == "link" && attribute(child, "rel") == "alternate") {
        doc.url = attribute(child, "href");
      }
    }
    if (doc.venue.empty()) {
      if (auto cat = entry.get_child_optional("category")) doc.venue = attribute(*cat, "term");
    }

    if (doc.abstract_text.empty()) {
      ++result.missing_abstract;
      result.skipped.push_back(doc.doc_id + ": no abstract");
      continue;
    }
    try {
      validate(doc);
    } catch (const Error& e) {
      result.skipped.push_back(e.detail());
      continue;
    }
    result.documents.push_back(std::move(doc));
  }
  return result;
}

}  // namespace litatlas
