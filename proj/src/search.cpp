#include "litatlas/search.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "litatlas/error.hpp"

namespace litatlas {

InvertedIndex::InvertedIndex(std::vector<std::string> doc_ids, std::vector<std::uint64_t> offsets,
                             std::vector<Posting> postings, std::uint64_t corpus_version,
                             std::string vocabulary_checksum)
    : doc_ids_(std::move(doc_ids)),
      offsets_(std::move(offsets)),
      postings_(std::move(postings)),
      corpus_version_(corpus_version),
      vocabulary_checksum_(std::move(vocabulary_checksum)) {
  if (offsets_.empty() || offsets_.front() != 0 || offsets_.back() != postings_.size() ||
      !std::is_sorted(offsets_.begin(), offsets_.end())) {
    throw Error(ErrorCode::kInvalidArgument, "inverted index offsets are inconsistent");
  }
  for (const auto& p : postings_) {
    if (p.doc >= doc_ids_.size() || !(p.weight > 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, "inverted index posting out of range");
    }
  }
}

std::span<const Posting> InvertedIndex::postings(std::uint32_t term) const {
  if (term + 1 >= offsets_.size()) return {};
  return std::span<const Posting>(postings_).subspan(offsets_[term],
                                                     offsets_[term + 1] - offsets_[term]);
}

std::map<std::string, SparseVector> InvertedIndex::to_vectors() const {
  std::map<std::string, SparseVector> out;
  for (const auto& id : doc_ids_) out[id].dimensionality = n_terms();
  for (std::uint32_t t = 0; t < n_terms(); ++t) {
    for (const auto& p : postings(t)) out[doc_ids_[p.doc]].entries.push_back({t, p.weight});
  }
  return out;
}

InvertedIndex build_index(const std::map<std::string, SparseVector>& doc_vectors,
                          const Vocabulary& vocabulary, std::uint64_t corpus_version,
                          std::string vocabulary_checksum) {
  const std::size_t v = vocabulary.size();
  std::vector<std::string> ids;
  std::vector<std::uint64_t> counts(v + 1, 0);
  for (const auto& [id, vec] : doc_vectors) {
    if (vec.dimensionality != v) {
      throw Error(ErrorCode::kDimensionMismatch,
                  fmt::format("{}: vector dimensionality {} != vocabulary size {}", id,
                              vec.dimensionality, v));
    }
    ids.push_back(id);
    for (const auto& e : vec.entries) {
      if (e.index >= v) throw Error(ErrorCode::kDimensionMismatch, id + ": index out of range");
      if (e.weight > 0.0) ++counts[e.index + 1];
    }
  }
  for (std::size_t t = 0; t < v; ++t) counts[t + 1] += counts[t];

  // Documents are visited in doc_id order, so each posting list comes out sorted.
  std::vector<Posting> postings(counts.back());
  std::vector<std::uint64_t> cursor(counts.begin(), counts.end() - 1);
  std::uint32_t doc = 0;
  for (const auto& [id, vec] : doc_vectors) {
    for (const auto& e : vec.entries) {
      if (e.weight > 0.0) postings[cursor[e.index]++] = {doc, e.weight};
    }
    ++doc;
  }
  return InvertedIndex(std::move(ids), std::move(counts), std::move(postings), corpus_version,
                       std::move(vocabulary_checksum));
}

SearchResult search_text(const InvertedIndex& index, const Vocabulary& vocabulary,
                         std::string_view text, std::size_t limit) {
  if (limit < 1) throw Error(ErrorCode::kInvalidArgument, "search limit must be >= 1");
  SearchResult result;
  SparseVector query = tfidf_from_text(text, vocabulary);

  std::vector<double> scores(index.doc_ids().size(), 0.0);
  std::vector<std::uint32_t> touched;
  for (const auto& q : query.entries) {
    auto list = index.postings(q.index);
    if (list.empty()) continue;
    ++result.query_terms_matched;
    for (const auto& p : list) {
      if (scores[p.doc] == 0.0) touched.push_back(p.doc);
      scores[p.doc] += q.weight * p.weight;
    }
  }

  result.ranked.reserve(touched.size());
  for (auto d : touched) result.ranked.push_back({index.doc_ids()[d], scores[d]});
  result.total_matches = result.ranked.size();
  if (result.ranked.size() > limit) {
    std::partial_sort(result.ranked.begin(),
                      result.ranked.begin() + static_cast<std::ptrdiff_t>(limit),
                      result.ranked.end(), ranks_before);
    result.ranked.resize(limit);
    result.truncated_at = limit;
  } else {
    std::sort(result.ranked.begin(), result.ranked.end(), ranks_before);
  }
  return result;
}

}  // namespace litatlas
