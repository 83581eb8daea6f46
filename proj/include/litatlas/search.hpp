#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "litatlas/similarity.hpp"
#include "litatlas/textpipe.hpp"

namespace litatlas {

struct Posting {
  std::uint32_t doc;  // index into InvertedIndex::doc_ids()
  double weight;

  bool operator==(const Posting&) const = default;
};

/// The transposed document-term tf-idf matrix in CSR form: for term t the
/// postings are postings_[offsets_[t], offsets_[t+1]), sorted by doc_id.
/// Terms with no postings are not indexed.
class InvertedIndex {
 public:
  InvertedIndex() = default;
  InvertedIndex(std::vector<std::string> doc_ids, std::vector<std::uint64_t> offsets,
                std::vector<Posting> postings, std::uint64_t corpus_version,
                std::string vocabulary_checksum);

  std::size_t n_terms() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::size_t n_postings() const { return postings_.size(); }
  const std::vector<std::string>& doc_ids() const { return doc_ids_; }
  const std::vector<std::uint64_t>& offsets() const { return offsets_; }
  const std::vector<Posting>& all_postings() const { return postings_; }
  std::span<const Posting> postings(std::uint32_t term) const;

  std::uint64_t corpus_version() const { return corpus_version_; }
  const std::string& vocabulary_checksum() const { return vocabulary_checksum_; }

  /// Rebuilds document vectors from the postings (the inverse transposition).
  std::map<std::string, SparseVector> to_vectors() const;

  bool operator==(const InvertedIndex&) const = default;

 private:
  std::vector<std::string> doc_ids_;
  std::vector<std::uint64_t> offsets_;
  std::vector<Posting> postings_;
  std::uint64_t corpus_version_ = 0;
  std::string vocabulary_checksum_;
};

/// Exact transposition of `doc_vectors`. Throws Error(kDimensionMismatch).
InvertedIndex build_index(const std::map<std::string, SparseVector>& doc_vectors,
                          const Vocabulary& vocabulary, std::uint64_t corpus_version = 0,
                          std::string vocabulary_checksum = {});

struct SearchResult {
  std::vector<Neighbor> ranked;  // score > 0, descending, ties by doc_id
  std::size_t query_terms_matched = 0;
  std::size_t total_matches = 0;  // documents sharing >= 1 term
  std::size_t truncated_at = 0;   // the limit, when total_matches exceeded it; else 0
};

/// Cosine between the query's tf-idf vector and every document sharing a
/// term, accumulated over posting lists in term order. Reads only.
SearchResult search_text(const InvertedIndex& index, const Vocabulary& vocabulary,
                         std::string_view text, std::size_t limit = 20);

}  // namespace litatlas
