#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "litatlas/lsa.hpp"

namespace litatlas {

/// <a,b> / (|a| |b|) clamped to [-1, 1]; 0 when either vector is zero.
/// Throws Error(kDimensionMismatch).
double cosine(std::span<const double> a, std::span<const double> b);

struct Neighbor {
  std::string doc_id;
  double score = 0.0;

  bool operator==(const Neighbor&) const = default;
};

/// Orders by score descending, then doc_id ascending.
bool ranks_before(const Neighbor& a, const Neighbor& b);

/// Per-document top-k most similar other documents.
struct SimilarityGraph {
  std::size_t k_neighbors = 0;
  std::map<std::string, std::vector<Neighbor>, std::less<>> neighbors;

  bool operator==(const SimilarityGraph&) const = default;
};

/// Exhaustive O(n^2) cosine graph over `vectors`. Rows are computed on
/// `threads` workers (0 = hardware concurrency); each row is independent so
/// the result does not depend on the thread count.
SimilarityGraph build_similarity_graph(const std::map<std::string, DenseVector>& vectors,
                                       std::size_t k_neighbors, unsigned threads = 0);

/// Throws Error(kUnknownDocument).
const std::vector<Neighbor>& top_k_similar(const SimilarityGraph& graph, std::string_view doc_id);

/// One line per document: {"doc_id": ..., "neighbors": [[doc_id, score], ...]}.
std::string to_jsonl(const SimilarityGraph& graph);
SimilarityGraph similarity_graph_from_jsonl(std::string_view text, std::size_t k_neighbors);

}  // namespace litatlas
