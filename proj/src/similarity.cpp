#include "litatlas/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "litatlas/error.hpp"
#include "litatlas/parallel.hpp"

namespace litatlas {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Squared norms are combined before the square root so that cosine(a, a)
// is exactly 1.
double cosine_from_parts(double ab, double aa, double bb) {
  if (aa == 0.0 || bb == 0.0) return 0.0;
  return std::clamp(ab / std::sqrt(aa * bb), -1.0, 1.0);
}

}  // namespace

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                fmt::format("cosine of vectors with {} and {} entries", a.size(), b.size()));
  }
  return cosine_from_parts(dot(a, b), dot(a, a), dot(b, b));
}

bool ranks_before(const Neighbor& a, const Neighbor& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.doc_id < b.doc_id;
}

SimilarityGraph build_similarity_graph(const std::map<std::string, DenseVector>& vectors,
                                       std::size_t k_neighbors, unsigned threads) {
  if (vectors.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "similarity graph needs at least 2 documents");
  }
  if (k_neighbors < 1) {
    throw Error(ErrorCode::kInvalidArgument, "k_neighbors must be >= 1");
  }

  std::vector<const std::string*> ids;
  std::vector<std::span<const double>> rows;
  ids.reserve(vectors.size());
  for (const auto& [id, v] : vectors) {
    if (!rows.empty() && v.size() != rows.front().size()) {
      throw Error(ErrorCode::kDimensionMismatch, "LSA vectors differ in dimensionality");
    }
    ids.push_back(&id);
    rows.emplace_back(v);
  }
  const std::size_t n = rows.size();
  std::vector<double> sq_norms(n);
  for (std::size_t i = 0; i < n; ++i) sq_norms[i] = dot(rows[i], rows[i]);

  const std::size_t keep = std::min(k_neighbors, n - 1);
  std::vector<std::vector<Neighbor>> lists(n);
  parallel_for(n, threads, [&](std::size_t i) {
    std::vector<Neighbor> cand;
    cand.reserve(n - 1);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      cand.push_back({*ids[j], cosine_from_parts(dot(rows[i], rows[j]), sq_norms[i], sq_norms[j])});
    }
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(keep), cand.end(),
                      ranks_before);
    cand.resize(keep);
    lists[i] = std::move(cand);
  });

  SimilarityGraph graph;
  graph.k_neighbors = k_neighbors;
  for (std::size_t i = 0; i < n; ++i) graph.neighbors.emplace(*ids[i], std::move(lists[i]));
  return graph;
}

const std::vector<Neighbor>& top_k_similar(const SimilarityGraph& graph, std::string_view doc_id) {
  auto it = graph.neighbors.find(doc_id);
  if (it == graph.neighbors.end()) {
    throw Error(ErrorCode::kUnknownDocument, std::string(doc_id));
  }
  return it->second;
}

std::string to_jsonl(const SimilarityGraph& graph) {
  std::string out;
  for (const auto& [id, list] : graph.neighbors) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& nb : list) arr.push_back({nb.doc_id, nb.score});
    out += nlohmann::json{{"doc_id", id}, {"neighbors", std::move(arr)}}.dump();
    out += '\n';
  }
  return out;
}

SimilarityGraph similarity_graph_from_jsonl(std::string_view text, std::size_t k_neighbors) {
  SimilarityGraph graph;
  graph.k_neighbors = k_neighbors;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto j = nlohmann::json::parse(line);
    std::vector<Neighbor> list;
    for (const auto& pair : j.at("neighbors")) {
      list.push_back({pair.at(0).get<std::string>(), pair.at(1).get<double>()});
    }
    graph.neighbors.emplace(j.at("doc_id").get<std::string>(), std::move(list));
  }
  return graph;
}

}  // namespace litatlas
