#include "litatlas/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "litatlas/error.hpp"

namespace litatlas {

namespace {

class StageTimer {
 public:
  StageTimer(nlohmann::json& report, const char* name)
      : report_(report), name_(name), start_(std::chrono::steady_clock::now()) {}
  ~StageTimer() {
    std::chrono::duration<double> d = std::chrono::steady_clock::now() - start_;
    report_["stage_seconds"][name_] = d.count();
    spdlog::info("build: {} took {:.3f} s", name_, d.count());
  }

 private:
  nlohmann::json& report_;
  const char* name_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace

ModelSnapshot build_snapshot(const Corpus& corpus, const PipelineConfig& config,
                             std::uint64_t corpus_version, Timestamp build_timestamp) {
  config.validate();
  if (corpus.empty()) throw Error(ErrorCode::kEmptyCorpus, "nothing to build");
  const std::size_t n = corpus.size();
  if (n < 3) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("a build needs at least 3 documents, corpus has {}", n));
  }

  ModelSnapshot s;
  s.corpus_version = corpus_version;
  s.corpus = corpus;
  s.build_config = config;
  s.build_timestamp = build_timestamp;
  auto& report = s.build_report;
  report["n_documents"] = n;

  std::vector<Document> docs;
  docs.reserve(n);
  for (const auto& [id, doc] : corpus) docs.push_back(doc);

  std::vector<SparseVector> rows;
  std::map<std::string, SparseVector> tfidf;
  {
    StageTimer t(report, "textpipe");
    s.vocabulary = build_vocabulary(docs, config.tokenizer);
    if (s.vocabulary.size() == 0) {
      throw Error(ErrorCode::kInvalidArgument,
                  "vocabulary is empty after filtering; relax min_document_frequency or "
                  "max_document_fraction");
    }
    rows.reserve(n);
    for (const auto& d : docs) {
      rows.push_back(tfidf_vector(d, s.vocabulary));
      tfidf.emplace(d.doc_id, rows.back());
    }
    std::size_t empty_rows = std::count_if(rows.begin(), rows.end(),
                                           [](const SparseVector& v) { return v.entries.empty(); });
    report["vocabulary_size"] = s.vocabulary.size();
    report["documents_without_terms"] = empty_rows;
    if (empty_rows > 0) {
      spdlog::warn("build: {} documents have no vocabulary terms and sit at the origin",
                   empty_rows);
    }
  }

  {
    StageTimer t(report, "lsa");
    LsaOptions lsa = config.lsa;
    lsa.n_components = std::min({config.lsa_components, n, s.vocabulary.size()});
    if (lsa.n_components != config.lsa_components) {
      spdlog::warn("build: lsa_components {} clamped to {} (documents {}, terms {})",
                   config.lsa_components, lsa.n_components, n, s.vocabulary.size());
    }
    LsaFit fit = fit_lsa(rows, lsa);
    s.lsa_model = std::move(fit.model);
    report["lsa"] = to_json(fit.report);
    for (const auto& [id, v] : tfidf) s.doc_vectors.emplace(id, project(s.lsa_model, v));
  }

  {
    StageTimer t(report, "similarity");
    s.similarity_graph = build_similarity_graph(s.doc_vectors, config.k_neighbors);
    report["k_neighbors"] = std::min(config.k_neighbors, n - 1);
  }

  {
    StageTimer t(report, "tsne");
    TsneConfig tsne = config.tsne;
    double max_perplexity = static_cast<double>(n - 1) / 3.0;
    if (tsne.perplexity > max_perplexity) {
      tsne.perplexity = std::max(1.0, max_perplexity);
      spdlog::warn("build: perplexity {} clamped to {} for {} documents", config.tsne.perplexity,
                   tsne.perplexity, n);
    }
    std::vector<DenseVector> points;
    points.reserve(n);
    for (const auto& [id, v] : s.doc_vectors) points.push_back(v);
    if (tsne.method == TsneMethod::barnes_hut) {
      s.embedding = run_tsne_barnes_hut(sparse_affinities(points, tsne), tsne);
    } else {
      s.embedding = run_tsne(pairwise_affinities(points, tsne), tsne);
    }
    for (const auto& [id, v] : s.doc_vectors) s.embedding.doc_ids.push_back(id);
    report["tsne"] = {{"perplexity", tsne.perplexity},
                      {"method", tsne.method == TsneMethod::exact ? "exact" : "barnes_hut"},
                      {"final_kl", s.embedding.final_kl},
                      {"flagged_rows", s.embedding.flagged_rows.size()}};
  }

  {
    StageTimer t(report, "index");
    s.inverted_index =
        build_index(tfidf, s.vocabulary, corpus_version, vocabulary_checksum(s.vocabulary));
  }
  validate(s);
  return s;
}

}  // namespace litatlas
