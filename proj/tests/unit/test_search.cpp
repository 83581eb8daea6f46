#include <gtest/gtest.h>

#include <random>

#include "litatlas/error.hpp"
#include "litatlas/search.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

using namespace litatlas;

namespace {

TokenizerConfig permissive() {
  TokenizerConfig c;
  c.min_document_frequency = 1;
  c.max_document_fraction = 1.0;
  return c;
}

SparseVector vec(std::size_t dim, std::vector<SparseEntry> e) {
  SparseVector v;
  v.dimensionality = dim;
  v.entries = std::move(e);
  return v;
}

struct Built {
  Vocabulary vocabulary;
  std::map<std::string, SparseVector> vectors;
  InvertedIndex index;
};

Built build(const std::vector<Document>& docs, const TokenizerConfig& cfg = {}) {
  Built b;
  b.vocabulary = build_vocabulary(docs, cfg);
  for (const auto& d : docs) b.vectors[d.doc_id] = tfidf_vector(d, b.vocabulary);
  b.index = build_index(b.vectors, b.vocabulary);
  return b;
}

Document doc(std::string id, std::string text) {
  Document d;
  d.doc_id = std::move(id);
  d.title = "t";
  d.abstract_text = std::move(text);
  return d;
}

}  // namespace

TEST(InvertedIndex, SingleDocTransposition) {
  Vocabulary v({"a0", "a1", "a2", "a3", "a4", "a5", "a6", "a7"}, {1, 1, 1, 1, 1, 1, 1, 1}, 2,
               permissive());
  std::map<std::string, SparseVector> vectors = {{"d", vec(8, {{3, 0.6}, {7, 0.8}})}};
  InvertedIndex idx = build_index(vectors, v);
  EXPECT_EQ(idx.n_terms(), 8u);
  ASSERT_EQ(idx.postings(3).size(), 1u);
  EXPECT_EQ(idx.postings(3)[0], (Posting{0, 0.6}));
  EXPECT_EQ(idx.postings(7)[0], (Posting{0, 0.8}));
  EXPECT_TRUE(idx.postings(0).empty());
}

TEST(InvertedIndex, SharedTermSortedByDocId) {
  Vocabulary v({"x0", "x1"}, {2, 1}, 3, permissive());
  std::map<std::string, SparseVector> vectors = {{"zeta", vec(2, {{0, 1.0}})},
                                                 {"alpha", vec(2, {{0, 0.6}, {1, 0.8}})}};
  InvertedIndex idx = build_index(vectors, v);
  auto p = idx.postings(0);
  ASSERT_EQ(p.size(), 2u);
  EXPECT_EQ(idx.doc_ids()[p[0].doc], "alpha");
  EXPECT_EQ(idx.doc_ids()[p[1].doc], "zeta");
}

TEST(InvertedIndex, DimensionMismatch) {
  Vocabulary v({"x0", "x1"}, {1, 1}, 2, permissive());
  std::map<std::string, SparseVector> vectors = {{"a", vec(3, {{0, 1.0}})}};
  try {
    build_index(vectors, v);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimensionMismatch);
  }
}

TEST(InvertedIndex, RoundTripProperty) {
  for (std::uint64_t seed : {3u, 4u, 5u}) {
    auto corpus = synthetic::topic_corpus(80, seed);
    Built b = build(corpus.documents);
    EXPECT_EQ(b.index.to_vectors(), b.vectors);
    for (std::uint32_t t = 0; t < b.index.n_terms(); ++t) {
      for (const auto& p : b.index.postings(t)) EXPECT_GT(p.weight, 0.0);
    }
  }
}

TEST(Search, SelfAbstractRanksFirst) {
  auto corpus = synthetic::topic_corpus(100, 6);
  Built b = build(corpus.documents);
  for (std::size_t i = 0; i < corpus.documents.size(); i += 7) {
    const auto& d = corpus.documents[i];
    SearchResult r = search_text(b.index, b.vocabulary, d.abstract_text);
    ASSERT_FALSE(r.ranked.empty());
    EXPECT_EQ(r.ranked[0].doc_id, d.doc_id);
    EXPECT_NEAR(r.ranked[0].score, 1.0, 1e-9);
  }
}

TEST(Search, StopwordOnlyQueryIsEmpty) {
  auto corpus = synthetic::topic_corpus(30, 7);
  Built b = build(corpus.documents);
  SearchResult r = search_text(b.index, b.vocabulary, "the and of with");
  EXPECT_TRUE(r.ranked.empty());
  EXPECT_EQ(r.query_terms_matched, 0u);
  EXPECT_TRUE(search_text(b.index, b.vocabulary, "").ranked.empty());
}

TEST(Search, LimitMustBePositive) {
  auto corpus = synthetic::topic_corpus(10, 8);
  Built b = build(corpus.documents);
  EXPECT_THROW(search_text(b.index, b.vocabulary, "x", 0), Error);
}

TEST(Search, MatchesBruteForce) {
  auto corpus = synthetic::topic_corpus(200, 9);
  TokenizerConfig cfg;
  Built b = build(corpus.documents, cfg);
  std::map<std::string, std::vector<std::string>> tokens;
  for (const auto& d : corpus.documents) tokens[d.doc_id] = tokenize(d.abstract_text, cfg);
  auto model = oracle::tfidf(tokens, cfg.min_document_frequency, cfg.max_document_fraction);
  synthetic::Rng rng(10);
  for (int q = 0; q < 60; ++q) {
    std::string text = synthetic::random_query(rng);
    auto expect = oracle::brute_force_search(model.vectors,
                                             oracle::query_vector(tokenize(text, cfg), model.idf));
    SearchResult r = search_text(b.index, b.vocabulary, text, 1000);
    ASSERT_EQ(r.ranked.size(), expect.size()) << text;
    for (std::size_t i = 0; i < expect.size(); ++i) {
      EXPECT_EQ(r.ranked[i].doc_id, expect[i].doc_id);
      EXPECT_NEAR(r.ranked[i].score, expect[i].score, 1e-9);
    }
  }
}

TEST(Search, TruncationIsRecorded) {
  auto corpus = synthetic::topic_corpus(120, 11, 2);
  Built b = build(corpus.documents);
  const auto& text = corpus.documents[0].abstract_text;
  SearchResult full = search_text(b.index, b.vocabulary, text, 1000);
  ASSERT_GT(full.ranked.size(), 5u);
  EXPECT_EQ(full.truncated_at, 0u);
  SearchResult cut = search_text(b.index, b.vocabulary, text, 5);
  EXPECT_EQ(cut.ranked.size(), 5u);
  EXPECT_EQ(cut.truncated_at, 5u);
  EXPECT_EQ(cut.total_matches, full.total_matches);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(cut.ranked[i], full.ranked[i]);
}

// Repeating a query word shared with d never lowers d's score. Checked on a
// two-term vocabulary where the query direction moves toward the shared term.
TEST(Search, SharedTermMonotonicity) {
  std::vector<Document> docs = {doc("a", "alpha beta"), doc("b", "gamma beta"),
                                doc("c", "alpha gamma"), doc("d", "delta delta")};
  Built b = build(docs, permissive());
  double previous = 0.0;
  std::string query = "alpha gamma";
  for (int reps = 0; reps < 6; ++reps) {
    query += " alpha";
    SearchResult r = search_text(b.index, b.vocabulary, query, 10);
    double score = 0.0;
    for (const auto& n : r.ranked) {
      if (n.doc_id == "a") score = n.score;
    }
    EXPECT_GE(score, previous - 1e-15);
    previous = score;
  }
}

TEST(Search, QueryTermsMatchedCountsDistinctTerms) {
  std::vector<Document> docs = {doc("a", "alpha beta"), doc("b", "gamma beta"),
                                doc("c", "alpha gamma")};
  Built b = build(docs, permissive());
  SearchResult r = search_text(b.index, b.vocabulary, "alpha alpha gamma unknownword", 10);
  EXPECT_EQ(r.query_terms_matched, 2u);
  EXPECT_EQ(r.total_matches, 3u);
}
