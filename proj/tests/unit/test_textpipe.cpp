#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "litatlas/error.hpp"
#include "litatlas/textpipe.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

using namespace litatlas;

namespace {

Document doc(std::string id, std::string abstract) {
  Document d;
  d.doc_id = std::move(id);
  d.title = "ignored title words";
  d.abstract_text = std::move(abstract);
  return d;
}

TokenizerConfig permissive() {
  TokenizerConfig c;
  c.stopwords = {};
  c.min_document_frequency = 1;
  c.max_document_fraction = 1.0;
  return c;
}

}  // namespace

TEST(Tokenize, RuleApplication) {
  TokenizerConfig c;
  c.stopwords = {"the"};
  EXPECT_EQ(tokenize("The cell-cycle regulates.", c),
            (std::vector<std::string>{"cell", "cycle", "regulates"}));
  EXPECT_TRUE(tokenize("", c).empty());
  EXPECT_EQ(tokenize("p53 P53", c), (std::vector<std::string>{"p53", "p53"}));
}

TEST(Tokenize, MinLengthAndCase) {
  TokenizerConfig c = permissive();
  c.min_token_length = 3;
  EXPECT_EQ(tokenize("a an ant ANTS", c), (std::vector<std::string>{"ant", "ants"}));
  c.lowercase = false;
  EXPECT_EQ(tokenize("ANTS ants", c), (std::vector<std::string>{"ANTS", "ants"}));
}

TEST(Tokenize, UnicodeLettersAreKept) {
  TokenizerConfig c = permissive();
  EXPECT_EQ(tokenize("Müller’s Straße, ÉCOLE", c),
            (std::vector<std::string>{"müller", "straße", "école"}));
  // Invalid UTF-8 splits tokens instead of failing.
  EXPECT_EQ(tokenize(std::string("ab\xff" "cd"), c), (std::vector<std::string>{"ab", "cd"}));
}

TEST(Stopwords, ShippedListLoads) {
  const auto& s = default_stopwords();
  EXPECT_GT(s.size(), 100u);
  EXPECT_TRUE(s.count("the"));
  EXPECT_TRUE(s.count("and"));
  EXPECT_FALSE(s.count("protein"));
}

TEST(Vocabulary, DocumentFrequency) {
  std::vector<Document> docs = {doc("a", "alpha beta beta"), doc("b", "beta gamma"),
                                doc("c", "beta gamma"), doc("d", "gamma delta")};
  Vocabulary v = build_vocabulary(docs, permissive());
  EXPECT_EQ(v.corpus_size(), 4u);
  ASSERT_TRUE(v.index_of("alpha"));
  EXPECT_EQ(v.document_frequency()[*v.index_of("alpha")], 1u);
  // Duplicate occurrences within one doc count once.
  EXPECT_EQ(v.document_frequency()[*v.index_of("beta")], 3u);
  EXPECT_TRUE(std::is_sorted(v.terms().begin(), v.terms().end()));
}

TEST(Vocabulary, MaxDocumentFractionDropsUbiquitousTerms) {
  std::vector<Document> docs;
  for (int i = 0; i < 10; ++i) docs.push_back(doc("d" + std::to_string(i), "common rare" + std::to_string(i % 3)));
  TokenizerConfig c = permissive();
  c.max_document_fraction = 0.9;
  Vocabulary v = build_vocabulary(docs, c);
  EXPECT_FALSE(v.index_of("common"));
  c.max_document_fraction = 1.0;
  EXPECT_TRUE(build_vocabulary(docs, c).index_of("common"));
}

TEST(Vocabulary, MinDocumentFrequency) {
  std::vector<Document> docs = {doc("a", "once twice"), doc("b", "twice thrice"),
                                doc("c", "thrice")};
  TokenizerConfig c = permissive();
  c.min_document_frequency = 2;
  Vocabulary v = build_vocabulary(docs, c);
  EXPECT_EQ(v.terms(), (std::vector<std::string>{"thrice", "twice"}));
}

TEST(Vocabulary, EmptyCorpus) {
  try {
    build_vocabulary({}, TokenizerConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyCorpus);
  }
}

TEST(Vocabulary, IdfFormula) {
  Vocabulary v({"a", "b", "c"}, {1, 10, 10}, 10, permissive());
  EXPECT_NEAR(v.idf("b"), 0.0, 1e-12);
  EXPECT_NEAR(Vocabulary({"a"}, {1}, 4, permissive()).idf("a"), 1.3862944, 1e-7);
  EXPECT_NEAR(Vocabulary({"a"}, {10}, 1000, permissive()).idf("a"), 4.6051702, 1e-7);
  EXPECT_NEAR(Vocabulary({"a"}, {10}, 1000, permissive()).idf("a"), oracle::idf(1000, 10), 1e-12);
  try {
    v.idf("zzz");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnknownTerm);
  }
}

TEST(Vocabulary, RejectsInvalidConstruction) {
  EXPECT_THROW(Vocabulary({"b", "a"}, {1, 1}, 2, permissive()), Error);
  EXPECT_THROW(Vocabulary({"a"}, {0}, 2, permissive()), Error);
  EXPECT_THROW(Vocabulary({"a"}, {3}, 2, permissive()), Error);
}

// Property: df1 < df2 implies idf1 > idf2 at fixed |D|.
TEST(Vocabulary, IdfMonotone) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    std::size_t d = std::uniform_int_distribution<std::size_t>(2, 5000)(rng);
    std::uniform_int_distribution<std::size_t> df(1, d);
    std::size_t a = df(rng);
    std::size_t b = df(rng);
    if (a == b) continue;
    Vocabulary v({"x", "y"}, {static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b)}, d,
                 permissive());
    EXPECT_EQ(a < b, v.idf("x") > v.idf("y"));
  }
}

TEST(Vocabulary, JsonRoundTrip) {
  std::vector<Document> docs = {doc("a", "alpha beta"), doc("b", "beta gamma"),
                                doc("c", "gamma alpha")};
  Vocabulary v = build_vocabulary(docs, permissive());
  nlohmann::json j = to_json(v);
  EXPECT_TRUE(j.contains("terms"));
  EXPECT_TRUE(j.contains("document_frequency"));
  EXPECT_TRUE(j.contains("corpus_size"));
  EXPECT_TRUE(j.contains("build_params"));
  EXPECT_EQ(vocabulary_from_json(j), v);
}

TEST(Tfidf, SingleTermIsUnit) {
  Vocabulary v({"alpha", "beta"}, {1, 1}, 3, permissive());
  SparseVector s = tfidf_from_text("alpha alpha alpha", v);
  ASSERT_EQ(s.entries.size(), 1u);
  EXPECT_EQ(s.entries[0].weight, 1.0);
}

TEST(Tfidf, HandComputedWeights) {
  // idf(a) = idf(b) = ln 2; tf {a:2, b:1} gives (2,1)/sqrt(5).
  Vocabulary v({"a1", "b1"}, {1, 1}, 2, permissive());
  SparseVector s = tfidf_from_text("a1 a1 b1", v);
  ASSERT_EQ(s.entries.size(), 2u);
  EXPECT_NEAR(s.entries[0].weight, 2.0 / std::sqrt(5.0), 1e-15);
  EXPECT_NEAR(s.entries[1].weight, 1.0 / std::sqrt(5.0), 1e-15);
}

TEST(Tfidf, OutOfVocabularyIsZero) {
  Vocabulary v({"alpha"}, {1}, 2, permissive());
  EXPECT_TRUE(tfidf_from_text("omega psi", v).empty());
  EXPECT_EQ(tfidf_from_text("omega psi", v).dimensionality, 1u);
}

TEST(Tfidf, ZeroIdfTermsDropped) {
  Vocabulary v({"all", "some"}, {4, 1}, 4, permissive());
  SparseVector s = tfidf_from_text("all all some", v);
  ASSERT_EQ(s.entries.size(), 1u);
  EXPECT_EQ(s.entries[0].index, 1u);
}

TEST(Tfidf, DocumentTextIsAbstract) {
  Document d = doc("a", "abstract words");
  EXPECT_EQ(document_text(d), "abstract words");
}

// Property checks over synthetic corpora against the map-based oracle.
TEST(Tfidf, MatchesOracleAndInvariants) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    auto corpus = synthetic::topic_corpus(60, seed, 4);
    TokenizerConfig cfg;
    Vocabulary v = build_vocabulary(corpus.documents, cfg);
    std::map<std::string, std::vector<std::string>> tokens;
    for (const auto& d : corpus.documents) tokens[d.doc_id] = tokenize(d.abstract_text, cfg);
    auto model = oracle::tfidf(tokens, 2, 0.9);
    ASSERT_EQ(model.idf.size(), v.size());
    for (const auto& [term, idf] : model.idf) EXPECT_NEAR(v.idf(term), idf, 1e-12) << term;

    for (const auto& d : corpus.documents) {
      SparseVector s = tfidf_vector(d, v);
      const auto& expect = model.vectors.at(d.doc_id);
      ASSERT_EQ(s.entries.size(), expect.size());
      double norm = 0.0;
      for (std::size_t k = 0; k < s.entries.size(); ++k) {
        if (k > 0) EXPECT_LT(s.entries[k - 1].index, s.entries[k].index);
        EXPECT_GE(s.entries[k].weight, 0.0);
        EXPECT_NEAR(s.entries[k].weight, expect.at(v.terms()[s.entries[k].index]), 1e-12);
        norm += s.entries[k].weight * s.entries[k].weight;
      }
      if (!s.empty()) EXPECT_NEAR(norm, 1.0, 1e-12);

      // Doubling every term count leaves the normalized vector unchanged.
      std::string doubled = d.abstract_text + " " + d.abstract_text;
      SparseVector s2 = tfidf_from_text(doubled, v);
      ASSERT_EQ(s2.entries.size(), s.entries.size());
      for (std::size_t k = 0; k < s.entries.size(); ++k) {
        EXPECT_NEAR(s2.entries[k].weight, s.entries[k].weight, 1e-15);
      }
    }
  }
}

TEST(Vocabulary, PermutationInvariant) {
  auto corpus = synthetic::topic_corpus(40, 11, 3);
  std::vector<Document> shuffled = corpus.documents;
  std::mt19937_64 rng(5);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  TokenizerConfig cfg;
  Vocabulary a = build_vocabulary(corpus.documents, cfg);
  Vocabulary b = build_vocabulary(shuffled, cfg);
  EXPECT_EQ(a, b);
  for (const auto& d : corpus.documents) EXPECT_EQ(tfidf_vector(d, a), tfidf_vector(d, b));
}

TEST(TokenizerConfig, ValidationAndJson) {
  TokenizerConfig c;
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(tokenizer_config_from_json(to_json(c)), c);
  TokenizerConfig bad = c;
  bad.max_document_fraction = 0.0;
  EXPECT_THROW(bad.validate(), Error);
  bad = c;
  bad.min_token_length = 0;
  EXPECT_THROW(bad.validate(), Error);
}
