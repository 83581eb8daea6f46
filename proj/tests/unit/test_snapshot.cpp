#include <gtest/gtest.h>

#include <filesystem>

#include "litatlas/error.hpp"
#include "litatlas/fsutil.hpp"
#include "litatlas/pipeline.hpp"
#include "litatlas/snapshot.hpp"
#include "litatlas/store.hpp"
#include "scratch.hpp"
#include "small_build.hpp"
#include "synthetic.hpp"

using namespace litatlas;
namespace fs = std::filesystem;

namespace {

Corpus corpus_of(std::size_t n, std::uint64_t seed) {
  Corpus c;
  auto docs = synthetic::topic_corpus(n, seed, 4).documents;
  c.upsert(docs);
  return c;
}

const ModelSnapshot& sample() {
  static const ModelSnapshot s = build_snapshot(corpus_of(40, 1), small_build::config(), 7,
                                                parse_timestamp("2024-01-02T03:04:05Z"));
  return s;
}

ErrorCode load_error(const fs::path& dir) {
  try {
    load_snapshot(dir);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "load succeeded";
  return ErrorCode::kInvalidArgument;
}

void flip_byte(const fs::path& file, std::size_t offset) {
  std::string bytes = fsutil::read_file(file);
  bytes.at(offset) = static_cast<char>(bytes[offset] ^ 0x5a);
  fsutil::write_file(file, bytes);
}

}  // namespace

TEST(Snapshot, RoundTrip) {
  scratch::Dir tmp("snap");
  save_snapshot(sample(), tmp / "v1");
  EXPECT_EQ(load_snapshot(tmp / "v1"), sample());
  SnapshotManifest m = read_manifest(tmp / "v1");
  EXPECT_EQ(m.corpus_version, 7u);
  EXPECT_EQ(m.content_checksum.size(), 64u);
  EXPECT_EQ(m.raw.at("format"), "litatlas-snapshot-v1");
}

TEST(Snapshot, ChecksumIsContentAddressed) {
  scratch::Dir tmp("snap");
  save_snapshot(sample(), tmp / "a");
  save_snapshot(sample(), tmp / "b");
  EXPECT_EQ(read_manifest(tmp / "a").content_checksum, read_manifest(tmp / "b").content_checksum);
}

TEST(Snapshot, TwoDocumentSnapshotRoundTrips) {
  // Built by hand: the pipeline itself needs three documents.
  ModelSnapshot s;
  s.corpus_version = 1;
  Document a;
  a.doc_id = "custom:a";
  a.title = "A";
  a.abstract_text = "alpha beta";
  Document b = a;
  b.doc_id = "custom:b";
  b.abstract_text = "beta gamma";
  std::vector<Document> docs = {a, b};
  s.corpus.upsert(docs);
  TokenizerConfig tc;
  tc.min_document_frequency = 1;
  tc.max_document_fraction = 1.0;
  s.vocabulary = build_vocabulary(docs, tc);
  std::map<std::string, SparseVector> tfidf;
  std::vector<SparseVector> rows;
  for (const auto& d : docs) rows.push_back(tfidf[d.doc_id] = tfidf_vector(d, s.vocabulary));
  LsaOptions lo;
  lo.n_components = 1;
  s.lsa_model = fit_lsa(rows, lo).model;
  for (const auto& d : docs) s.doc_vectors[d.doc_id] = project(s.lsa_model, tfidf.at(d.doc_id));
  s.similarity_graph = build_similarity_graph(s.doc_vectors, 1);
  s.inverted_index = build_index(tfidf, s.vocabulary, 1, vocabulary_checksum(s.vocabulary));
  s.embedding.doc_ids = {"custom:a", "custom:b"};
  s.embedding.coords = {{-1.0, 0.0}, {1.0, 0.0}};
  s.build_timestamp = parse_timestamp("2024-01-01T00:00:00Z");
  s.build_report = nlohmann::json::object();
  scratch::Dir tmp("snap");
  save_snapshot(s, tmp / "two");
  EXPECT_EQ(load_snapshot(tmp / "two"), s);
}

TEST(Snapshot, MissingDirectoryOrManifest) {
  scratch::Dir tmp("snap");
  EXPECT_EQ(load_error(tmp / "nothing"), ErrorCode::kMissingSnapshot);
  fs::create_directories(tmp / "empty");
  EXPECT_EQ(load_error(tmp / "empty"), ErrorCode::kMissingSnapshot);
}

TEST(Snapshot, MissingVectorsFileIsCorrupt) {
  scratch::Dir tmp("snap");
  save_snapshot(sample(), tmp / "v");
  fs::remove(tmp / "v" / "vectors.bin");
  EXPECT_EQ(load_error(tmp / "v"), ErrorCode::kCorruptSnapshot);
}

TEST(Snapshot, TamperedFilesAreCorrupt) {
  for (std::string name : {"vectors.bin", "index.bin", "lsa.bin", "graph.jsonl", "embedding.csv",
                           "corpus.jsonl", "vocabulary.json"}) {
    scratch::Dir tmp("snap");
    save_snapshot(sample(), tmp / "v");
    flip_byte(tmp / "v" / name, fs::file_size(tmp / "v" / name) / 2);
    SCOPED_TRACE(name);
    EXPECT_EQ(load_error(tmp / "v"), ErrorCode::kCorruptSnapshot);
  }
  scratch::Dir tmp("snap");
  save_snapshot(sample(), tmp / "v");
  auto manifest = nlohmann::json::parse(fsutil::read_file(tmp / "v" / "manifest.json"));
  manifest["content_checksum"] = std::string(64, '0');
  fsutil::write_file(tmp / "v" / "manifest.json", manifest.dump());
  EXPECT_EQ(load_error(tmp / "v"), ErrorCode::kCorruptSnapshot);
}

// Checksums are regenerated, so only the cross-file consistency check can
// notice that the graph refers to a document the corpus no longer has.
TEST(Snapshot, GraphReferencingAbsentDocumentIsCorrupt) {
  ModelSnapshot s = sample();
  std::string victim = s.corpus.begin()->first;
  Corpus pruned;
  std::vector<Document> keep;
  for (const auto& [id, d] : s.corpus) {
    if (id != victim) keep.push_back(d);
  }
  pruned.upsert(keep);
  s.corpus = pruned;
  scratch::Dir tmp("snap");
  save_snapshot(s, tmp / "v");
  EXPECT_EQ(load_error(tmp / "v"), ErrorCode::kCorruptSnapshot);
  EXPECT_THROW(validate(s), Error);
}

TEST(Snapshot, UnwritablePathIsIoFailure) {
  scratch::Dir tmp("snap");
  fsutil::write_file(tmp / "file", "x");
  try {
    save_snapshot(sample(), tmp / "file" / "v");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIoFailure);
  }
}

TEST(Snapshot, InterruptedSaveKeepsPreviousSnapshot) {
  scratch::Dir tmp("snap");
  ModelSnapshot v1 = sample();
  save_snapshot(v1, tmp / "live");
  ModelSnapshot v2 = v1;
  v2.corpus_version = 8;
  const auto& idx = v1.inverted_index;
  v2.inverted_index = InvertedIndex(idx.doc_ids(), idx.offsets(), idx.all_postings(), 8,
                                    idx.vocabulary_checksum());
  int written = 0;
  SaveHooks hooks;
  hooks.after_file = [&](std::string_view) {
    if (++written == 4) throw std::runtime_error("disk full");
  };
  EXPECT_ANY_THROW(save_snapshot(v2, tmp / "live", hooks));
  EXPECT_EQ(load_snapshot(tmp / "live"), v1);
  std::size_t entries = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(tmp.path())) ++entries;
  EXPECT_EQ(entries, 1u) << "staging directory left behind";

  save_snapshot(v2, tmp / "live");
  EXPECT_EQ(load_snapshot(tmp / "live").corpus_version, 8u);
}

TEST(Store, IngestInstallAndResolve) {
  scratch::Dir tmp("store");
  Store store(tmp / "root");
  EXPECT_EQ(store.current_version(), 0u);
  EXPECT_FALSE(store.current_snapshot().has_value());
  EXPECT_TRUE(store.load_corpus().empty());

  auto docs = synthetic::topic_corpus(30, 2, 3).documents;
  UpsertResult r = store.ingest(docs);
  EXPECT_EQ(r.inserted, 30u);
  EXPECT_EQ(store.ingest(std::span(docs).first(5)).updated, 5u);
  EXPECT_EQ(store.load_corpus().size(), 30u);

  Document bad = docs[0];
  bad.abstract_text.clear();
  std::vector<Document> batch = {docs[1], bad};
  std::string before = fsutil::read_file(store.corpus_path());
  EXPECT_THROW(store.ingest(batch), Error);
  EXPECT_EQ(fsutil::read_file(store.corpus_path()), before);

  ModelSnapshot s = build_snapshot(store.load_corpus(), small_build::config(), 1);
  fs::path dir = store.install(s);
  EXPECT_EQ(dir, tmp / "root" / "snapshots" / "v000001");
  EXPECT_EQ(store.current_version(), 1u);
  EXPECT_EQ(resolve_snapshot_dir(tmp / "root"), dir);
  EXPECT_EQ(resolve_snapshot_dir(dir), dir);
  EXPECT_EQ(load_snapshot(resolve_snapshot_dir(tmp / "root")), s);

  s.corpus_version = 2;
  store.install(s);
  EXPECT_EQ(store.current_version(), 2u);
  EXPECT_TRUE(fs::exists(tmp / "root" / "snapshots" / "v000001"));
}
