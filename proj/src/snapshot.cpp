#include "litatlas/snapshot.hpp"

#include <array>
#include <cerrno>
#include <cstdio>
#include <cstring>
#include <fcntl.h>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "litatlas/binary_io.hpp"
#include "litatlas/error.hpp"
#include "litatlas/fsutil.hpp"

namespace litatlas {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kFormat = "litatlas-snapshot-v1";
constexpr const char* kManifest = "manifest.json";

// Every file the loader requires, in write order; the manifest goes last.
constexpr std::array<const char*, 12> kFiles = {
    "corpus.jsonl",  "vocabulary.json", "lsa.json",      "lsa.bin",
    "vectors.json",  "vectors.bin",     "graph.jsonl",   "graph.json",
    "index.json",    "index.bin",       "embedding.csv", "embedding_diag.json"};

[[noreturn]] void corrupt(const fs::path& dir, const std::string& what) {
  throw Error(ErrorCode::kCorruptSnapshot, fmt::format("{}: {}", dir.string(), what));
}

struct Files {
  std::map<std::string, std::string> content;
};

Files serialize(const ModelSnapshot& s) {
  Files f;
  const auto version = s.corpus_version;
  f.content["corpus.jsonl"] = s.corpus.to_jsonl();
  f.content["vocabulary.json"] = to_json(s.vocabulary).dump();

  {
    binio::Writer w({{"corpus_version", version},
                     {"dimensionality", s.lsa_model.dimensionality},
                     {"n_components", s.lsa_model.n_components()}});
    w.add<double>("components", s.lsa_model.components,
                  {s.lsa_model.n_components(), s.lsa_model.dimensionality});
    w.add<double>("singular_values", s.lsa_model.singular_values, {s.lsa_model.n_components()});
    f.content["lsa.json"] = w.header_text();
    f.content["lsa.bin"] = w.payload();
  }
  {
    std::vector<std::string> ids;
    std::vector<double> flat;
    std::size_t dim = s.doc_vectors.empty() ? 0 : s.doc_vectors.begin()->second.size();
    for (const auto& [id, v] : s.doc_vectors) {
      ids.push_back(id);
      flat.insert(flat.end(), v.begin(), v.end());
    }
    if (flat.size() != ids.size() * dim) {
      throw Error(ErrorCode::kDimensionMismatch, "document vectors differ in length");
    }
    binio::Writer w({{"corpus_version", version}, {"doc_ids", ids}, {"dimensionality", dim}});
    w.add<double>("vectors", flat, {ids.size(), dim});
    f.content["vectors.json"] = w.header_text();
    f.content["vectors.bin"] = w.payload();
  }

  f.content["graph.jsonl"] = to_jsonl(s.similarity_graph);
  f.content["graph.json"] =
      nlohmann::json{{"corpus_version", version}, {"k_neighbors", s.similarity_graph.k_neighbors}}
          .dump(2);

  {
    const auto& idx = s.inverted_index;
    std::vector<std::uint32_t> docs;
    std::vector<double> weights;
    docs.reserve(idx.n_postings());
    weights.reserve(idx.n_postings());
    for (const auto& p : idx.all_postings()) {
      docs.push_back(p.doc);
      weights.push_back(p.weight);
    }
    binio::Writer w({{"corpus_version", idx.corpus_version()},
                     {"vocabulary_checksum", idx.vocabulary_checksum()},
                     {"doc_ids", idx.doc_ids()}});
    w.add<std::uint64_t>("offsets", idx.offsets(), {idx.offsets().size()});
    w.add<std::uint32_t>("posting_docs", docs, {docs.size()});
    w.add<double>("posting_weights", weights, {weights.size()});
    f.content["index.json"] = w.header_text();
    f.content["index.bin"] = w.payload();
  }

  f.content["embedding.csv"] = to_csv(s.embedding);
  nlohmann::json diag = diagnostics_json(s.embedding);
  diag["corpus_version"] = version;
  f.content["embedding_diag.json"] = diag.dump(2);
  return f;
}

// sha256 over "name:sum" lines in kFiles order.
std::string content_checksum(const std::map<std::string, std::string>& sums) {
  std::string all;
  for (const char* name : kFiles) all += fmt::format("{}:{}\n", name, sums.at(name));
  return fsutil::sha256_hex(all);
}

nlohmann::json manifest_json(const ModelSnapshot& s, const Files& f) {
  std::map<std::string, std::string> sums;
  for (const char* name : kFiles) sums[name] = fsutil::sha256_hex(f.content.at(name));
  nlohmann::json checksums = sums;
  return {{"format", kFormat},
          {"corpus_version", s.corpus_version},
          {"n_documents", s.corpus.size()},
          {"build_timestamp", format_timestamp(s.build_timestamp)},
          {"build_config", to_json(s.build_config)},
          {"build_report", s.build_report},
          {"checksums", std::move(checksums)},
          {"content_checksum", content_checksum(sums)}};
}

// Swaps two paths atomically; both must exist.
bool exchange_paths(const fs::path& a, const fs::path& b) {
  return ::renameat2(AT_FDCWD, a.c_str(), AT_FDCWD, b.c_str(), RENAME_EXCHANGE) == 0;
}

nlohmann::json parse_json(const fs::path& dir, const std::string& name, const std::string& text) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    corrupt(dir, fmt::format("{} is not valid JSON: {}", name, e.what()));
  }
}

void check_version(const fs::path& dir, const std::string& name, const nlohmann::json& header,
                   std::uint64_t expected) {
  auto v = header.value("corpus_version", std::uint64_t{0});
  if (v != expected) {
    corrupt(dir, fmt::format("{} is from corpus_version {}, manifest says {}", name, v, expected));
  }
}

}  // namespace

std::string vocabulary_checksum(const Vocabulary& vocabulary) {
  return fsutil::sha256_hex(to_json(vocabulary).dump());
}

void validate(const ModelSnapshot& s) {
  auto fail = [](const std::string& what) {
    throw Error(ErrorCode::kCorruptSnapshot, what);
  };
  const auto& corpus = s.corpus;
  auto known = [&](const std::string& id, std::string_view where) {
    if (!corpus.contains(id)) fail(fmt::format("{} references unknown doc_id '{}'", where, id));
  };
  if (s.vocabulary.corpus_size() != corpus.size()) {
    fail(fmt::format("vocabulary built from {} documents, corpus has {}",
                     s.vocabulary.corpus_size(), corpus.size()));
  }
  if (s.lsa_model.dimensionality != s.vocabulary.size()) {
    fail("LSA dimensionality differs from vocabulary size");
  }
  const std::size_t k = s.lsa_model.n_components();
  if (s.doc_vectors.size() != corpus.size()) fail("document vector count differs from corpus");
  for (const auto& [id, v] : s.doc_vectors) {
    known(id, "vectors");
    if (v.size() != k) fail(fmt::format("vector for '{}' has dimension {}, want {}", id, v.size(), k));
  }
  for (const auto& [id, neighbors] : s.similarity_graph.neighbors) {
    known(id, "similarity graph");
    for (const auto& n : neighbors) known(n.doc_id, "similarity graph");
  }
  if (s.similarity_graph.neighbors.size() != corpus.size()) {
    fail("similarity graph does not cover the corpus");
  }
  const auto& idx = s.inverted_index;
  if (idx.corpus_version() != s.corpus_version) fail("index corpus_version mismatch");
  if (idx.vocabulary_checksum() != vocabulary_checksum(s.vocabulary)) {
    fail("index was built against a different vocabulary");
  }
  if (idx.n_terms() != s.vocabulary.size()) fail("index term count differs from vocabulary");
  for (const auto& id : idx.doc_ids()) known(id, "index");
  if (idx.doc_ids().size() != corpus.size()) fail("index does not cover the corpus");
  if (s.embedding.doc_ids.size() != corpus.size()) fail("embedding does not cover the corpus");
  for (const auto& id : s.embedding.doc_ids) known(id, "embedding");
}

void save_snapshot(const ModelSnapshot& snapshot, const fs::path& dir, const SaveHooks& hooks) {
  Files files = serialize(snapshot);
  nlohmann::json manifest = manifest_json(snapshot, files);

  fs::path target = dir.lexically_normal();
  if (target.filename().empty()) target = target.parent_path();
  fs::path parent = target.parent_path().empty() ? fs::path(".") : target.parent_path();
  std::error_code ec;
  fs::create_directories(parent, ec);
  if (ec) {
    throw Error(ErrorCode::kIoFailure,
                fmt::format("cannot create {}: {}", parent.string(), ec.message()));
  }
  fs::path staging =
      parent / fmt::format(".{}.tmp-{}", target.filename().string(), fsutil::random_hex(6));
  if (!fs::create_directory(staging, ec) || ec) {
    throw Error(ErrorCode::kIoFailure,
                fmt::format("cannot create {}: {}", staging.string(),
                            ec ? ec.message() : "already exists"));
  }
  fsutil::TempDirGuard guard(staging);

  for (const char* name : kFiles) {
    fsutil::write_file(staging / name, files.content.at(name));
    if (hooks.after_file) hooks.after_file(name);
  }
  fsutil::write_file(staging / kManifest, manifest.dump(2));
  if (hooks.after_file) hooks.after_file(kManifest);
  fsutil::sync_directory(staging);

  if (fs::exists(target)) {
    if (!exchange_paths(staging, target)) {
      throw Error(ErrorCode::kIoFailure, fmt::format("cannot replace {}: {}", target.string(),
                                                     std::strerror(errno)));
    }
    // The guard now owns the previous contents.
  } else {
    if (std::rename(staging.c_str(), target.c_str()) != 0) {
      throw Error(ErrorCode::kIoFailure, fmt::format("cannot rename into {}: {}",
                                                     target.string(), std::strerror(errno)));
    }
    guard.release();
  }
  fsutil::sync_directory(parent);
  spdlog::info("snapshot: saved corpus_version {} to {}", snapshot.corpus_version,
               target.string());
}

SnapshotManifest read_manifest(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw Error(ErrorCode::kMissingSnapshot, fmt::format("{}: no such snapshot", dir.string()));
  }
  if (!fs::exists(dir / kManifest)) {
    throw Error(ErrorCode::kMissingSnapshot, fmt::format("{}: no manifest.json", dir.string()));
  }
  SnapshotManifest m;
  m.raw = parse_json(dir, kManifest, fsutil::read_file(dir / kManifest));
  try {
    if (m.raw.at("format").get<std::string>() != kFormat) corrupt(dir, "unknown snapshot format");
    m.corpus_version = m.raw.at("corpus_version").get<std::uint64_t>();
    m.content_checksum = m.raw.at("content_checksum").get<std::string>();
    m.file_checksums = m.raw.at("checksums").get<std::map<std::string, std::string>>();
  } catch (const nlohmann::json::exception& e) {
    corrupt(dir, fmt::format("bad manifest: {}", e.what()));
  }
  for (const char* name : kFiles) {
    if (!m.file_checksums.contains(name)) corrupt(dir, fmt::format("no checksum for {}", name));
  }
  if (content_checksum(m.file_checksums) != m.content_checksum) {
    corrupt(dir, "content_checksum does not match the file checksums");
  }
  return m;
}

ModelSnapshot load_snapshot(const fs::path& dir) {
  SnapshotManifest manifest = read_manifest(dir);
  std::map<std::string, std::string> text;
  for (const char* name : kFiles) {
    fs::path p = dir / name;
    if (!fs::is_regular_file(p)) corrupt(dir, fmt::format("missing {}", name));
    auto it = manifest.file_checksums.find(name);
    if (it == manifest.file_checksums.end()) corrupt(dir, fmt::format("no checksum for {}", name));
    std::string content = fsutil::read_file(p);
    if (fsutil::sha256_hex(content) != it->second) {
      corrupt(dir, fmt::format("checksum mismatch for {}", name));
    }
    text[name] = std::move(content);
  }

  ModelSnapshot s;
  s.corpus_version = manifest.corpus_version;
  const auto v = s.corpus_version;
  try {
    s.corpus = Corpus::from_jsonl(text["corpus.jsonl"]);
    s.vocabulary = vocabulary_from_json(parse_json(dir, "vocabulary.json", text["vocabulary.json"]));

    auto lsa_header = parse_json(dir, "lsa.json", text["lsa.json"]);
    check_version(dir, "lsa.json", lsa_header, v);
    binio::Reader lsa(lsa_header, text["lsa.bin"]);
    s.lsa_model.dimensionality = lsa_header.at("dimensionality").get<std::size_t>();
    s.lsa_model.components = lsa.get<double>("components");
    s.lsa_model.singular_values = lsa.get<double>("singular_values");
    if (s.lsa_model.components.size() !=
        s.lsa_model.singular_values.size() * s.lsa_model.dimensionality) {
      corrupt(dir, "lsa.bin shape mismatch");
    }

    auto vec_header = parse_json(dir, "vectors.json", text["vectors.json"]);
    check_version(dir, "vectors.json", vec_header, v);
    binio::Reader vec(vec_header, text["vectors.bin"]);
    auto ids = vec_header.at("doc_ids").get<std::vector<std::string>>();
    auto dim = vec_header.at("dimensionality").get<std::size_t>();
    auto flat = vec.get<double>("vectors");
    if (flat.size() != ids.size() * dim) corrupt(dir, "vectors.bin shape mismatch");
    for (std::size_t i = 0; i < ids.size(); ++i) {
      s.doc_vectors[ids[i]] = DenseVector(flat.begin() + static_cast<std::ptrdiff_t>(i * dim),
                                          flat.begin() + static_cast<std::ptrdiff_t>((i + 1) * dim));
    }

    auto graph_header = parse_json(dir, "graph.json", text["graph.json"]);
    check_version(dir, "graph.json", graph_header, v);
    s.similarity_graph = similarity_graph_from_jsonl(
        text["graph.jsonl"], graph_header.at("k_neighbors").get<std::size_t>());

    auto idx_header = parse_json(dir, "index.json", text["index.json"]);
    check_version(dir, "index.json", idx_header, v);
    binio::Reader idx(idx_header, text["index.bin"]);
    auto docs = idx.get<std::uint32_t>("posting_docs");
    auto weights = idx.get<double>("posting_weights");
    if (docs.size() != weights.size()) corrupt(dir, "index.bin posting arrays differ in length");
    std::vector<Posting> postings(docs.size());
    for (std::size_t i = 0; i < docs.size(); ++i) postings[i] = {docs[i], weights[i]};
    s.inverted_index = InvertedIndex(idx_header.at("doc_ids").get<std::vector<std::string>>(),
                                     idx.get<std::uint64_t>("offsets"), std::move(postings),
                                     idx_header.at("corpus_version").get<std::uint64_t>(),
                                     idx_header.at("vocabulary_checksum").get<std::string>());

    auto diag = parse_json(dir, "embedding_diag.json", text["embedding_diag.json"]);
    check_version(dir, "embedding_diag.json", diag, v);
    s.embedding = embedding_from_files(text["embedding.csv"], diag);

    s.build_config = pipeline_config_from_json(manifest.raw.at("build_config"));
    s.build_timestamp = parse_timestamp(manifest.raw.at("build_timestamp").get<std::string>());
    s.build_report = manifest.raw.value("build_report", nlohmann::json::object());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kCorruptSnapshot) throw;
    corrupt(dir, e.what());
  } catch (const std::exception& e) {
    corrupt(dir, e.what());
  }
  try {
    validate(s);
  } catch (const Error& e) {
    corrupt(dir, e.detail());
  }
  return s;
}

}  // namespace litatlas
