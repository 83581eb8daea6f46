#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "litatlas/config.hpp"
#include "litatlas/document.hpp"
#include "litatlas/lsa.hpp"
#include "litatlas/search.hpp"
#include "litatlas/similarity.hpp"
#include "litatlas/textpipe.hpp"
#include "litatlas/tsne.hpp"

namespace litatlas {

/// Corpus plus every derived structure, all built from one corpus_version.
/// Immutable once built; shared read-only between request threads.
struct ModelSnapshot {
  std::uint64_t corpus_version = 0;
  Corpus corpus;
  Vocabulary vocabulary;
  LsaModel lsa_model;
  std::map<std::string, DenseVector> doc_vectors;
  SimilarityGraph similarity_graph;
  InvertedIndex inverted_index;
  EmbeddingResult embedding;
  PipelineConfig build_config;
  Timestamp build_timestamp{};
  nlohmann::json build_report = nlohmann::json::object();

  bool operator==(const ModelSnapshot&) const = default;
};

/// SHA-256 of the serialized vocabulary, as referenced by the index.
std::string vocabulary_checksum(const Vocabulary& vocabulary);

/// Referential and version consistency; throws Error(kCorruptSnapshot).
void validate(const ModelSnapshot& snapshot);

struct SaveHooks {
  // Called after each file lands in the staging directory.
  std::function<void(std::string_view file)> after_file;
};

/// Writes the snapshot layout into a staging directory next to `dir`, then
/// renames it into place (atomic exchange when `dir` already exists).
/// Throws Error(kIoFailure); a failed save never disturbs an existing `dir`.
void save_snapshot(const ModelSnapshot& snapshot, const std::filesystem::path& dir,
                   const SaveHooks& hooks = {});

/// Verifies checksums and cross-references. Throws Error(kMissingSnapshot)
/// when `dir` holds no snapshot and Error(kCorruptSnapshot) otherwise.
ModelSnapshot load_snapshot(const std::filesystem::path& dir);

struct SnapshotManifest {
  std::uint64_t corpus_version = 0;
  std::string content_checksum;
  std::map<std::string, std::string> file_checksums;
  nlohmann::json raw;
};

SnapshotManifest read_manifest(const std::filesystem::path& dir);

}  // namespace litatlas
