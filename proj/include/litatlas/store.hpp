#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>

#include "litatlas/document.hpp"
#include "litatlas/snapshot.hpp"

namespace litatlas {

/// On-disk store root:
///   corpus.jsonl       working corpus, appended to by ingest
///   users.jsonl        user profiles
///   snapshots/vNNNNNN  built snapshots
///   CURRENT            relative path of the live snapshot
/// Single writer; readers only ever see complete files.
class Store {
 public:
  /// Creates the root when absent. Throws Error(kIoFailure).
  explicit Store(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path corpus_path() const { return root_ / "corpus.jsonl"; }
  std::filesystem::path users_path() const { return root_ / "users.jsonl"; }

  Corpus load_corpus() const;
  void save_corpus(const Corpus& corpus) const;

  /// Validates and upserts into the working corpus; all-or-nothing.
  UpsertResult ingest(std::span<const Document> docs) const;

  std::optional<std::filesystem::path> current_snapshot() const;
  /// corpus_version of the live snapshot, 0 when none.
  std::uint64_t current_version() const;

  /// Saves under snapshots/ and repoints CURRENT; returns the snapshot dir.
  std::filesystem::path install(const ModelSnapshot& snapshot) const;

 private:
  std::filesystem::path root_;
};

/// A directory is either a store root (has CURRENT) or a snapshot itself.
std::filesystem::path resolve_snapshot_dir(const std::filesystem::path& path);

}  // namespace litatlas
