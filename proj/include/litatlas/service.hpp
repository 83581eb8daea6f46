#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "litatlas/snapshot.hpp"

namespace litatlas {

struct ServiceOptions {
  // A store root (with CURRENT) or a snapshot directory.
  std::filesystem::path snapshot_path;
  // Defaults to users.jsonl in the store root, or next to the snapshot dir.
  std::optional<std::filesystem::path> users_path;
  std::optional<std::filesystem::path> static_dir;
  std::size_t similar_limit = 10;
  std::size_t max_limit = 1000;
  unsigned threads = 8;
};

/// A loaded snapshot plus its manifest, swapped as one unit.
struct LiveSnapshot {
  std::shared_ptr<const ModelSnapshot> snapshot;
  SnapshotManifest manifest;
  std::filesystem::path dir;
};

inline constexpr const char* kUserCookie = "litatlas_uid";

/// JSON REST API over an immutable snapshot. Each request pins the snapshot
/// current when it starts; reload() swaps in a newer one atomically.
class Service {
 public:
  /// Loads the snapshot; throws Error(kMissingSnapshot | kCorruptSnapshot).
  explicit Service(ServiceOptions options);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds; port 0 picks a free port. Returns the bound port, throws on failure.
  int bind(const std::string& host, int port);
  /// Serves until stop(). Call after bind().
  void run();
  void stop();
  bool running() const;

  /// Re-resolves snapshot_path and swaps. On failure the old snapshot stays.
  void reload();
  std::shared_ptr<const LiveSnapshot> live() const;
  const std::filesystem::path& users_path() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace litatlas
