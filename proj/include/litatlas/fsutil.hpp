#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace litatlas::fsutil {

namespace fs = std::filesystem;

/// Reads a whole file; throws Error(kIoFailure).
std::string read_file(const fs::path& path);

/// Writes and fsyncs `path` in place; throws Error(kIoFailure).
void write_file(const fs::path& path, std::string_view data);

/// Writes to a sibling temp file, fsyncs, then renames over `path`.
void write_file_atomic(const fs::path& path, std::string_view data);

/// fsync on a directory so that renames inside it are durable.
void sync_directory(const fs::path& dir);

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);
std::string sha256_file(const fs::path& path);

/// Random lowercase hex string of `bytes` random bytes.
std::string random_hex(std::size_t bytes);

/// Removes the directory tree on destruction unless released.
class TempDirGuard {
 public:
  explicit TempDirGuard(fs::path path) : path_(std::move(path)) {}
  TempDirGuard(const TempDirGuard&) = delete;
  TempDirGuard& operator=(const TempDirGuard&) = delete;
  ~TempDirGuard();

  const fs::path& path() const { return path_; }
  void release() { path_.clear(); }

 private:
  fs::path path_;
};

}  // namespace litatlas::fsutil
