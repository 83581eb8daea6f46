// Per-test scratch directory under the system temp dir, removed on scope exit.
#pragma once

#include <filesystem>
#include <string>

#include "litatlas/fsutil.hpp"

namespace scratch {

class Dir {
 public:
  explicit Dir(const std::string& tag)
      : guard_(std::filesystem::temp_directory_path() /
               ("litatlas_" + tag + "_" + litatlas::fsutil::random_hex(6))) {
    std::filesystem::create_directories(guard_.path());
  }
  const std::filesystem::path& path() const { return guard_.path(); }
  std::filesystem::path operator/(const std::string& name) const { return guard_.path() / name; }

 private:
  litatlas::fsutil::TempDirGuard guard_;
};

}  // namespace scratch
