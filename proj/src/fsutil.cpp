#include "litatlas/fsutil.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <array>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <random>

#include <fmt/format.h>
#include <openssl/evp.h>
#include <openssl/rand.h>

#include "litatlas/error.hpp"

namespace litatlas::fsutil {

namespace {

[[noreturn]] void io_failure(const fs::path& path, std::string_view what) {
  throw Error(ErrorCode::kIoFailure,
              fmt::format("{}: {} ({})", path.string(), what, std::strerror(errno)));
}

}  // namespace

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) io_failure(path, "cannot open for reading");
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) io_failure(path, "read failed");
  return data;
}

void write_file(const fs::path& path, std::string_view data) {
  int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) io_failure(path, "cannot open for writing");
  const char* p = data.data();
  std::size_t left = data.size();
  while (left > 0) {
    ssize_t n = ::write(fd, p, left);
    if (n < 0) {
      if (errno == EINTR) continue;
      ::close(fd);
      io_failure(path, "write failed");
    }
    p += n;
    left -= static_cast<std::size_t>(n);
  }
  if (::fsync(fd) != 0) {
    ::close(fd);
    io_failure(path, "fsync failed");
  }
  if (::close(fd) != 0) io_failure(path, "close failed");
}

void write_file_atomic(const fs::path& path, std::string_view data) {
  fs::path tmp = path;
  tmp += ".tmp-" + random_hex(6);
  try {
    write_file(tmp, data);
  } catch (...) {
    std::error_code ec;
    fs::remove(tmp, ec);
    throw;
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::error_code ec;
    fs::remove(tmp, ec);
    io_failure(path, "rename failed");
  }
  sync_directory(path.has_parent_path() ? path.parent_path() : fs::path("."));
}

void sync_directory(const fs::path& dir) {
  int fd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY | O_CLOEXEC);
  if (fd < 0) return;
  ::fsync(fd);
  ::close(fd);
}

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::kIoFailure, "sha256 failed");
  }
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) out += fmt::format("{:02x}", digest[i]);
  return out;
}

std::string sha256_file(const fs::path& path) { return sha256_hex(read_file(path)); }

std::string random_hex(std::size_t bytes) {
  std::string buf(bytes, '\0');
  auto* raw = reinterpret_cast<unsigned char*>(buf.data());
  if (RAND_bytes(raw, static_cast<int>(bytes)) != 1) {
    std::random_device rd;
    for (auto& c : buf) c = static_cast<char>(rd());
  }
  std::string out;
  out.reserve(bytes * 2);
  for (unsigned char c : buf) out += fmt::format("{:02x}", c);
  return out;
}

TempDirGuard::~TempDirGuard() {
  if (path_.empty()) return;
  std::error_code ec;
  fs::remove_all(path_, ec);
}

}  // namespace litatlas::fsutil
