#include "litatlas/store.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "litatlas/error.hpp"
#include "litatlas/fsutil.hpp"

namespace litatlas {

namespace fs = std::filesystem;

namespace {

std::string trim(std::string s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
  return s;
}

}  // namespace

Store::Store(fs::path root) : root_(std::move(root)) {
  std::error_code ec;
  fs::create_directories(root_ / "snapshots", ec);
  if (ec) {
    throw Error(ErrorCode::kIoFailure,
                fmt::format("cannot create store {}: {}", root_.string(), ec.message()));
  }
}

Corpus Store::load_corpus() const {
  if (!fs::exists(corpus_path())) return {};
  return Corpus::from_jsonl(fsutil::read_file(corpus_path()));
}

void Store::save_corpus(const Corpus& corpus) const {
  fsutil::write_file_atomic(corpus_path(), corpus.to_jsonl());
}

UpsertResult Store::ingest(std::span<const Document> docs) const {
  Corpus corpus = load_corpus();
  UpsertResult r = corpus.upsert(docs);
  save_corpus(corpus);
  return r;
}

std::optional<fs::path> Store::current_snapshot() const {
  fs::path pointer = root_ / "CURRENT";
  if (!fs::exists(pointer)) return std::nullopt;
  std::string rel = trim(fsutil::read_file(pointer));
  if (rel.empty()) return std::nullopt;
  return root_ / rel;
}

std::uint64_t Store::current_version() const {
  auto dir = current_snapshot();
  if (!dir) return 0;
  return read_manifest(*dir).corpus_version;
}

fs::path Store::install(const ModelSnapshot& snapshot) const {
  std::string rel = fmt::format("snapshots/v{:06d}", snapshot.corpus_version);
  fs::path dir = root_ / rel;
  save_snapshot(snapshot, dir);
  fsutil::write_file_atomic(root_ / "CURRENT", rel + "\n");
  spdlog::info("store: CURRENT -> {}", rel);
  return dir;
}

fs::path resolve_snapshot_dir(const fs::path& path) {
  if (fs::exists(path / "CURRENT")) {
    std::string rel = trim(fsutil::read_file(path / "CURRENT"));
    if (rel.empty()) {
      throw Error(ErrorCode::kMissingSnapshot, fmt::format("{}: CURRENT is empty", path.string()));
    }
    return path / rel;
  }
  return path;
}

}  // namespace litatlas
