#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "litatlas/document.hpp"
#include "litatlas/similarity.hpp"

namespace litatlas {

enum class Verdict { relevant, irrelevant };

std::string_view to_string(Verdict verdict);
/// Throws Error(kInvalidArgument) for anything but "relevant"/"irrelevant".
Verdict parse_verdict(std::string_view text);

struct Rating {
  Verdict verdict = Verdict::relevant;
  Timestamp rated_at{};

  bool operator==(const Rating&) const = default;
};

/// One current verdict per document; a new rating replaces the old one.
struct UserProfile {
  std::string user_id;
  std::map<std::string, Rating, std::less<>> ratings;

  bool operator==(const UserProfile&) const = default;
};

using DocumentExists = std::function<bool(std::string_view)>;

/// Last write wins; re-rating with the same verdict keeps the original
/// timestamp. Throws Error(kUnknownDocument) and leaves `profile` unchanged
/// when `exists(doc_id)` is false.
UserProfile rate(UserProfile profile, std::string_view doc_id, Verdict verdict,
                 const DocumentExists& exists, Timestamp now = utc_now());

/// Candidates are the graph neighbors of relevant-rated documents, scored by
/// the maximum stored similarity over those sources. Every rated document is
/// excluded; irrelevant ratings never add or rescore candidates. Top `n`,
/// score descending, ties by doc_id.
std::vector<Neighbor> recommend(const UserProfile& profile, const SimilarityGraph& graph,
                                std::size_t n = 20);

nlohmann::json to_json(const UserProfile& profile);
UserProfile user_profile_from_json(const nlohmann::json& j);

/// users.jsonl backed profile storage. Writes are serialized and rewrite the
/// file atomically; reads return point-in-time copies.
class ProfileStore {
 public:
  explicit ProfileStore(std::filesystem::path path);

  std::optional<UserProfile> get(std::string_view user_id) const;

  /// Applies `rate` and persists; returns the updated profile.
  UserProfile rate(std::string_view user_id, std::string_view doc_id, Verdict verdict,
                   const DocumentExists& exists);

  const std::filesystem::path& path() const { return path_; }

 private:
  void persist_locked() const;

  std::filesystem::path path_;
  mutable std::mutex mu_;
  std::map<std::string, UserProfile, std::less<>> profiles_;
};

}  // namespace litatlas
