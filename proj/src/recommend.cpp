#include "litatlas/recommend.hpp"

#include <algorithm>
#include <sstream>

#include <spdlog/spdlog.h>

#include "litatlas/error.hpp"
#include "litatlas/fsutil.hpp"

namespace litatlas {

std::string_view to_string(Verdict verdict) {
  return verdict == Verdict::relevant ? "relevant" : "irrelevant";
}

Verdict parse_verdict(std::string_view text) {
  if (text == "relevant") return Verdict::relevant;
  if (text == "irrelevant") return Verdict::irrelevant;
  throw Error(ErrorCode::kInvalidArgument,
              "verdict must be 'relevant' or 'irrelevant', got '" + std::string(text) + "'");
}

UserProfile rate(UserProfile profile, std::string_view doc_id, Verdict verdict,
                 const DocumentExists& exists, Timestamp now) {
  if (!exists(doc_id)) throw Error(ErrorCode::kUnknownDocument, std::string(doc_id));
  auto it = profile.ratings.find(doc_id);
  if (it == profile.ratings.end()) {
    profile.ratings.emplace(std::string(doc_id), Rating{verdict, now});
  } else if (it->second.verdict != verdict) {
    it->second = Rating{verdict, now};
  }
  return profile;
}

std::vector<Neighbor> recommend(const UserProfile& profile, const SimilarityGraph& graph,
                                std::size_t n) {
  if (n < 1) throw Error(ErrorCode::kInvalidArgument, "recommendation count must be >= 1");

  std::map<std::string_view, double> best;
  for (const auto& [doc_id, rating] : profile.ratings) {
    if (rating.verdict != Verdict::relevant) continue;
    auto it = graph.neighbors.find(doc_id);
    if (it == graph.neighbors.end()) {
      spdlog::info("recommend: ignoring stale rating of {} by {}", doc_id, profile.user_id);
      continue;
    }
    for (const auto& nb : it->second) {
      auto [slot, inserted] = best.emplace(nb.doc_id, nb.score);
      if (!inserted) slot->second = std::max(slot->second, nb.score);
    }
  }

  std::vector<Neighbor> out;
  for (const auto& [doc_id, score] : best) {
    if (profile.ratings.contains(doc_id)) continue;
    out.push_back({std::string(doc_id), score});
  }
  std::sort(out.begin(), out.end(), ranks_before);
  if (out.size() > n) out.resize(n);
  return out;
}

nlohmann::json to_json(const UserProfile& profile) {
  nlohmann::json ratings = nlohmann::json::object();
  for (const auto& [doc_id, r] : profile.ratings) {
    ratings[doc_id] = {{"verdict", to_string(r.verdict)},
                       {"rated_at", format_timestamp(r.rated_at)}};
  }
  return {{"user_id", profile.user_id}, {"ratings", std::move(ratings)}};
}

UserProfile user_profile_from_json(const nlohmann::json& j) {
  UserProfile p;
  p.user_id = j.at("user_id").get<std::string>();
  for (const auto& [doc_id, r] : j.at("ratings").items()) {
    p.ratings.emplace(doc_id, Rating{parse_verdict(r.at("verdict").get<std::string>()),
                                     parse_timestamp(r.at("rated_at").get<std::string>())});
  }
  return p;
}

ProfileStore::ProfileStore(std::filesystem::path path) : path_(std::move(path)) {
  if (!std::filesystem::exists(path_)) return;
  std::istringstream in(fsutil::read_file(path_));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    UserProfile p = user_profile_from_json(nlohmann::json::parse(line));
    profiles_.insert_or_assign(p.user_id, std::move(p));
  }
}

std::optional<UserProfile> ProfileStore::get(std::string_view user_id) const {
  std::lock_guard lock(mu_);
  auto it = profiles_.find(user_id);
  if (it == profiles_.end()) return std::nullopt;
  return it->second;
}

UserProfile ProfileStore::rate(std::string_view user_id, std::string_view doc_id,
                               Verdict verdict, const DocumentExists& exists) {
  std::lock_guard lock(mu_);
  UserProfile current;
  if (auto it = profiles_.find(user_id); it != profiles_.end()) {
    current = it->second;
  } else {
    current.user_id = std::string(user_id);
  }
  UserProfile updated = litatlas::rate(std::move(current), doc_id, verdict, exists);
  auto previous = profiles_.find(user_id);
  std::optional<UserProfile> backup;
  if (previous != profiles_.end()) backup = previous->second;
  profiles_.insert_or_assign(updated.user_id, updated);
  try {
    persist_locked();
  } catch (...) {
    if (backup) {
      profiles_.insert_or_assign(backup->user_id, *backup);
    } else {
      profiles_.erase(updated.user_id);
    }
    throw;
  }
  return updated;
}

void ProfileStore::persist_locked() const {
  std::string out;
  for (const auto& [_, p] : profiles_) {
    out += to_json(p).dump();
    out += '\n';
  }
  fsutil::write_file_atomic(path_, out);
}

}  // namespace litatlas
