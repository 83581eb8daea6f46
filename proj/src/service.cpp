#include "litatlas/service.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <mutex>

#include <fmt/format.h>
#include <httplib.h>
#include <spdlog/spdlog.h>

#include "litatlas/error.hpp"
#include "litatlas/fsutil.hpp"
#include "litatlas/recommend.hpp"
#include "litatlas/search.hpp"
#include "litatlas/store.hpp"

namespace litatlas {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kInvalidDocument:
    case ErrorCode::kUnknownTerm:
    case ErrorCode::kDimensionMismatch:
      return 400;
    case ErrorCode::kUnknownDocument:
      return 404;
    case ErrorCode::kMissingSnapshot:
    case ErrorCode::kEmptyCorpus:
      return 503;
    default:
      return 500;
  }
}

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response& res, int status, std::string_view error, std::string detail) {
  reply(res, status, json{{"error", error}, {"detail", std::move(detail)}});
}

std::size_t size_param(const httplib::Request& req, const char* name, std::size_t fallback,
                       std::size_t max) {
  if (!req.has_param(name)) return fallback;
  const std::string v = req.get_param_value(name);
  std::size_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw Error(ErrorCode::kInvalidArgument, fmt::format("{} must be a non-negative integer", name));
  }
  return std::min(out, max);
}

json summary(const Document& d) {
  json j = {{"doc_id", d.doc_id},
            {"title", d.title},
            {"authors", d.authors},
            {"venue", d.venue},
            {"source", to_string(d.source)},
            {"url", d.url}};
  j["year"] = d.published_year ? json(*d.published_year) : json(nullptr);
  return j;
}

json scored(const ModelSnapshot& s, const std::vector<Neighbor>& list) {
  json out = json::array();
  for (const auto& n : list) {
    json item = {{"doc_id", n.doc_id}, {"score", n.score}};
    if (const Document* d = s.corpus.find(n.doc_id)) {
      item["title"] = d->title;
      item["venue"] = d->venue;
      item["year"] = d->published_year ? json(*d->published_year) : json(nullptr);
    }
    out.push_back(std::move(item));
  }
  return out;
}

bool valid_token(std::string_view t) {
  return t.size() == 32 && std::all_of(t.begin(), t.end(), [](char c) {
           return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
         });
}

std::optional<std::string> cookie_user(const httplib::Request& req) {
  std::string header = req.get_header_value("Cookie");
  std::string_view rest = header;
  const std::string key = std::string(kUserCookie) + "=";
  while (!rest.empty()) {
    auto semi = rest.find(';');
    std::string_view part = rest.substr(0, semi);
    while (!part.empty() && part.front() == ' ') part.remove_prefix(1);
    if (part.substr(0, key.size()) == key) {
      std::string_view value = part.substr(key.size());
      if (valid_token(value)) return std::string(value);
    }
    if (semi == std::string_view::npos) break;
    rest.remove_prefix(semi + 1);
  }
  return std::nullopt;
}

// Existing cookie user, or a fresh 128-bit token set on the response.
std::string ensure_user(const httplib::Request& req, httplib::Response& res) {
  if (auto u = cookie_user(req)) return *u;
  std::string token = fsutil::random_hex(16);
  res.set_header("Set-Cookie",
                 fmt::format("{}={}; Path=/; Max-Age=31536000; SameSite=Lax; HttpOnly", kUserCookie,
                             token));
  return token;
}

json parse_body(const httplib::Request& req) {
  try {
    json j = json::parse(req.body);
    if (!j.is_object()) throw Error(ErrorCode::kInvalidArgument, "request body must be an object");
    return j;
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kInvalidArgument, fmt::format("malformed JSON body: {}", e.what()));
  }
}

std::shared_ptr<const LiveSnapshot> load_live(const fs::path& path) {
  fs::path dir = resolve_snapshot_dir(path);
  auto live = std::make_shared<LiveSnapshot>();
  live->snapshot = std::make_shared<const ModelSnapshot>(load_snapshot(dir));
  live->manifest = read_manifest(dir);
  live->dir = dir;
  return live;
}

fs::path default_users_path(const fs::path& snapshot_path) {
  if (fs::exists(snapshot_path / "CURRENT")) return snapshot_path / "users.jsonl";
  fs::path parent = snapshot_path.lexically_normal().parent_path();
  if (parent.filename() == "snapshots" && fs::exists(parent.parent_path() / "CURRENT")) {
    return parent.parent_path() / "users.jsonl";
  }
  return parent / "users.jsonl";
}

}  // namespace

struct Service::Impl {
  ServiceOptions options;
  fs::path users_path;
  ProfileStore profiles;
  httplib::Server server;
  mutable std::mutex live_mu;
  std::shared_ptr<const LiveSnapshot> live;
  std::atomic<bool> bound{false};

  Impl(ServiceOptions o, fs::path users)
      : options(std::move(o)), users_path(users), profiles(std::move(users)) {}

  std::shared_ptr<const LiveSnapshot> current() const {
    std::lock_guard lock(live_mu);
    return live;
  }

  // Runs `body` with the pinned snapshot, mapping errors to JSON responses.
  template <typename F>
  void guarded(const httplib::Request& req, httplib::Response& res, F&& body) {
    try {
      auto pinned = current();
      body(*pinned->snapshot, *pinned);
    } catch (const Error& e) {
      reply_error(res, status_for(e.code()), to_string(e.code()), e.detail());
    } catch (const std::exception& e) {
      spdlog::error("service: {} {}: {}", req.method, req.path, e.what());
      reply_error(res, 500, "InternalError", e.what());
    }
  }

  void routes();
  json health(const LiveSnapshot& l) const {
    const auto& s = *l.snapshot;
    return {{"status", "ok"},
            {"corpus_version", l.manifest.corpus_version},
            {"content_checksum", l.manifest.content_checksum},
            {"n_documents", s.corpus.size()},
            {"build_timestamp", format_timestamp(s.build_timestamp)}};
  }
};

void Service::Impl::routes() {
  server.Get("/api/health", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(req, res, [&](const ModelSnapshot&, const LiveSnapshot& l) { reply(res, 200, health(l)); });
  });

  server.Get("/api/papers", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(req, res, [&](const ModelSnapshot& s, const LiveSnapshot&) {
      std::size_t limit = size_param(req, "limit", 50, options.max_limit);
      std::size_t offset = size_param(req, "offset", 0, s.corpus.size());
      std::string q = req.has_param("q") ? req.get_param_value("q") : "";
      json items = json::array();
      std::size_t total = 0;
      if (q.empty()) {
        total = s.corpus.size();
        auto it = s.corpus.begin();
        std::advance(it, static_cast<std::ptrdiff_t>(offset));
        for (std::size_t i = 0; it != s.corpus.end() && i < limit; ++it, ++i) {
          items.push_back(summary(it->second));
        }
      } else {
        SearchResult r = search_text(s.inverted_index, s.vocabulary, q, offset + limit);
        total = r.total_matches;
        for (std::size_t i = offset; i < r.ranked.size(); ++i) {
          json item = summary(*s.corpus.find(r.ranked[i].doc_id));
          item["score"] = r.ranked[i].score;
          items.push_back(std::move(item));
        }
      }
      reply(res, 200, {{"items", std::move(items)}, {"total", total}, {"offset", offset},
                       {"limit", limit}});
    });
  });

  server.Get(R"(/api/papers/(.+))", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(req, res, [&](const ModelSnapshot& s, const LiveSnapshot&) {
      const std::string id = req.matches[1];
      const Document* d = s.corpus.find(id);
      if (d == nullptr) throw Error(ErrorCode::kUnknownDocument, id);
      const auto& all = top_k_similar(s.similarity_graph, id);
      std::vector<Neighbor> similar(all.begin(),
                                    all.begin() + static_cast<std::ptrdiff_t>(std::min(
                                                      all.size(), options.similar_limit)));
      reply(res, 200, {{"document", to_json(*d)}, {"similar", scored(s, similar)}});
    });
  });

  server.Get("/api/map", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(req, res, [&](const ModelSnapshot& s, const LiveSnapshot&) {
      json points = json::array();
      const auto& e = s.embedding;
      for (std::size_t i = 0; i < e.doc_ids.size(); ++i) {
        const Document& d = *s.corpus.find(e.doc_ids[i]);
        points.push_back({{"doc_id", d.doc_id},
                          {"x", e.coords[i].x},
                          {"y", e.coords[i].y},
                          {"title", d.title},
                          {"year", d.published_year ? json(*d.published_year) : json(nullptr)},
                          {"venue", d.venue}});
      }
      reply(res, 200, points);
    });
  });

  // Query text is used for scoring only and never persisted or logged.
  server.Post("/api/search", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(req, res, [&](const ModelSnapshot& s, const LiveSnapshot&) {
      json body = parse_body(req);
      if (!body.contains("text") || !body["text"].is_string()) {
        throw Error(ErrorCode::kInvalidArgument, "body.text must be a string");
      }
      std::size_t limit = 20;
      if (body.contains("limit")) {
        if (!body["limit"].is_number_unsigned()) {
          throw Error(ErrorCode::kInvalidArgument, "body.limit must be a non-negative integer");
        }
        limit = std::min(body["limit"].get<std::size_t>(), options.max_limit);
      }
      SearchResult r = search_text(s.inverted_index, s.vocabulary, body["text"].get<std::string>(),
                                   limit);
      reply(res, 200, {{"results", scored(s, r.ranked)},
                       {"query_terms_matched", r.query_terms_matched},
                       {"total_matches", r.total_matches},
                       {"truncated_at", r.truncated_at}});
    });
  });

  server.Post(R"(/api/papers/(.+)/rating)",
              [this](const httplib::Request& req, httplib::Response& res) {
                guarded(req, res, [&](const ModelSnapshot& s, const LiveSnapshot&) {
                  json body = parse_body(req);
                  if (!body.contains("verdict") || !body["verdict"].is_string()) {
                    throw Error(ErrorCode::kInvalidArgument, "body.verdict must be a string");
                  }
                  Verdict verdict = parse_verdict(body["verdict"].get<std::string>());
                  const std::string id = req.matches[1];
                  auto exists = [&](std::string_view d) { return s.corpus.contains(d); };
                  if (!exists(id)) throw Error(ErrorCode::kUnknownDocument, id);
                  std::string user = ensure_user(req, res);
                  UserProfile p = profiles.rate(user, id, verdict, exists);
                  reply(res, 200, {{"doc_id", id},
                                   {"verdict", to_string(verdict)},
                                   {"ratings", p.ratings.size()}});
                });
              });

  server.Get("/api/recommendations", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(req, res, [&](const ModelSnapshot& s, const LiveSnapshot&) {
      std::size_t limit = size_param(req, "limit", 20, options.max_limit);
      std::string user = ensure_user(req, res);
      json ratings = json::object();
      std::vector<Neighbor> recs;
      if (auto p = profiles.get(user)) {
        recs = recommend(*p, s.similarity_graph, limit);
        for (const auto& [doc, r] : p->ratings) ratings[doc] = to_string(r.verdict);
      }
      reply(res, 200, {{"recommendations", scored(s, recs)}, {"ratings", std::move(ratings)}});
    });
  });

  server.Post("/api/admin/reload", [this](const httplib::Request& req, httplib::Response& res) {
    try {
      auto next = load_live(options.snapshot_path);
      {
        std::lock_guard lock(live_mu);
        live = next;
      }
      spdlog::info("service: reloaded corpus_version {}", next->manifest.corpus_version);
      reply(res, 200, health(*next));
    } catch (const Error& e) {
      reply_error(res, status_for(e.code()), to_string(e.code()), e.detail());
    }
    (void)req;
  });

  server.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (res.body.empty() && res.status == 404) {
      reply_error(res, 404, "NotFound", fmt::format("no route for {} {}", req.method, req.path));
    }
  });
}

Service::Service(ServiceOptions options) {
  fs::path users = options.users_path.value_or(default_users_path(options.snapshot_path));
  auto live = load_live(options.snapshot_path);
  impl_ = std::make_unique<Impl>(std::move(options), std::move(users));
  impl_->live = std::move(live);
  unsigned threads = std::max(1U, impl_->options.threads);
  impl_->server.new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
  if (impl_->options.static_dir) {
    if (!impl_->server.set_mount_point("/", impl_->options.static_dir->string())) {
      throw Error(ErrorCode::kInvalidArgument,
                  fmt::format("static dir {} does not exist", impl_->options.static_dir->string()));
    }
  }
  impl_->routes();
  spdlog::info("service: serving corpus_version {} ({} documents) from {}",
               impl_->live->manifest.corpus_version, impl_->live->snapshot->corpus.size(),
               impl_->live->dir.string());
}

Service::~Service() { stop(); }

int Service::bind(const std::string& host, int port) {
  int bound = -1;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
  } else if (impl_->server.bind_to_port(host, port)) {
    bound = port;
  }
  if (bound < 0) {
    throw Error(ErrorCode::kIoFailure, fmt::format("cannot bind {}:{}", host, port));
  }
  impl_->bound = true;
  return bound;
}

void Service::run() {
  if (!impl_->bound) throw Error(ErrorCode::kInvalidArgument, "bind() before run()");
  impl_->server.listen_after_bind();
}

void Service::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

bool Service::running() const { return impl_->server.is_running(); }

void Service::reload() {
  auto next = load_live(impl_->options.snapshot_path);
  std::lock_guard lock(impl_->live_mu);
  impl_->live = std::move(next);
}

std::shared_ptr<const LiveSnapshot> Service::live() const { return impl_->current(); }

const fs::path& Service::users_path() const { return impl_->users_path; }

}  // namespace litatlas
