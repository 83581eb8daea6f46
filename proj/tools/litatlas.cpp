// litatlas command line: ingest, build, serve.

#include <csignal>
#include <cstdlib>
#include <iostream>
#include <pthread.h>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <httplib.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "litatlas/config.hpp"
#include "litatlas/error.hpp"
#include "litatlas/fsutil.hpp"
#include "litatlas/ingest.hpp"
#include "litatlas/pipeline.hpp"
#include "litatlas/service.hpp"
#include "litatlas/store.hpp"

namespace fs = std::filesystem;
using namespace litatlas;

namespace {

// --store flag, then LITATLAS_STORE, then the config's store. Accepts a
// directory or a file:// URL (e.g. a mounted remote volume).
fs::path resolve_store(const std::string& flag, const PipelineConfig& config) {
  std::string s = flag;
  if (s.empty()) {
    if (const char* env = std::getenv("LITATLAS_STORE")) s = env;
  }
  if (s.empty()) s = config.store;
  if (s.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                "no store given: pass --store, set LITATLAS_STORE, or set \"store\" in the config");
  }
  constexpr std::string_view kFileScheme = "file://";
  if (s.rfind(kFileScheme, 0) == 0) return fs::path(s.substr(kFileScheme.size()));
  if (s.find("://") != std::string::npos) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("unsupported store URL '{}': use a directory or file:// URL", s));
  }
  return fs::path(s);
}

std::vector<Document> read_documents(const fs::path& path, const std::string& format) {
  std::string text = fsutil::read_file(path);
  if (format == "pubmed") return parse_pubmed_xml(text).documents;
  if (format == "arxiv") return parse_arxiv_atom(text).documents;
  if (format == "jsonl") {
    Corpus c = Corpus::from_jsonl(text);
    std::vector<Document> out;
    for (const auto& [id, d] : c) out.push_back(d);
    return out;
  }
  throw Error(ErrorCode::kInvalidArgument, "format must be pubmed, arxiv or jsonl");
}

void notify_reload(const std::string& url) {
  httplib::Client client(url);
  client.set_connection_timeout(10);
  auto res = client.Post("/api/admin/reload", "", "application/json");
  if (!res) {
    throw Error(ErrorCode::kTransportError,
                fmt::format("reload request to {} failed: {}", url, httplib::to_string(res.error())));
  }
  if (res->status != 200) {
    throw Error(ErrorCode::kTransportError,
                fmt::format("reload request to {} returned {}: {}", url, res->status, res->body));
  }
  std::cout << res->body << "\n";
}

std::pair<std::string, int> parse_bind(const std::string& bind) {
  auto colon = bind.rfind(':');
  if (colon == std::string::npos) return {bind, 8080};
  return {bind.substr(0, colon), std::stoi(bind.substr(colon + 1))};
}

struct IngestArgs {
  std::string config;
  std::string store;
  std::string replay;
  std::string from_file;
  std::string format = "jsonl";
};

int run_ingest(const IngestArgs& a) {
  PipelineConfig config = a.config.empty() ? PipelineConfig{} : load_pipeline_config(a.config);
  Store store(resolve_store(a.store, config));
  nlohmann::json out = nlohmann::json::array();

  if (!a.from_file.empty()) {
    auto docs = read_documents(a.from_file, a.format);
    UpsertResult r = store.ingest(docs);
    out.push_back({{"source", a.from_file}, {"inserted", r.inserted}, {"updated", r.updated}});
  } else {
    if (config.sources.empty()) throw Error(ErrorCode::kInvalidArgument, "config has no sources");
    std::unique_ptr<HttpTransport> transport;
    if (a.replay.empty()) {
      transport = std::make_unique<CurlTransport>();
    } else {
      transport = std::make_unique<ReplayTransport>(a.replay);
    }
    FetchOptions options;
    if (!a.replay.empty()) options.sleep = [](std::chrono::milliseconds) {};
    for (const auto& q : config.sources) {
      FetchResult fetched = fetch(q, *transport, options);
      UpsertResult r = store.ingest(fetched.documents);
      out.push_back({{"source", to_json(q)},
                     {"report", to_json(fetched.report)},
                     {"inserted", r.inserted},
                     {"updated", r.updated}});
    }
  }
  std::cout << out.dump(2) << "\n";
  return 0;
}

int run_build(const std::string& config_path, const std::string& store_flag,
              const std::string& notify) {
  PipelineConfig config =
      config_path.empty() ? PipelineConfig{} : load_pipeline_config(config_path);
  Store store(resolve_store(store_flag, config));
  Corpus corpus = store.load_corpus();
  std::uint64_t version = store.current_version() + 1;
  spdlog::info("build: {} documents, corpus_version {}", corpus.size(), version);
  ModelSnapshot snapshot = build_snapshot(corpus, config, version);
  fs::path dir = store.install(snapshot);
  std::cout << nlohmann::json{{"snapshot", dir.string()},
                              {"corpus_version", version},
                              {"report", snapshot.build_report}}
                   .dump(2)
            << "\n";
  if (!notify.empty()) notify_reload(notify);
  return 0;
}

struct ServeArgs {
  std::string snapshot;
  std::string bind = "127.0.0.1:8080";
  std::string users;
  std::string static_dir;
  unsigned threads = 8;
};

int run_serve(const ServeArgs& a) {
  // Signals are handled on a dedicated thread; block them everywhere else.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  sigaddset(&signals, SIGHUP);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  std::string snapshot = a.snapshot;
  if (snapshot.empty()) {
    if (const char* env = std::getenv("LITATLAS_STORE")) snapshot = env;
  }
  if (snapshot.empty()) throw Error(ErrorCode::kInvalidArgument, "--snapshot is required");

  ServiceOptions options;
  options.snapshot_path = snapshot;
  if (!a.users.empty()) options.users_path = a.users;
  if (!a.static_dir.empty()) options.static_dir = a.static_dir;
  options.threads = a.threads;
  Service service(options);
  auto [host, port] = parse_bind(a.bind);
  int bound = service.bind(host, port);
  spdlog::info("serve: listening on http://{}:{}", host, bound);

  std::thread watcher([&] {
    for (;;) {
      int sig = 0;
      if (sigwait(&signals, &sig) != 0) continue;
      if (sig == SIGHUP) {
        try {
          service.reload();
          spdlog::info("serve: reloaded on SIGHUP");
        } catch (const Error& e) {
          spdlog::error("serve: reload failed, keeping current snapshot: {}", e.what());
        }
        continue;
      }
      service.stop();
      return;
    }
  });
  service.run();
  // run() can also return on a listen failure; wake the watcher.
  pthread_kill(watcher.native_handle(), SIGTERM);
  watcher.join();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"litatlas: literature map, search and recommendations"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "debug logging");

  IngestArgs ingest;
  auto* ing = app.add_subcommand("ingest", "fetch documents into the store");
  ing->add_option("--config", ingest.config, "pipeline config JSON")->check(CLI::ExistingFile);
  ing->add_option("--store", ingest.store, "store directory or file:// URL");
  ing->add_option("--replay", ingest.replay, "serve HTTP from a recorded fixture directory")
      ->check(CLI::ExistingDirectory);
  ing->add_option("--from-file", ingest.from_file, "import a local file instead of fetching")
      ->check(CLI::ExistingFile);
  ing->add_option("--format", ingest.format, "pubmed | arxiv | jsonl (with --from-file)");

  std::string build_config;
  std::string build_store;
  std::string notify;
  auto* bld = app.add_subcommand("build", "build and install a new snapshot");
  bld->add_option("--config", build_config, "pipeline config JSON")->check(CLI::ExistingFile);
  bld->add_option("--store", build_store, "store directory or file:// URL");
  bld->add_option("--notify", notify, "service base URL to reload afterwards");

  ServeArgs serve;
  auto* srv = app.add_subcommand("serve", "run the JSON API");
  srv->add_option("--snapshot", serve.snapshot, "store root or snapshot directory");
  srv->add_option("--bind", serve.bind, "host:port");
  srv->add_option("--users", serve.users, "users.jsonl path");
  srv->add_option("--static", serve.static_dir, "directory served at /")
      ->check(CLI::ExistingDirectory);
  srv->add_option("--threads", serve.threads, "worker threads");

  CLI11_PARSE(app, argc, argv);
  spdlog::set_default_logger(spdlog::stderr_color_mt("litatlas"));
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);

  try {
    if (*ing) return run_ingest(ingest);
    if (*bld) return run_build(build_config, build_store, notify);
    if (*srv) return run_serve(serve);
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return 2;
  }
  return 1;
}
