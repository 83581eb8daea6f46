#include <curl/curl.h>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "litatlas/error.hpp"
#include "litatlas/fsutil.hpp"
#include "litatlas/ingest.hpp"

namespace litatlas {

namespace {

std::size_t append_body(char* data, std::size_t size, std::size_t count, void* user) {
  static_cast<std::string*>(user)->append(data, size * count);
  return size * count;
}

struct CurlGlobal {
  CurlGlobal() { curl_global_init(CURL_GLOBAL_DEFAULT); }
  ~CurlGlobal() { curl_global_cleanup(); }
};

}  // namespace

CurlTransport::CurlTransport(std::chrono::seconds timeout, std::string user_agent)
    : timeout_(timeout), user_agent_(std::move(user_agent)) {
  static CurlGlobal global;
}

HttpResponse CurlTransport::get(const std::string& url) {
  std::unique_ptr<CURL, decltype(&curl_easy_cleanup)> curl(curl_easy_init(), curl_easy_cleanup);
  if (!curl) return {};
  HttpResponse response;
  curl_easy_setopt(curl.get(), CURLOPT_URL, url.c_str());
  curl_easy_setopt(curl.get(), CURLOPT_FOLLOWLOCATION, 1L);
  curl_easy_setopt(curl.get(), CURLOPT_TIMEOUT, static_cast<long>(timeout_.count()));
  curl_easy_setopt(curl.get(), CURLOPT_USERAGENT, user_agent_.c_str());
  curl_easy_setopt(curl.get(), CURLOPT_WRITEFUNCTION, append_body);
  curl_easy_setopt(curl.get(), CURLOPT_WRITEDATA, &response.body);
  if (curl_easy_perform(curl.get()) != CURLE_OK) return {};
  long status = 0;
  curl_easy_getinfo(curl.get(), CURLINFO_RESPONSE_CODE, &status);
  response.status = static_cast<int>(status);
  return response;
}

ReplayTransport::ReplayTransport(const std::filesystem::path& fixture_dir) {
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(fsutil::read_file(fixture_dir / "responses.json"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("{}: bad responses.json: {}", fixture_dir.string(), e.what()));
  }
  for (const auto& e : manifest) {
    Entry entry;
    entry.match = e.at("match").get<std::string>();
    entry.response.status = e.value("status", 200);
    if (e.contains("file")) {
      entry.response.body = fsutil::read_file(fixture_dir / e["file"].get<std::string>());
    }
    entries_.push_back(std::move(entry));
  }
}

HttpResponse ReplayTransport::get(const std::string& url) {
  requested_.push_back(url);
  for (auto& e : entries_) {
    if (!e.used && url.find(e.match) != std::string::npos) {
      e.used = true;
      return e.response;
    }
  }
  return {404, "no recorded response"};
}

}  // namespace litatlas
