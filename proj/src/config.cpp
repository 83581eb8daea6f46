#include "litatlas/config.hpp"

#include <fmt/format.h>

#include "litatlas/error.hpp"
#include "litatlas/fsutil.hpp"

namespace litatlas {

namespace {

// nlohmann converts negative integers to huge unsigned values; reject them.
std::size_t count(const nlohmann::json& j, const char* key, std::size_t fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_number_unsigned()) {
    throw Error(ErrorCode::kInvalidArgument, fmt::format("{} must be a non-negative integer", key));
  }
  return v.get<std::size_t>();
}

}  // namespace

void PipelineConfig::validate() const {
  tokenizer.validate();
  tsne.validate(0);
  if (lsa_components < 1) throw Error(ErrorCode::kInvalidArgument, "lsa_components must be >= 1");
  if (k_neighbors < 1) throw Error(ErrorCode::kInvalidArgument, "k_neighbors must be >= 1");
}

nlohmann::json to_json(const PipelineConfig& c) {
  nlohmann::json sources = nlohmann::json::array();
  for (const auto& q : c.sources) sources.push_back(to_json(q));
  return {{"tokenizer", to_json(c.tokenizer)},
          {"lsa_components", c.lsa_components},
          {"lsa", to_json(c.lsa)},
          {"tsne", to_json(c.tsne)},
          {"k_neighbors", c.k_neighbors},
          {"sources", std::move(sources)},
          {"store", c.store}};
}

PipelineConfig pipeline_config_from_json(const nlohmann::json& j) {
  PipelineConfig c;
  try {
    if (j.contains("tokenizer")) c.tokenizer = tokenizer_config_from_json(j["tokenizer"]);
    c.lsa_components = count(j, "lsa_components", c.lsa_components);
    if (j.contains("lsa")) c.lsa = lsa_options_from_json(j["lsa"]);
    if (j.contains("tsne")) c.tsne = tsne_config_from_json(j["tsne"]);
    c.k_neighbors = count(j, "k_neighbors", c.k_neighbors);
    if (j.contains("sources")) {
      for (const auto& s : j["sources"]) c.sources.push_back(source_query_from_json(s));
    }
    c.store = j.value("store", c.store);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("bad pipeline config: ") + e.what());
  }
  c.validate();
  return c;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(fsutil::read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kInvalidArgument, fmt::format("{}: {}", path.string(), e.what()));
  }
  PipelineConfig c = pipeline_config_from_json(j);
  if (!c.store.empty() && std::filesystem::path(c.store).is_relative()) {
    c.store = (path.parent_path() / c.store).lexically_normal().string();
  }
  return c;
}

}  // namespace litatlas
