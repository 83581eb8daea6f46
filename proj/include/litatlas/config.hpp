#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "litatlas/ingest.hpp"
#include "litatlas/lsa.hpp"
#include "litatlas/textpipe.hpp"
#include "litatlas/tsne.hpp"

namespace litatlas {

/// Everything that determines a build. The LSA component count and
/// perplexity defaults (150, 15) are the application's tuned values.
struct PipelineConfig {
  TokenizerConfig tokenizer;
  std::size_t lsa_components = 150;
  LsaOptions lsa;  // lsa.n_components is ignored; lsa_components decides
  TsneConfig tsne;
  std::size_t k_neighbors = 20;
  std::vector<SourceQuery> sources;
  std::string store;  // store directory; LITATLAS_STORE overrides

  void validate() const;
  bool operator==(const PipelineConfig&) const = default;
};

nlohmann::json to_json(const PipelineConfig& config);
PipelineConfig pipeline_config_from_json(const nlohmann::json& j);

/// Reads a JSON config file; relative `store` paths resolve against the
/// config file's directory.
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

}  // namespace litatlas
