#pragma once

#include <cstdint>

#include "litatlas/config.hpp"
#include "litatlas/document.hpp"
#include "litatlas/snapshot.hpp"

namespace litatlas {

/// Runs textpipe, LSA, similarity graph, t-SNE and index construction over
/// `corpus`. Deterministic for a fixed config apart from build_timestamp.
/// Throws Error(kEmptyCorpus) for an empty corpus and Error(kInvalidArgument)
/// for fewer than 3 documents or an empty vocabulary. Component count and
/// perplexity are clamped for small corpora; the clamps land in build_report.
ModelSnapshot build_snapshot(const Corpus& corpus, const PipelineConfig& config,
                             std::uint64_t corpus_version, Timestamp build_timestamp = utc_now());

}  // namespace litatlas
