#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "litatlas/textpipe.hpp"

namespace litatlas {

/// A document's coordinates in LSA space.
using DenseVector = std::vector<double>;

/// Truncated SVD factors of the document-term matrix: k right-singular
/// vectors (rows of `components`, row-major k x V) and their singular values.
struct LsaModel {
  std::size_t dimensionality = 0;  // V
  std::vector<double> components;
  std::vector<double> singular_values;

  std::size_t n_components() const { return singular_values.size(); }
  std::span<const double> component(std::size_t i) const {
    return {components.data() + i * dimensionality, dimensionality};
  }

  bool operator==(const LsaModel&) const = default;
};

struct LsaOptions {
  std::size_t n_components = 150;
  std::size_t oversampling = 10;
  std::size_t power_iterations = 2;
  std::uint64_t seed = 42;
  // Subspace iteration continues past `power_iterations` until every kept
  // triplet satisfies |A v - s u| / s <= residual_tolerance.
  double residual_tolerance = 1e-6;
  std::size_t max_power_iterations = 300;
  // Singular values at or below rank_tolerance * s_max count as zero.
  double rank_tolerance = 1e-10;

  bool operator==(const LsaOptions&) const = default;
};

nlohmann::json to_json(const LsaOptions& options);
LsaOptions lsa_options_from_json(const nlohmann::json& j);

struct LsaReport {
  std::size_t requested_components = 0;
  std::size_t retained_components = 0;
  bool rank_deficient = false;
  std::size_t power_iterations = 0;
  double max_relative_residual = 0.0;
  bool converged = true;
};

nlohmann::json to_json(const LsaReport& report);

struct LsaFit {
  LsaModel model;
  LsaReport report;
};

/// Top-k singular triplets of the matrix whose rows are `rows`, by a seeded
/// randomized range finder followed by subspace iteration. No centering.
/// Requires >= 2 rows and n_components <= min(rows, V); a numerically
/// rank-deficient matrix is truncated to its rank and flagged in the report.
LsaFit fit_lsa(std::span<const SparseVector> rows, const LsaOptions& options);

/// components * v. Throws Error(kDimensionMismatch).
DenseVector project(const LsaModel& model, const SparseVector& v);

}  // namespace litatlas
