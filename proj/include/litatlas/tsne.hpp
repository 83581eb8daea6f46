#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "litatlas/error.hpp"
#include "litatlas/lsa.hpp"

namespace litatlas {

enum class TsneMethod { exact, barnes_hut };

/// Optimizer defaults follow the reference t-SNE implementation; only the
/// perplexity and the 2-D output are fixed by the application.
struct TsneConfig {
  double perplexity = 15.0;
  int n_iterations = 1000;
  double learning_rate = 200.0;
  double early_exaggeration_factor = 12.0;
  int early_exaggeration_iters = 250;
  double momentum_initial = 0.5;
  double momentum_final = 0.8;
  int momentum_switch_iter = 250;
  double init_std = 1e-4;
  std::uint64_t seed = 42;
  double calibration_tolerance = 1e-5;  // on log-perplexity (nats)
  int calibration_max_iters = 50;
  bool adaptive_gains = false;  // delta-bar-delta gains; oscillates late at small n
  double min_gain = 0.01;
  TsneMethod method = TsneMethod::exact;
  double theta = 0.5;  // Barnes-Hut opening angle
  unsigned threads = 0;  // 0 = hardware concurrency; results do not depend on it

  /// Throws Error(kInvalidArgument); `n_points` bounds the perplexity.
  void validate(std::size_t n_points) const;
  bool operator==(const TsneConfig&) const = default;
};

nlohmann::json to_json(const TsneConfig& config);
TsneConfig tsne_config_from_json(const nlohmann::json& j);

inline constexpr double kProbabilityFloor = 1e-12;

struct Calibration {
  double sigma = 0.0;
  std::vector<double> conditional;  // sums to 1
  double entropy = 0.0;             // natural log
  int iterations = 0;
  bool converged = false;
  bool degenerate = false;  // every distance was zero; row is uniform
};

/// Bisection on the Gaussian precision so that the entropy of
/// p_j = exp(-d_j / (2 sigma^2)) / Z is within `tolerance` of ln(perplexity).
/// `squared_distances` excludes the self-distance.
Calibration calibrate_sigma(std::span<const double> squared_distances, double perplexity,
                            double tolerance, int max_iters);

/// Dense symmetric joint probabilities, row-major n x n.
struct AffinityMatrix {
  std::size_t n = 0;
  std::vector<double> p;
  std::vector<double> sigmas;
  std::vector<std::size_t> flagged_rows;  // degenerate or not converged

  double operator()(std::size_t i, std::size_t j) const { return p[i * n + j]; }
};

/// Squared Euclidean distances, per-row calibration, symmetrization
/// (p_j|i + p_i|j) / 2n, floor at kProbabilityFloor, renormalization.
AffinityMatrix pairwise_affinities(std::span<const DenseVector> points, const TsneConfig& config);

/// Affinities restricted to the floor(3 * perplexity) nearest neighbors of
/// each point, stored as symmetric CSR.
struct SparseAffinity {
  std::size_t n = 0;
  std::vector<std::size_t> row_ptr;
  std::vector<std::size_t> col;
  std::vector<double> val;
  std::vector<double> sigmas;
  std::vector<std::size_t> flagged_rows;
};

SparseAffinity sparse_affinities(std::span<const DenseVector> points, const TsneConfig& config);
AffinityMatrix to_dense(const SparseAffinity& p);

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Point2&) const = default;
};

/// KL(P || Q) with Student-t Q computed from `coords`; q floored at
/// kProbabilityFloor. Throws Error(kDimensionMismatch).
double kl_divergence(const AffinityMatrix& p, std::span<const Point2> coords);

/// dKL/dy_i = 4 sum_j (e p_ij - q_ij) (1 + |y_i - y_j|^2)^-1 (y_i - y_j),
/// e = exaggeration.
std::vector<Point2> kl_gradient(const AffinityMatrix& p, std::span<const Point2> coords,
                                double exaggeration = 1.0, unsigned threads = 1);

/// Barnes-Hut approximation of the same gradient; theta = 0 is exact.
std::vector<Point2> kl_gradient_barnes_hut(const SparseAffinity& p, std::span<const Point2> coords,
                                           double theta, double exaggeration = 1.0);

struct EmbeddingResult {
  std::vector<std::string> doc_ids;  // aligned with coords; empty until labeled
  std::vector<Point2> coords;
  double final_kl = 0.0;
  std::vector<double> kl_trace;  // KL at the start of each iteration, un-exaggerated P
  TsneConfig config;
  std::vector<std::size_t> flagged_rows;

  bool operator==(const EmbeddingResult&) const = default;
};

/// Raised when a coordinate becomes non-finite; carries the trace so far.
class NumericalDivergence : public Error {
 public:
  NumericalDivergence(int iteration, std::vector<double> kl_trace);
  const std::vector<double>& kl_trace() const { return kl_trace_; }

 private:
  std::vector<double> kl_trace_;
};

/// Exact O(n^2) gradient descent with momentum, gains and early exaggeration.
/// Coordinates are mean-centered after every update.
EmbeddingResult run_tsne(const AffinityMatrix& p, const TsneConfig& config);

EmbeddingResult run_tsne_barnes_hut(const SparseAffinity& p, const TsneConfig& config);

/// Isotropic Gaussian start, std init_std, seeded.
std::vector<Point2> initial_coords(std::size_t n, const TsneConfig& config);

/// embedding.csv (doc_id,x,y) and embedding_diag.json.
std::string to_csv(const EmbeddingResult& result);
nlohmann::json diagnostics_json(const EmbeddingResult& result);
EmbeddingResult embedding_from_files(std::string_view csv, const nlohmann::json& diagnostics);

}  // namespace litatlas
