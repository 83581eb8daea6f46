#include "litatlas/lsa.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <Eigen/Sparse>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "litatlas/error.hpp"

namespace litatlas {

namespace {

using Matrix = Eigen::MatrixXd;
using SparseRows = Eigen::SparseMatrix<double, Eigen::RowMajor>;

constexpr std::size_t kResidualCheckInterval = 4;

SparseRows assemble(std::span<const SparseVector> rows, std::size_t dim) {
  std::vector<Eigen::Triplet<double>> triplets;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].dimensionality != dim) {
      throw Error(ErrorCode::kDimensionMismatch,
                  fmt::format("row {} has dimensionality {}, expected {}", r,
                              rows[r].dimensionality, dim));
    }
    for (const auto& e : rows[r].entries) {
      triplets.emplace_back(static_cast<int>(r), static_cast<int>(e.index), e.weight);
    }
  }
  SparseRows a(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dim));
  a.setFromTriplets(triplets.begin(), triplets.end());
  a.makeCompressed();
  return a;
}

Matrix orthonormalize(const Matrix& y) {
  Eigen::HouseholderQR<Matrix> qr(y);
  return qr.householderQ() * Matrix::Identity(y.rows(), y.cols());
}

struct Triplets {
  Matrix u;  // n x l
  Eigen::VectorXd s;
  Matrix v;  // V x l
};

// Rayleigh-Ritz: exact SVD of the projection Q^T A.
Triplets rayleigh_ritz(const SparseRows& a, const Matrix& q) {
  Matrix bt = a.transpose() * q;  // V x l, equals (Q^T A)^T
  Eigen::BDCSVD<Matrix> svd(bt, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return {q * svd.matrixV(), svd.singularValues(), svd.matrixU()};
}

std::size_t numerical_rank(const Eigen::VectorXd& s, std::size_t k, double tol) {
  if (s.size() == 0 || s(0) <= 0.0) return 0;
  std::size_t r = 0;
  while (r < k && r < static_cast<std::size_t>(s.size()) && s(static_cast<Eigen::Index>(r)) > tol * s(0)) {
    ++r;
  }
  return r;
}

double max_residual(const SparseRows& a, const Triplets& t, std::size_t k) {
  if (k == 0) return 0.0;
  Matrix av = a * t.v.leftCols(static_cast<Eigen::Index>(k));
  double worst = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    auto col = static_cast<Eigen::Index>(i);
    double r = (av.col(col) - t.s(col) * t.u.col(col)).norm() / t.s(col);
    worst = std::max(worst, r);
  }
  return worst;
}

}  // namespace

nlohmann::json to_json(const LsaOptions& o) {
  return {{"n_components", o.n_components},
          {"oversampling", o.oversampling},
          {"power_iterations", o.power_iterations},
          {"seed", o.seed},
          {"residual_tolerance", o.residual_tolerance},
          {"max_power_iterations", o.max_power_iterations},
          {"rank_tolerance", o.rank_tolerance}};
}

LsaOptions lsa_options_from_json(const nlohmann::json& j) {
  LsaOptions o;
  o.n_components = j.value("n_components", o.n_components);
  o.oversampling = j.value("oversampling", o.oversampling);
  o.power_iterations = j.value("power_iterations", o.power_iterations);
  o.seed = j.value("seed", o.seed);
  o.residual_tolerance = j.value("residual_tolerance", o.residual_tolerance);
  o.max_power_iterations = j.value("max_power_iterations", o.max_power_iterations);
  o.rank_tolerance = j.value("rank_tolerance", o.rank_tolerance);
  return o;
}

nlohmann::json to_json(const LsaReport& r) {
  return {{"requested_components", r.requested_components},
          {"retained_components", r.retained_components},
          {"rank_deficient", r.rank_deficient},
          {"power_iterations", r.power_iterations},
          {"max_relative_residual", r.max_relative_residual},
          {"converged", r.converged}};
}

LsaFit fit_lsa(std::span<const SparseVector> rows, const LsaOptions& options) {
  if (rows.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "LSA needs at least 2 documents");
  }
  const std::size_t dim = rows.front().dimensionality;
  const std::size_t n = rows.size();
  const std::size_t k = options.n_components;
  if (k == 0 || k > std::min(n, dim)) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("n_components {} must be in [1, min({}, {})]", k, n, dim));
  }

  SparseRows a = assemble(rows, dim);
  const std::size_t l = std::min(k + options.oversampling, std::min(n, dim));

  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal;
  Matrix omega(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(l));
  for (Eigen::Index c = 0; c < omega.cols(); ++c) {
    for (Eigen::Index r = 0; r < omega.rows(); ++r) omega(r, c) = normal(rng);
  }

  Matrix q = orthonormalize(a * omega);
  auto power_step = [&] {
    Matrix z = orthonormalize(a.transpose() * q);
    q = orthonormalize(a * z);
  };

  LsaReport report;
  report.requested_components = k;
  for (std::size_t i = 0; i < options.power_iterations; ++i) power_step();
  report.power_iterations = options.power_iterations;

  Triplets t = rayleigh_ritz(a, q);
  std::size_t rank = numerical_rank(t.s, k, options.rank_tolerance);
  double residual = max_residual(a, t, rank);
  while (residual > options.residual_tolerance &&
         report.power_iterations < options.max_power_iterations) {
    for (std::size_t i = 0; i < kResidualCheckInterval; ++i) power_step();
    report.power_iterations += kResidualCheckInterval;
    t = rayleigh_ritz(a, q);
    rank = numerical_rank(t.s, k, options.rank_tolerance);
    residual = max_residual(a, t, rank);
  }
  report.max_relative_residual = residual;
  report.converged = residual <= options.residual_tolerance;
  report.retained_components = rank;
  report.rank_deficient = rank < k;

  if (!report.converged) {
    spdlog::warn("lsa: max relative residual {:.3e} after {} power iterations exceeds {:.1e}",
                 residual, report.power_iterations, options.residual_tolerance);
  }
  if (report.rank_deficient) {
    spdlog::warn("lsa: matrix has numerical rank {} < requested {} components; truncating", rank,
                 k);
  }

  LsaModel model;
  model.dimensionality = dim;
  model.singular_values.resize(rank);
  model.components.resize(rank * dim);
  for (std::size_t i = 0; i < rank; ++i) {
    auto col = static_cast<Eigen::Index>(i);
    Eigen::Index arg = 0;
    t.v.col(col).cwiseAbs().maxCoeff(&arg);
    double sign = t.v(arg, col) < 0.0 ? -1.0 : 1.0;
    model.singular_values[i] = t.s(col);
    for (std::size_t j = 0; j < dim; ++j) {
      model.components[i * dim + j] = sign * t.v(static_cast<Eigen::Index>(j), col);
    }
  }
  return {std::move(model), report};
}

DenseVector project(const LsaModel& model, const SparseVector& v) {
  if (v.dimensionality != model.dimensionality) {
    throw Error(ErrorCode::kDimensionMismatch,
                fmt::format("vector dimensionality {} != model dimensionality {}",
                            v.dimensionality, model.dimensionality));
  }
  DenseVector out(model.n_components(), 0.0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double* row = model.components.data() + i * model.dimensionality;
    double s = 0.0;
    for (const auto& e : v.entries) s += row[e.index] * e.weight;
    out[i] = s;
  }
  return out;
}

}  // namespace litatlas
