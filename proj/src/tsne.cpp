#include "litatlas/tsne.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "litatlas/parallel.hpp"
#include "litatlas/quadtree.hpp"

namespace litatlas {

namespace {

double squared_distance(const DenseVector& a, const DenseVector& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    double d = a[k] - b[k];
    s += d * d;
  }
  return s;
}

void check_points(std::span<const DenseVector> points) {
  for (const auto& v : points) {
    if (v.size() != points.front().size()) {
      throw Error(ErrorCode::kDimensionMismatch, "t-SNE input vectors differ in dimensionality");
    }
  }
}

void check_coords(std::size_t n, std::span<const Point2> coords) {
  if (coords.size() != n) {
    throw Error(ErrorCode::kDimensionMismatch,
                fmt::format("{} coordinates for a {}-point affinity matrix", coords.size(), n));
  }
}

std::string_view method_name(TsneMethod m) {
  return m == TsneMethod::exact ? "exact" : "barnes_hut";
}

TsneMethod parse_method(std::string_view s) {
  if (s == "exact") return TsneMethod::exact;
  if (s == "barnes_hut") return TsneMethod::barnes_hut;
  throw Error(ErrorCode::kInvalidArgument, fmt::format("unknown t-SNE method '{}'", s));
}

void center(std::vector<Point2>& y) {
  double mx = 0.0;
  double my = 0.0;
  for (const auto& p : y) {
    mx += p.x;
    my += p.y;
  }
  mx /= static_cast<double>(y.size());
  my /= static_cast<double>(y.size());
  for (auto& p : y) {
    p.x -= mx;
    p.y -= my;
  }
}

// Shared optimizer loop. `step` fills the gradient for the current
// coordinates and exaggeration and returns the un-exaggerated KL.
template <typename Step, typename FinalKl>
EmbeddingResult optimize(std::size_t n, const TsneConfig& config, Step&& step,
                         FinalKl&& final_kl, std::vector<std::size_t> flagged) {
  EmbeddingResult result;
  result.config = config;
  result.flagged_rows = std::move(flagged);
  result.coords = initial_coords(n, config);
  result.kl_trace.reserve(static_cast<std::size_t>(config.n_iterations));

  std::vector<Point2>& y = result.coords;
  std::vector<Point2> grad(n);
  std::vector<Point2> update(n);
  std::vector<Point2> gains(n, Point2{1.0, 1.0});

  auto adapt = [&](double g, double u, double& gain) {
    if (!config.adaptive_gains) return;
    gain = (g > 0.0) != (u > 0.0) ? gain + 0.2 : gain * 0.8;
    gain = std::max(gain, config.min_gain);
  };

  for (int iter = 0; iter < config.n_iterations; ++iter) {
    double exaggeration = iter < config.early_exaggeration_iters
                              ? config.early_exaggeration_factor
                              : 1.0;
    double momentum =
        iter < config.momentum_switch_iter ? config.momentum_initial : config.momentum_final;
    result.kl_trace.push_back(step(y, exaggeration, grad));

    bool finite = true;
    for (std::size_t i = 0; i < n; ++i) {
      adapt(grad[i].x, update[i].x, gains[i].x);
      adapt(grad[i].y, update[i].y, gains[i].y);
      update[i].x = momentum * update[i].x - config.learning_rate * gains[i].x * grad[i].x;
      update[i].y = momentum * update[i].y - config.learning_rate * gains[i].y * grad[i].y;
      y[i].x += update[i].x;
      y[i].y += update[i].y;
      finite = finite && std::isfinite(y[i].x) && std::isfinite(y[i].y);
    }
    if (!finite) throw NumericalDivergence(iter, result.kl_trace);
    center(y);
  }
  result.final_kl = final_kl(y);
  return result;
}

}  // namespace

void TsneConfig::validate(std::size_t n_points) const {
  auto fail = [](std::string msg) { throw Error(ErrorCode::kInvalidArgument, std::move(msg)); };
  if (!(perplexity > 0.0)) fail("perplexity must be positive");
  if (n_points > 0 && !(perplexity < static_cast<double>(n_points))) {
    fail(fmt::format("perplexity {} must be below the number of points {}", perplexity,
                     n_points));
  }
  if (n_iterations < 1) fail("n_iterations must be positive");
  if (!(learning_rate > 0.0)) fail("learning_rate must be positive");
  if (!(early_exaggeration_factor > 0.0)) fail("early_exaggeration_factor must be positive");
  if (early_exaggeration_iters < 0 || momentum_switch_iter < 0) {
    fail("iteration counts must be non-negative");
  }
  if (!(momentum_initial >= 0.0 && momentum_final >= 0.0)) fail("momentum must be non-negative");
  if (!(init_std > 0.0)) fail("init_std must be positive");
  if (!(calibration_tolerance > 0.0)) fail("calibration_tolerance must be positive");
  if (calibration_max_iters < 1) fail("calibration_max_iters must be positive");
  if (!(min_gain > 0.0)) fail("min_gain must be positive");
  if (!(theta >= 0.0 && theta <= 1.0)) fail("theta must be in [0, 1]");
}

nlohmann::json to_json(const TsneConfig& c) {
  return {{"perplexity", c.perplexity},
          {"n_iterations", c.n_iterations},
          {"learning_rate", c.learning_rate},
          {"early_exaggeration_factor", c.early_exaggeration_factor},
          {"early_exaggeration_iters", c.early_exaggeration_iters},
          {"momentum_initial", c.momentum_initial},
          {"momentum_final", c.momentum_final},
          {"momentum_switch_iter", c.momentum_switch_iter},
          {"init_std", c.init_std},
          {"seed", c.seed},
          {"calibration_tolerance", c.calibration_tolerance},
          {"calibration_max_iters", c.calibration_max_iters},
          {"adaptive_gains", c.adaptive_gains},
          {"min_gain", c.min_gain},
          {"method", method_name(c.method)},
          {"theta", c.theta},
          {"threads", c.threads}};
}

TsneConfig tsne_config_from_json(const nlohmann::json& j) {
  TsneConfig c;
  c.perplexity = j.value("perplexity", c.perplexity);
  c.n_iterations = j.value("n_iterations", c.n_iterations);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.early_exaggeration_factor = j.value("early_exaggeration_factor", c.early_exaggeration_factor);
  c.early_exaggeration_iters = j.value("early_exaggeration_iters", c.early_exaggeration_iters);
  c.momentum_initial = j.value("momentum_initial", c.momentum_initial);
  c.momentum_final = j.value("momentum_final", c.momentum_final);
  c.momentum_switch_iter = j.value("momentum_switch_iter", c.momentum_switch_iter);
  c.init_std = j.value("init_std", c.init_std);
  c.seed = j.value("seed", c.seed);
  c.calibration_tolerance = j.value("calibration_tolerance", c.calibration_tolerance);
  c.calibration_max_iters = j.value("calibration_max_iters", c.calibration_max_iters);
  c.adaptive_gains = j.value("adaptive_gains", c.adaptive_gains);
  c.min_gain = j.value("min_gain", c.min_gain);
  c.method = parse_method(j.value("method", std::string(method_name(c.method))));
  c.theta = j.value("theta", c.theta);
  c.threads = j.value("threads", c.threads);
  c.validate(0);
  return c;
}

Calibration calibrate_sigma(std::span<const double> squared_distances, double perplexity,
                            double tolerance, int max_iters) {
  const std::size_t m = squared_distances.size();
  if (m < 2) throw Error(ErrorCode::kInvalidArgument, "calibration row needs >= 2 distances");
  if (!(perplexity > 0.0) || !(perplexity < static_cast<double>(m) + 1.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("perplexity {} outside (0, {})", perplexity, m + 1));
  }

  Calibration out;
  out.conditional.assign(m, 0.0);
  const double d_min = *std::min_element(squared_distances.begin(), squared_distances.end());
  const double d_max = *std::max_element(squared_distances.begin(), squared_distances.end());
  if (d_max == 0.0) {
    std::fill(out.conditional.begin(), out.conditional.end(), 1.0 / static_cast<double>(m));
    out.entropy = std::log(static_cast<double>(m));
    out.sigma = std::numeric_limits<double>::infinity();
    out.degenerate = true;
    out.converged = std::abs(out.entropy - std::log(perplexity)) <= tolerance;
    return out;
  }

  const double target = std::log(perplexity);
  // Distances are shifted by d_min, which cancels in the normalization.
  auto evaluate = [&](double beta, std::vector<double>& row) {
    double z = 0.0;
    double weighted = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      double shifted = squared_distances[j] - d_min;
      row[j] = std::exp(-beta * shifted);
      z += row[j];
      weighted += row[j] * shifted;
    }
    for (auto& v : row) v /= z;
    return std::log(z) + beta * weighted / z;
  };

  // Start from the mean unshifted distance: finite and positive even when all
  // distances are equal.
  double mean = 0.0;
  for (double d : squared_distances) mean += d;
  mean /= static_cast<double>(m);

  double beta = 1.0 / mean;
  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();
  std::vector<double> row(m);
  double best_gap = std::numeric_limits<double>::infinity();

  for (int it = 1; it <= max_iters; ++it) {
    double h = evaluate(beta, row);
    double gap = h - target;
    out.iterations = it;
    if (std::abs(gap) < best_gap) {
      best_gap = std::abs(gap);
      out.conditional = row;
      out.entropy = h;
      out.sigma = std::sqrt(1.0 / (2.0 * beta));
    }
    if (std::abs(gap) <= tolerance) {
      out.converged = true;
      break;
    }
    if (gap > 0.0) {  // too flat: sharpen
      lo = beta;
      beta = std::isinf(hi) ? beta * 2.0 : (beta + hi) / 2.0;
    } else {
      hi = beta;
      beta = (beta + lo) / 2.0;
    }
  }
  return out;
}

AffinityMatrix pairwise_affinities(std::span<const DenseVector> points, const TsneConfig& config) {
  const std::size_t n = points.size();
  if (n < 3) throw Error(ErrorCode::kInvalidArgument, "t-SNE needs at least 3 points");
  check_points(points);
  config.validate(n);

  AffinityMatrix out;
  out.n = n;
  out.p.assign(n * n, 0.0);
  out.sigmas.assign(n, 0.0);
  std::vector<char> flagged(n, 0);

  parallel_for(n, config.threads, [&](std::size_t i) {
    std::vector<double> d;
    d.reserve(n - 1);
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) d.push_back(squared_distance(points[i], points[j]));
    }
    Calibration cal = calibrate_sigma(d, config.perplexity, config.calibration_tolerance,
                                      config.calibration_max_iters);
    out.sigmas[i] = cal.sigma;
    flagged[i] = cal.degenerate || !cal.converged;
    std::size_t k = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) out.p[i * n + j] = cal.conditional[k++];
    }
  });

  const double two_n = 2.0 * static_cast<double>(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double v = std::max((out.p[i * n + j] + out.p[j * n + i]) / two_n, kProbabilityFloor);
      out.p[i * n + j] = v;
      out.p[j * n + i] = v;
      total += 2.0 * v;
    }
  }
  for (auto& v : out.p) v /= total;

  for (std::size_t i = 0; i < n; ++i) {
    if (flagged[i]) out.flagged_rows.push_back(i);
  }
  if (!out.flagged_rows.empty()) {
    spdlog::warn("tsne: {} of {} rows missed the perplexity target or were degenerate",
                 out.flagged_rows.size(), n);
  }
  return out;
}

SparseAffinity sparse_affinities(std::span<const DenseVector> points, const TsneConfig& config) {
  const std::size_t n = points.size();
  if (n < 3) throw Error(ErrorCode::kInvalidArgument, "t-SNE needs at least 3 points");
  check_points(points);
  config.validate(n);
  const std::size_t k = std::min<std::size_t>(
      n - 1, std::max<std::size_t>(2, static_cast<std::size_t>(3.0 * config.perplexity)));
  if (!(config.perplexity < static_cast<double>(k) + 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "perplexity too large for the neighbor count");
  }

  std::vector<std::vector<std::size_t>> nbr(n);
  std::vector<std::vector<double>> cond(n);
  std::vector<double> sigmas(n);
  std::vector<char> flagged(n, 0);
  parallel_for(n, config.threads, [&](std::size_t i) {
    std::vector<std::pair<double, std::size_t>> d;
    d.reserve(n - 1);
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) d.emplace_back(squared_distance(points[i], points[j]), j);
    }
    std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
    std::vector<double> dist(k);
    nbr[i].resize(k);
    for (std::size_t t = 0; t < k; ++t) {
      dist[t] = d[t].first;
      nbr[i][t] = d[t].second;
    }
    Calibration cal = calibrate_sigma(dist, config.perplexity, config.calibration_tolerance,
                                      config.calibration_max_iters);
    sigmas[i] = cal.sigma;
    flagged[i] = cal.degenerate || !cal.converged;
    cond[i] = std::move(cal.conditional);
  });

  // Symmetrize via an ordered map per row: P = (C + C^T) / 2n.
  std::vector<std::vector<std::pair<std::size_t, double>>> rows(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t t = 0; t < k; ++t) {
      rows[i].emplace_back(nbr[i][t], cond[i][t]);
      rows[nbr[i][t]].emplace_back(i, cond[i][t]);
    }
  }
  SparseAffinity out;
  out.n = n;
  out.row_ptr.push_back(0);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    auto& r = rows[i];
    std::sort(r.begin(), r.end());
    for (std::size_t a = 0; a < r.size();) {
      std::size_t b = a;
      double s = 0.0;
      while (b < r.size() && r[b].first == r[a].first) s += r[b++].second;
      out.col.push_back(r[a].first);
      out.val.push_back(s / (2.0 * static_cast<double>(n)));
      total += out.val.back();
      a = b;
    }
    out.row_ptr.push_back(out.col.size());
  }
  for (auto& v : out.val) v /= total;
  out.sigmas = std::move(sigmas);
  for (std::size_t i = 0; i < n; ++i) {
    if (flagged[i]) out.flagged_rows.push_back(i);
  }
  return out;
}

AffinityMatrix to_dense(const SparseAffinity& p) {
  AffinityMatrix out;
  out.n = p.n;
  out.p.assign(p.n * p.n, 0.0);
  for (std::size_t i = 0; i < p.n; ++i) {
    for (std::size_t e = p.row_ptr[i]; e < p.row_ptr[i + 1]; ++e) out.p[i * p.n + p.col[e]] = p.val[e];
  }
  out.sigmas = p.sigmas;
  out.flagged_rows = p.flagged_rows;
  return out;
}

double kl_divergence(const AffinityMatrix& p, std::span<const Point2> coords) {
  const std::size_t n = p.n;
  check_coords(n, coords);
  std::vector<double> num(n * n, 0.0);
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      double dx = coords[i].x - coords[j].x;
      double dy = coords[i].y - coords[j].y;
      num[i * n + j] = 1.0 / (1.0 + dx * dx + dy * dy);
      z += num[i * n + j];
    }
  }
  double kl = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double pij = p.p[i * n + j];
      if (i == j || pij <= 0.0) continue;
      double q = std::max(num[i * n + j] / z, kProbabilityFloor);
      kl += pij * std::log(pij / q);
    }
  }
  return kl;
}

namespace {

// One exact pass: fills grad (if non-null) and returns the un-exaggerated KL.
double exact_step(const AffinityMatrix& p, std::span<const Point2> y, double exaggeration,
                  Point2* grad, unsigned threads) {
  const std::size_t n = p.n;
  std::vector<double> row_z(n, 0.0);
  parallel_for(n, threads, [&](std::size_t i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      double dx = y[i].x - y[j].x;
      double dy = y[i].y - y[j].y;
      s += 1.0 / (1.0 + dx * dx + dy * dy);
    }
    row_z[i] = s;
  });
  double z = 0.0;
  for (double s : row_z) z += s;

  std::vector<double> row_kl(n, 0.0);
  parallel_for(n, threads, [&](std::size_t i) {
    double gx = 0.0;
    double gy = 0.0;
    double kl = 0.0;
    const double* prow = p.p.data() + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      double dx = y[i].x - y[j].x;
      double dy = y[i].y - y[j].y;
      double num = 1.0 / (1.0 + dx * dx + dy * dy);
      double q = num / z;
      double mult = (exaggeration * prow[j] - q) * num;
      gx += mult * dx;
      gy += mult * dy;
      if (prow[j] > 0.0) kl += prow[j] * std::log(prow[j] / std::max(q, kProbabilityFloor));
    }
    if (grad != nullptr) grad[i] = {4.0 * gx, 4.0 * gy};
    row_kl[i] = kl;
  });
  double kl = 0.0;
  for (double v : row_kl) kl += v;
  return kl;
}

double barnes_hut_step(const SparseAffinity& p, std::span<const Point2> y, double theta,
                       double exaggeration, Point2* grad) {
  const std::size_t n = p.n;
  QuadTree tree(y);
  std::vector<Point2> rep(n);
  std::vector<double> row_z(n);
  for (std::size_t i = 0; i < n; ++i) row_z[i] = tree.repulsion(i, theta, rep[i]);
  double z = 0.0;
  for (double s : row_z) z += s;

  double kl = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double ax = 0.0;
    double ay = 0.0;
    for (std::size_t e = p.row_ptr[i]; e < p.row_ptr[i + 1]; ++e) {
      std::size_t j = p.col[e];
      double dx = y[i].x - y[j].x;
      double dy = y[i].y - y[j].y;
      double num = 1.0 / (1.0 + dx * dx + dy * dy);
      double mult = exaggeration * p.val[e] * num;
      ax += mult * dx;
      ay += mult * dy;
      double q = std::max(num / z, kProbabilityFloor);
      kl += p.val[e] * std::log(p.val[e] / q);
    }
    if (grad != nullptr) grad[i] = {4.0 * (ax - rep[i].x / z), 4.0 * (ay - rep[i].y / z)};
  }
  return kl;
}

}  // namespace

std::vector<Point2> kl_gradient(const AffinityMatrix& p, std::span<const Point2> coords,
                                double exaggeration, unsigned threads) {
  check_coords(p.n, coords);
  std::vector<Point2> grad(p.n);
  exact_step(p, coords, exaggeration, grad.data(), threads);
  return grad;
}

std::vector<Point2> kl_gradient_barnes_hut(const SparseAffinity& p, std::span<const Point2> coords,
                                           double theta, double exaggeration) {
  check_coords(p.n, coords);
  std::vector<Point2> grad(p.n);
  barnes_hut_step(p, coords, theta, exaggeration, grad.data());
  return grad;
}

NumericalDivergence::NumericalDivergence(int iteration, std::vector<double> kl_trace)
    : Error(ErrorCode::kNumericalDivergence,
            fmt::format("non-finite coordinate at iteration {}", iteration)),
      kl_trace_(std::move(kl_trace)) {}

std::vector<Point2> initial_coords(std::size_t n, const TsneConfig& config) {
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, config.init_std);
  std::vector<Point2> y(n);
  for (auto& p : y) {
    p.x = normal(rng);
    p.y = normal(rng);
  }
  return y;
}

EmbeddingResult run_tsne(const AffinityMatrix& p, const TsneConfig& config) {
  config.validate(p.n);
  return optimize(
      p.n, config,
      [&](const std::vector<Point2>& y, double ex, std::vector<Point2>& grad) {
        return exact_step(p, y, ex, grad.data(), config.threads);
      },
      [&](const std::vector<Point2>& y) { return kl_divergence(p, y); }, p.flagged_rows);
}

EmbeddingResult run_tsne_barnes_hut(const SparseAffinity& p, const TsneConfig& config) {
  config.validate(p.n);
  return optimize(
      p.n, config,
      [&](const std::vector<Point2>& y, double ex, std::vector<Point2>& grad) {
        return barnes_hut_step(p, y, config.theta, ex, grad.data());
      },
      [&](const std::vector<Point2>& y) {
        return barnes_hut_step(p, y, config.theta, 1.0, nullptr);
      },
      p.flagged_rows);
}

std::string to_csv(const EmbeddingResult& result) {
  std::string out = "doc_id,x,y\n";
  for (std::size_t i = 0; i < result.coords.size(); ++i) {
    out += fmt::format("{},{:.17g},{:.17g}\n", result.doc_ids.at(i), result.coords[i].x,
                       result.coords[i].y);
  }
  return out;
}

nlohmann::json diagnostics_json(const EmbeddingResult& result) {
  return {{"final_kl", result.final_kl},
          {"flagged_rows", result.flagged_rows},
          {"config", to_json(result.config)},
          {"kl_trace", result.kl_trace}};
}

EmbeddingResult embedding_from_files(std::string_view csv, const nlohmann::json& diagnostics) {
  EmbeddingResult r;
  std::istringstream in{std::string(csv)};
  std::string line;
  if (!std::getline(in, line) || line != "doc_id,x,y") {
    throw Error(ErrorCode::kCorruptSnapshot, "embedding.csv: missing doc_id,x,y header");
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto c2 = line.rfind(',');
    auto c1 = c2 == std::string::npos ? c2 : line.rfind(',', c2 - 1);
    if (c1 == std::string::npos) {
      throw Error(ErrorCode::kCorruptSnapshot, "embedding.csv: bad row '" + line + "'");
    }
    r.doc_ids.push_back(line.substr(0, c1));
    try {
      r.coords.push_back({std::stod(line.substr(c1 + 1, c2 - c1 - 1)), std::stod(line.substr(c2 + 1))});
    } catch (const std::exception&) {
      throw Error(ErrorCode::kCorruptSnapshot, "embedding.csv: bad number in '" + line + "'");
    }
  }
  r.final_kl = diagnostics.at("final_kl").get<double>();
  r.flagged_rows = diagnostics.at("flagged_rows").get<std::vector<std::size_t>>();
  r.config = tsne_config_from_json(diagnostics.at("config"));
  r.kl_trace = diagnostics.at("kl_trace").get<std::vector<double>>();
  return r;
}

}  // namespace litatlas
