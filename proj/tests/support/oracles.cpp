#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace oracle {

using litatlas::Neighbor;
using litatlas::Point2;

namespace {

bool before(const Neighbor& a, const Neighbor& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.doc_id < b.doc_id;
}

Matrix transpose(const Matrix& a) {
  if (a.empty()) return {};
  Matrix t(a[0].size(), std::vector<double>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < a[0].size(); ++j) t[j][i] = a[i][j];
  }
  return t;
}

// Reflects x (given as a strided view) onto alpha * e1; returns v with |v| = 1
// or an empty vector when x is already zero below its head.
std::vector<double> householder(const std::vector<double>& x) {
  double norm = 0.0;
  for (double v : x) norm += v * v;
  norm = std::sqrt(norm);
  if (norm == 0.0) return {};
  std::vector<double> v = x;
  double alpha = x[0] >= 0.0 ? -norm : norm;
  v[0] -= alpha;
  double vn = 0.0;
  for (double e : v) vn += e * e;
  vn = std::sqrt(vn);
  if (vn == 0.0) return {};
  for (double& e : v) e /= vn;
  return v;
}

// Number of eigenvalues below x of the symmetric tridiagonal with zero
// diagonal and off-diagonal b.
std::size_t count_below(const std::vector<double>& b, double x) {
  const double tiny = std::numeric_limits<double>::min();
  std::size_t count = 0;
  double q = -x;
  if (q == 0.0) q = -tiny;
  if (q < 0.0) ++count;
  for (double bi : b) {
    q = -x - bi * bi / q;
    if (q == 0.0) q = -tiny;
    if (q < 0.0) ++count;
  }
  return count;
}

}  // namespace

double idf(std::size_t corpus_size, std::size_t df) {
  long double r = static_cast<long double>(corpus_size) / static_cast<long double>(df);
  return static_cast<double>(std::log(r));
}

std::vector<double> golub_kahan_singular_values(const Matrix& input) {
  Matrix a = input;
  if (a.empty() || a[0].empty()) return {};
  if (a.size() < a[0].size()) a = transpose(a);
  const std::size_t m = a.size();
  const std::size_t n = a[0].size();

  for (std::size_t k = 0; k < n; ++k) {
    std::vector<double> col(m - k);
    for (std::size_t i = k; i < m; ++i) col[i - k] = a[i][k];
    if (auto v = householder(col); !v.empty()) {
      for (std::size_t j = k; j < n; ++j) {
        double s = 0.0;
        for (std::size_t i = k; i < m; ++i) s += v[i - k] * a[i][j];
        for (std::size_t i = k; i < m; ++i) a[i][j] -= 2.0 * v[i - k] * s;
      }
    }
    if (k + 1 < n) {
      std::vector<double> row(a[k].begin() + static_cast<std::ptrdiff_t>(k + 1), a[k].end());
      if (auto v = householder(row); !v.empty()) {
        for (std::size_t i = k; i < m; ++i) {
          double s = 0.0;
          for (std::size_t j = k + 1; j < n; ++j) s += a[i][j] * v[j - k - 1];
          for (std::size_t j = k + 1; j < n; ++j) a[i][j] -= 2.0 * s * v[j - k - 1];
        }
      }
    }
  }

  std::vector<double> b;
  for (std::size_t k = 0; k < n; ++k) {
    b.push_back(a[k][k]);
    if (k + 1 < n) b.push_back(a[k][k + 1]);
  }
  double bound = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    double left = i > 0 ? std::abs(b[i - 1]) : 0.0;
    bound = std::max(bound, std::abs(b[i]) + left);
  }
  bound = std::max(bound, std::abs(b.back())) * 1.01 + 1e-300;

  const std::size_t size = 2 * n;
  std::vector<double> sigma(n);
  for (std::size_t i = 0; i < n; ++i) {
    // The (size - 1 - i)-th smallest eigenvalue, 0-based.
    std::size_t target = size - 1 - i;
    double lo = -bound;
    double hi = bound;
    for (int it = 0; it < 2000 && hi - lo > 0.0; ++it) {
      double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      if (count_below(b, mid) > target) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
    sigma[i] = std::max(0.0, 0.5 * (lo + hi));
  }
  return sigma;
}

JacobiSvd jacobi_svd(const Matrix& input) {
  Matrix a = input;  // columns are rotated in place
  const std::size_t m = a.size();
  const std::size_t n = m == 0 ? 0 : a[0].size();
  Matrix v(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) v[i][i] = 1.0;

  for (int sweep = 0; sweep < 100; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double alpha = 0.0;
        double beta = 0.0;
        double gamma = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          alpha += a[i][p] * a[i][p];
          beta += a[i][q] * a[i][q];
          gamma += a[i][p] * a[i][q];
        }
        if (gamma == 0.0 || std::abs(gamma) <= 1e-15 * std::sqrt(alpha * beta)) continue;
        rotated = true;
        double zeta = (beta - alpha) / (2.0 * gamma);
        double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        double c = 1.0 / std::sqrt(1.0 + t * t);
        double s = c * t;
        for (std::size_t i = 0; i < m; ++i) {
          double x = a[i][p];
          double y = a[i][q];
          a[i][p] = c * x - s * y;
          a[i][q] = s * x + c * y;
        }
        for (std::size_t i = 0; i < n; ++i) {
          double x = v[i][p];
          double y = v[i][q];
          v[i][p] = c * x - s * y;
          v[i][q] = s * x + c * y;
        }
      }
    }
    if (!rotated) break;
  }

  std::vector<double> norms(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < m; ++i) norms[j] += a[i][j] * a[i][j];
    norms[j] = std::sqrt(norms[j]);
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return norms[x] > norms[y]; });

  JacobiSvd out;
  const std::size_t r = std::min(m, n);
  out.u.assign(m, std::vector<double>(r, 0.0));
  for (std::size_t k = 0; k < r; ++k) {
    std::size_t j = order[k];
    out.sigma.push_back(norms[j]);
    std::vector<double> row(n);
    for (std::size_t i = 0; i < n; ++i) row[i] = v[i][j];
    out.v.push_back(std::move(row));
    for (std::size_t i = 0; i < m; ++i) out.u[i][k] = norms[j] > 0.0 ? a[i][j] / norms[j] : 0.0;
  }
  return out;
}

Matrix dense(std::span<const litatlas::SparseVector> rows, std::size_t dimensionality) {
  Matrix m(rows.size(), std::vector<double>(dimensionality, 0.0));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (const auto& e : rows[i].entries) m[i].at(e.index) = e.weight;
  }
  return m;
}

TfidfModel tfidf(const std::map<std::string, std::vector<std::string>>& tokens,
                 std::size_t min_df, double max_df_fraction) {
  const std::size_t corpus = tokens.size();
  std::map<std::string, std::size_t> df;
  for (const auto& [doc, toks] : tokens) {
    std::map<std::string, int> seen;
    for (const auto& t : toks) seen[t] = 1;
    for (const auto& [t, one] : seen) df[t] += 1;
  }
  TfidfModel model;
  for (const auto& [t, count] : df) {
    if (count < min_df) continue;
    if (static_cast<double>(count) > max_df_fraction * static_cast<double>(corpus)) continue;
    model.idf[t] = idf(corpus, count);
  }
  for (const auto& [doc, toks] : tokens) model.vectors[doc] = query_vector(toks, model.idf);
  return model;
}

std::map<std::string, double> query_vector(const std::vector<std::string>& tokens,
                                           const std::map<std::string, double>& idf_by_term) {
  std::map<std::string, double> tf;
  for (const auto& t : tokens) {
    if (idf_by_term.count(t)) tf[t] += 1.0;
  }
  std::map<std::string, double> w;
  double norm = 0.0;
  for (const auto& [t, c] : tf) {
    double x = c * idf_by_term.at(t);
    if (x == 0.0) continue;
    w[t] = x;
    norm += x * x;
  }
  norm = std::sqrt(norm);
  for (auto& [t, x] : w) x /= norm;
  return w;
}

double dot(const std::map<std::string, double>& a, const std::map<std::string, double>& b) {
  double s = 0.0;
  for (const auto& [t, x] : a) {
    auto it = b.find(t);
    if (it != b.end()) s += x * it->second;
  }
  return s;
}

std::vector<Neighbor> brute_force_search(
    const std::map<std::string, std::map<std::string, double>>& docs,
    const std::map<std::string, double>& query) {
  std::vector<Neighbor> out;
  double qn = std::sqrt(dot(query, query));
  for (const auto& [id, v] : docs) {
    double dn = std::sqrt(dot(v, v));
    if (qn == 0.0 || dn == 0.0) continue;
    double score = dot(query, v) / (qn * dn);
    if (score > 0.0) out.push_back({id, score});
  }
  std::sort(out.begin(), out.end(), before);
  return out;
}

std::vector<Neighbor> brute_force_neighbors(
    const std::map<std::string, std::vector<double>>& vectors, const std::string& doc_id,
    std::size_t k) {
  const auto& a = vectors.at(doc_id);
  std::vector<Neighbor> all;
  for (const auto& [id, b] : vectors) {
    if (id == doc_id) continue;
    long double ab = 0;
    long double aa = 0;
    long double bb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      ab += static_cast<long double>(a[i]) * b[i];
      aa += static_cast<long double>(a[i]) * a[i];
      bb += static_cast<long double>(b[i]) * b[i];
    }
    double s = (aa == 0 || bb == 0) ? 0.0 : static_cast<double>(ab / std::sqrt(aa * bb));
    all.push_back({id, s});
  }
  std::sort(all.begin(), all.end(), before);
  if (all.size() > k) all.resize(k);
  return all;
}

std::vector<Neighbor> brute_force_recommend(const litatlas::UserProfile& profile,
                                            const litatlas::SimilarityGraph& graph,
                                            std::size_t n) {
  std::map<std::string, double> best;
  for (const auto& [source, rating] : profile.ratings) {
    if (rating.verdict != litatlas::Verdict::relevant) continue;
    auto it = graph.neighbors.find(source);
    if (it == graph.neighbors.end()) continue;
    for (const auto& cand : it->second) {
      if (profile.ratings.count(cand.doc_id)) continue;
      auto [pos, inserted] = best.emplace(cand.doc_id, cand.score);
      if (!inserted) pos->second = std::max(pos->second, cand.score);
    }
  }
  std::vector<Neighbor> out;
  for (const auto& [id, s] : best) out.push_back({id, s});
  std::sort(out.begin(), out.end(), before);
  if (out.size() > n) out.resize(n);
  return out;
}

double kl(const litatlas::AffinityMatrix& p, std::span<const Point2> y) {
  const std::size_t n = p.n;
  long double z = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      long double dx = y[i].x - y[j].x;
      long double dy = y[i].y - y[j].y;
      z += 1.0L / (1.0L + dx * dx + dy * dy);
    }
  }
  long double total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      long double pij = p.p[i * n + j];
      if (pij <= 0) continue;
      long double dx = y[i].x - y[j].x;
      long double dy = y[i].y - y[j].y;
      long double q = (1.0L / (1.0L + dx * dx + dy * dy)) / z;
      q = std::max(q, static_cast<long double>(litatlas::kProbabilityFloor));
      total += pij * std::log(pij / q);
    }
  }
  return static_cast<double>(total);
}

std::vector<Point2> finite_difference_gradient(const litatlas::AffinityMatrix& p,
                                               std::span<const Point2> y, double eps) {
  std::vector<Point2> work(y.begin(), y.end());
  std::vector<Point2> g(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    for (int axis = 0; axis < 2; ++axis) {
      double& c = axis == 0 ? work[i].x : work[i].y;
      const double orig = c;
      c = orig + eps;
      double up = kl(p, work);
      c = orig - eps;
      double down = kl(p, work);
      c = orig;
      (axis == 0 ? g[i].x : g[i].y) = (up - down) / (2.0 * eps);
    }
  }
  return g;
}

std::vector<double> conditional_row(std::span<const double> d2, double sigma) {
  double dmin = *std::min_element(d2.begin(), d2.end());
  std::vector<double> row(d2.size());
  long double z = 0;
  for (std::size_t j = 0; j < d2.size(); ++j) {
    row[j] = std::exp(-(d2[j] - dmin) / (2.0 * sigma * sigma));
    z += row[j];
  }
  for (double& r : row) r = static_cast<double>(r / z);
  return row;
}

double entropy(std::span<const double> row) {
  long double h = 0;
  for (double p : row) {
    if (p > 0.0) h -= p * std::log(static_cast<long double>(p));
  }
  return static_cast<double>(h);
}

double knn_purity(std::span<const Point2> y, std::span<const int> labels, std::size_t k) {
  const std::size_t n = y.size();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::pair<double, std::size_t>> d;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      double dx = y[i].x - y[j].x;
      double dy = y[i].y - y[j].y;
      d.emplace_back(dx * dx + dy * dy, j);
    }
    std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
    std::size_t same = 0;
    for (std::size_t r = 0; r < k; ++r) same += labels[d[r].second] == labels[i] ? 1 : 0;
    total += static_cast<double>(same) / static_cast<double>(k);
  }
  return total / static_cast<double>(n);
}

}  // namespace oracle
