#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "litatlas/tsne.hpp"

namespace litatlas {

/// Point-region quadtree with per-cell center of mass, used to approximate
/// t-SNE repulsive forces. Leaves hold one location; coincident points share
/// a leaf.
class QuadTree {
 public:
  explicit QuadTree(std::span<const Point2> points);

  struct Cell {
    Point2 center;      // geometric center
    double half_width;  // square cells
    Point2 center_of_mass;
    std::size_t count = 0;
    int first_child = -1;  // four consecutive cells when subdivided
    std::vector<std::size_t> points;  // leaf contents
  };

  const Cell& root() const { return cells_.front(); }
  const std::vector<Cell>& cells() const { return cells_; }

  /// Accumulates sum over j != i of num_ij^2 (y_i - y_j) into `force` and
  /// returns sum of num_ij, num_ij = 1 / (1 + |y_i - y_j|^2), summarizing a
  /// cell by its center of mass when width / distance < theta.
  double repulsion(std::size_t i, double theta, Point2& force) const;

 private:
  void insert(std::size_t cell, std::size_t point, int depth);
  void subdivide(std::size_t cell);
  int child_for(const Cell& cell, const Point2& p) const;

  std::span<const Point2> points_;
  std::vector<Cell> cells_;
};

}  // namespace litatlas
