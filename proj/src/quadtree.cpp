#include "litatlas/quadtree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace litatlas {

namespace {

constexpr int kMaxDepth = 48;

}  // namespace

QuadTree::QuadTree(std::span<const Point2> points) : points_(points) {
  double min_x = std::numeric_limits<double>::infinity();
  double min_y = min_x;
  double max_x = -min_x;
  double max_y = -min_x;
  for (const auto& p : points) {
    min_x = std::min(min_x, p.x);
    min_y = std::min(min_y, p.y);
    max_x = std::max(max_x, p.x);
    max_y = std::max(max_y, p.y);
  }
  Cell root;
  if (points.empty()) {
    root.half_width = 1.0;
  } else {
    root.center = {(min_x + max_x) / 2, (min_y + max_y) / 2};
    double half = std::max(max_x - min_x, max_y - min_y) / 2;
    root.half_width = half * (1.0 + 1e-9) + 1e-12;
  }
  cells_.reserve(points.size() * 2 + 1);
  cells_.push_back(std::move(root));
  for (std::size_t i = 0; i < points.size(); ++i) insert(0, i, 0);
}

int QuadTree::child_for(const Cell& cell, const Point2& p) const {
  int quadrant = 0;
  if (p.x >= cell.center.x) quadrant |= 1;
  if (p.y >= cell.center.y) quadrant |= 2;
  return cell.first_child + quadrant;
}

void QuadTree::subdivide(std::size_t cell) {
  const Point2 c = cells_[cell].center;
  const double h = cells_[cell].half_width / 2;
  const int first = static_cast<int>(cells_.size());
  for (int q = 0; q < 4; ++q) {
    Cell child;
    child.center = {c.x + ((q & 1) ? h : -h), c.y + ((q & 2) ? h : -h)};
    child.half_width = h;
    cells_.push_back(std::move(child));
  }
  cells_[cell].first_child = first;
}

void QuadTree::insert(std::size_t cell, std::size_t point, int depth) {
  const Point2& p = points_[point];
  {
    Cell& c = cells_[cell];
    double w = static_cast<double>(c.count);
    c.center_of_mass.x = (c.center_of_mass.x * w + p.x) / (w + 1);
    c.center_of_mass.y = (c.center_of_mass.y * w + p.y) / (w + 1);
    ++c.count;
  }
  if (cells_[cell].first_child < 0) {
    Cell& c = cells_[cell];
    if (c.points.empty() || points_[c.points.front()] == p || depth >= kMaxDepth) {
      c.points.push_back(point);
      return;
    }
    std::vector<std::size_t> moved = std::move(c.points);
    c.points.clear();
    subdivide(cell);
    for (std::size_t q : moved) {
      insert(static_cast<std::size_t>(child_for(cells_[cell], points_[q])), q, depth + 1);
    }
  }
  insert(static_cast<std::size_t>(child_for(cells_[cell], p)), point, depth + 1);
}

double QuadTree::repulsion(std::size_t i, double theta, Point2& force) const {
  const Point2 yi = points_[i];
  double z = 0.0;
  std::vector<std::size_t> stack{0};
  while (!stack.empty()) {
    const Cell& c = cells_[stack.back()];
    stack.pop_back();
    if (c.count == 0) continue;
    if (c.first_child < 0) {
      for (std::size_t j : c.points) {
        if (j == i) continue;
        double dx = yi.x - points_[j].x;
        double dy = yi.y - points_[j].y;
        double num = 1.0 / (1.0 + dx * dx + dy * dy);
        z += num;
        force.x += num * num * dx;
        force.y += num * num * dy;
      }
      continue;
    }
    double dx = yi.x - c.center_of_mass.x;
    double dy = yi.y - c.center_of_mass.y;
    double d2 = dx * dx + dy * dy;
    if (d2 > 0.0 && 2.0 * c.half_width / std::sqrt(d2) < theta) {
      double num = 1.0 / (1.0 + d2);
      double m = static_cast<double>(c.count);
      z += m * num;
      force.x += m * num * num * dx;
      force.y += m * num * num * dy;
      continue;
    }
    for (int q = 3; q >= 0; --q) stack.push_back(static_cast<std::size_t>(c.first_child + q));
  }
  return z;
}

}  // namespace litatlas
