#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "sigk/types.hpp"

namespace sigk {

struct Box {
  std::vector<double> lo;
  std::vector<double> hi;

  [[nodiscard]] int dim() const { return static_cast<int>(lo.size()); }
  [[nodiscard]] static Box cube(int n, double lo, double hi);
  void validate() const;
  bool operator==(const Box&) const = default;
};

/// Uniform tensor-product grid. Nodes are flattened row-major: the last axis varies fastest.
class Grid {
 public:
  Grid(Box box, std::vector<int> points);
  static Grid uniform(const Box& box, int points);

  [[nodiscard]] int dim() const { return box_.dim(); }
  [[nodiscard]] const Box& box() const { return box_; }
  [[nodiscard]] const std::vector<int>& points() const { return points_; }
  [[nodiscard]] double spacing(int axis) const { return spacing_[axis]; }
  [[nodiscard]] double min_spacing() const;
  [[nodiscard]] std::size_t size() const { return size_; }
  [[nodiscard]] std::ptrdiff_t stride(int axis) const { return stride_[axis]; }

  [[nodiscard]] int index(std::size_t node, int axis) const {
    return static_cast<int>((node / stride_[axis]) % points_[axis]);
  }
  [[nodiscard]] double coord(int axis, int i) const { return box_.lo[axis] + i * spacing_[axis]; }
  [[nodiscard]] Vec node(std::size_t idx) const;
  /// True when node + steps * e_axis is still a grid node.
  [[nodiscard]] bool fits(std::size_t node, int axis, int steps) const {
    const int i = index(node, axis) + steps;
    return i >= 0 && i < points_[axis];
  }
  /// Number of whole nodes between `node` and the nearest face, over all axes.
  [[nodiscard]] int depth(std::size_t node) const;

  bool operator==(const Grid& o) const { return box_ == o.box_ && points_ == o.points_; }

 private:
  Box box_;
  std::vector<int> points_;
  std::vector<double> spacing_;
  std::vector<std::ptrdiff_t> stride_;
  std::size_t size_ = 0;
};

class ScalarField {
 public:
  ScalarField(Grid grid, std::vector<double> values);
  static ScalarField zeros(const Grid& grid);
  static ScalarField sample(const Grid& grid, const std::function<double(const Vec&)>& f);

  [[nodiscard]] const Grid& grid() const { return grid_; }
  [[nodiscard]] std::size_t size() const { return values_.size(); }
  [[nodiscard]] double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }
  [[nodiscard]] const std::vector<double>& values() const { return values_; }
  /// Value at node + steps * e_axis; the caller guarantees the node exists.
  [[nodiscard]] double shifted(std::size_t node, int axis, int steps) const {
    return values_[node + steps * grid_.stride(axis)];
  }

 private:
  Grid grid_;
  std::vector<double> values_;
};

/// n components per node, stored node-major.
class VectorField {
 public:
  VectorField(Grid grid, int comps);
  [[nodiscard]] const Grid& grid() const { return grid_; }
  [[nodiscard]] int comps() const { return comps_; }
  [[nodiscard]] double operator()(std::size_t node, int c) const { return data_[node * comps_ + c]; }
  double& operator()(std::size_t node, int c) { return data_[node * comps_ + c]; }
  [[nodiscard]] Vec at(std::size_t node) const;
  void set(std::size_t node, const Vec& v);
  [[nodiscard]] ScalarField component(int c) const;

 private:
  Grid grid_;
  int comps_;
  std::vector<double> data_;
};

/// dim x dim matrix per node (column-major within a node). Symmetry is not enforced here.
class MatrixField {
 public:
  MatrixField(Grid grid, int dim);
  [[nodiscard]] const Grid& grid() const { return grid_; }
  [[nodiscard]] int dim() const { return dim_; }
  [[nodiscard]] double operator()(std::size_t node, int i, int j) const {
    return data_[node * dim_ * dim_ + j * dim_ + i];
  }
  double& operator()(std::size_t node, int i, int j) { return data_[node * dim_ * dim_ + j * dim_ + i]; }
  [[nodiscard]] Mat at(std::size_t node) const;
  void set(std::size_t node, const Mat& m);
  [[nodiscard]] ScalarField entry(int i, int j) const;

 private:
  Grid grid_;
  int dim_;
  std::vector<double> data_;
};

/// Difference-quotient increment h = steps * spacing along one axis (0-based).
struct Increment {
  int axis = 0;
  int steps = 1;
  double h = 0.0;

  /// Throws when h is not a nonzero integer multiple of the spacing on `axis`.
  static Increment make(const Grid& grid, int axis, double h);
  [[nodiscard]] Increment reversed() const { return {axis, -steps, -h}; }
};

/// Node set with nonnegative quadrature weights; weight 0 means outside.
class Region {
 public:
  /// All nodes, tensor trapezoid weights.
  static Region whole(const Grid& grid);
  /// Nodes at distance >= margin from every face; trapezoid weights of that sub-box.
  static Region interior(const Grid& grid, double margin);
  /// Nodes whose distance to center is <= radius, with the radius snapped to the nearest half cell.
  /// Weights are full cell volumes.
  static Region ball(const Grid& grid, const Vec& center, double radius);

  [[nodiscard]] const Grid& grid() const { return grid_; }
  [[nodiscard]] bool contains(std::size_t node) const { return weight_[node] > 0.0; }
  [[nodiscard]] double weight(std::size_t node) const { return weight_[node]; }
  [[nodiscard]] const std::vector<std::size_t>& nodes() const { return nodes_; }
  [[nodiscard]] double measure() const;
  /// Keeps this region's weights on nodes that `other` also contains.
  [[nodiscard]] Region intersect(const Region& other) const;
  /// Keeps this region's weights on nodes where keep(node) is true.
  [[nodiscard]] Region filter(const std::function<bool(std::size_t)>& keep) const;

 private:
  Region(Grid grid, std::vector<double> weight);
  Grid grid_;
  std::vector<double> weight_;
  std::vector<std::size_t> nodes_;
};

/// Closed-form function with first and second derivatives, used as a reference oracle.
struct AnalyticField {
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> gradient;
  std::function<Mat(const Vec&)> hessian;
};

}  // namespace sigk
