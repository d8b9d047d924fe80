#include "sigk/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sigk/errors.hpp"

namespace sigk {

Box Box::cube(int n, double lo, double hi) {
  Box b{std::vector<double>(n, lo), std::vector<double>(n, hi)};
  b.validate();
  return b;
}

void Box::validate() const {
  if (lo.size() != hi.size() || lo.empty()) throw DimensionError("box bounds have mismatched sizes");
  for (std::size_t i = 0; i < lo.size(); ++i) {
    if (!(lo[i] < hi[i])) throw DomainError("box needs lo < hi on every axis");
  }
}

Grid::Grid(Box box, std::vector<int> points) : box_(std::move(box)), points_(std::move(points)) {
  box_.validate();
  if (static_cast<int>(points_.size()) != box_.dim()) {
    throw DimensionError("points per axis do not match box dimension");
  }
  if (box_.dim() > kMaxDim) throw DimensionError("grid dimension above 16");
  size_ = 1;
  spacing_.resize(points_.size());
  stride_.resize(points_.size());
  for (int a = dim() - 1; a >= 0; --a) {
    if (points_[a] < 5) throw DimensionError("grid needs at least 5 nodes per axis");
    spacing_[a] = (box_.hi[a] - box_.lo[a]) / (points_[a] - 1);
    stride_[a] = static_cast<std::ptrdiff_t>(size_);
    size_ *= static_cast<std::size_t>(points_[a]);
  }
}

Grid Grid::uniform(const Box& box, int points) {
  return Grid(box, std::vector<int>(box.dim(), points));
}

double Grid::min_spacing() const { return *std::min_element(spacing_.begin(), spacing_.end()); }

Vec Grid::node(std::size_t idx) const {
  Vec x(dim());
  for (int a = 0; a < dim(); ++a) x(a) = coord(a, index(idx, a));
  return x;
}

int Grid::depth(std::size_t node) const {
  int d = points_[0];
  for (int a = 0; a < dim(); ++a) {
    const int i = index(node, a);
    d = std::min({d, i, points_[a] - 1 - i});
  }
  return d;
}

ScalarField::ScalarField(Grid grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_.size() != grid_.size()) throw DimensionError("field value count differs from grid size");
  for (double v : values_) {
    if (!std::isfinite(v)) throw DomainError("field values must be finite");
  }
}

ScalarField ScalarField::zeros(const Grid& grid) {
  return ScalarField(grid, std::vector<double>(grid.size(), 0.0));
}

ScalarField ScalarField::sample(const Grid& grid, const std::function<double(const Vec&)>& f) {
  std::vector<double> v(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) v[i] = f(grid.node(i));
  return ScalarField(grid, std::move(v));
}

VectorField::VectorField(Grid grid, int comps)
    : grid_(std::move(grid)), comps_(comps), data_(grid_.size() * comps, 0.0) {}

Vec VectorField::at(std::size_t node) const {
  Vec v(comps_);
  for (int c = 0; c < comps_; ++c) v(c) = (*this)(node, c);
  return v;
}

void VectorField::set(std::size_t node, const Vec& v) {
  for (int c = 0; c < comps_; ++c) (*this)(node, c) = v(c);
}

ScalarField VectorField::component(int c) const {
  std::vector<double> v(grid_.size());
  for (std::size_t i = 0; i < grid_.size(); ++i) v[i] = (*this)(i, c);
  return ScalarField(grid_, std::move(v));
}

MatrixField::MatrixField(Grid grid, int dim)
    : grid_(std::move(grid)), dim_(dim), data_(grid_.size() * dim * dim, 0.0) {}

Mat MatrixField::at(std::size_t node) const {
  Mat m(dim_, dim_);
  const double* p = &data_[node * dim_ * dim_];
  for (int j = 0; j < dim_; ++j) {
    for (int i = 0; i < dim_; ++i) m(i, j) = p[j * dim_ + i];
  }
  return m;
}

void MatrixField::set(std::size_t node, const Mat& m) {
  double* p = &data_[node * dim_ * dim_];
  for (int j = 0; j < dim_; ++j) {
    for (int i = 0; i < dim_; ++i) p[j * dim_ + i] = m(i, j);
  }
}

ScalarField MatrixField::entry(int i, int j) const {
  std::vector<double> v(grid_.size());
  for (std::size_t n = 0; n < grid_.size(); ++n) v[n] = (*this)(n, i, j);
  return ScalarField(grid_, std::move(v));
}

Increment Increment::make(const Grid& grid, int axis, double h) {
  if (axis < 0 || axis >= grid.dim()) throw DimensionError("increment axis out of range");
  const double ratio = h / grid.spacing(axis);
  const double steps = std::round(ratio);
  if (steps == 0.0 || std::abs(ratio - steps) > 1e-9 * std::max(1.0, std::abs(ratio))) {
    throw DomainError("increment " + std::to_string(h) + " is not a nonzero multiple of the spacing " +
                      std::to_string(grid.spacing(axis)));
  }
  return {axis, static_cast<int>(steps), steps * grid.spacing(axis)};
}

Region::Region(Grid grid, std::vector<double> weight) : grid_(std::move(grid)), weight_(std::move(weight)) {
  for (std::size_t i = 0; i < weight_.size(); ++i) {
    if (weight_[i] > 0.0) nodes_.push_back(i);
  }
}

namespace {

std::vector<double> trapezoid(const Grid& grid, const std::vector<int>& first, const std::vector<int>& last) {
  std::vector<double> w(grid.size(), 0.0);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double wi = 1.0;
    for (int a = 0; a < grid.dim() && wi > 0.0; ++a) {
      const int idx = grid.index(i, a);
      if (idx < first[a] || idx > last[a]) {
        wi = 0.0;
      } else {
        wi *= grid.spacing(a) * ((idx == first[a] || idx == last[a]) ? 0.5 : 1.0);
      }
    }
    w[i] = wi;
  }
  return w;
}

}  // namespace

Region Region::whole(const Grid& grid) {
  std::vector<int> first(grid.dim(), 0);
  std::vector<int> last(grid.dim());
  for (int a = 0; a < grid.dim(); ++a) last[a] = grid.points()[a] - 1;
  return Region(grid, trapezoid(grid, first, last));
}

Region Region::interior(const Grid& grid, double margin) {
  if (margin < 0.0) throw DomainError("negative region margin");
  std::vector<int> first(grid.dim());
  std::vector<int> last(grid.dim());
  for (int a = 0; a < grid.dim(); ++a) {
    const int m = static_cast<int>(std::ceil(margin / grid.spacing(a) - 1e-9));
    first[a] = m;
    last[a] = grid.points()[a] - 1 - m;
    if (last[a] - first[a] < 1) throw DomainError("interior region too thin for the requested margin");
  }
  return Region(grid, trapezoid(grid, first, last));
}

Region Region::ball(const Grid& grid, const Vec& center, double radius) {
  if (center.size() != grid.dim()) throw DimensionError("ball center dimension mismatch");
  if (!(radius > 0.0)) throw DomainError("ball radius must be positive");
  const double half = 0.5 * grid.min_spacing();
  const double r = std::max(half, std::round(radius / half) * half);
  const double r2 = r * r * (1.0 + 1e-12);
  double cell = 1.0;
  for (int a = 0; a < grid.dim(); ++a) cell *= grid.spacing(a);
  std::vector<double> w(grid.size(), 0.0);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if ((grid.node(i) - center).squaredNorm() <= r2) w[i] = cell;
  }
  return Region(grid, std::move(w));
}

double Region::measure() const {
  double s = 0.0;
  for (std::size_t i : nodes_) s += weight_[i];
  return s;
}

Region Region::intersect(const Region& other) const {
  if (!(other.grid_ == grid_)) throw DimensionError("regions live on different grids");
  return filter([&](std::size_t i) { return other.contains(i); });
}

Region Region::filter(const std::function<bool(std::size_t)>& keep) const {
  std::vector<double> w(weight_.size(), 0.0);
  for (std::size_t i : nodes_) {
    if (keep(i)) w[i] = weight_[i];
  }
  return Region(grid_, std::move(w));
}

}  // namespace sigk
