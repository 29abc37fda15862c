#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>

namespace dip {

/// A point in R^p, p in {1,2,3}. Coordinates must be finite.
class Point {
 public:
  Point() = default;
  explicit Point(double x) : dim_(1), c_{x, 0.0, 0.0} { check(); }
  Point(double x, double y) : dim_(2), c_{x, y, 0.0} { check(); }
  Point(double x, double y, double z) : dim_(3), c_{x, y, z} { check(); }

  static Point from_span(std::span<const double> v) {
    if (v.size() < 1 || v.size() > 3)
      throw std::invalid_argument("Point: dimension must be 1, 2 or 3");
    Point p;
    p.dim_ = static_cast<int>(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) p.c_[i] = v[i];
    p.check();
    return p;
  }

  int dim() const { return dim_; }
  double operator[](int i) const { return c_[static_cast<std::size_t>(i)]; }

  double norm() const {
    return std::sqrt(c_[0] * c_[0] + c_[1] * c_[1] + c_[2] * c_[2]);
  }

  friend bool operator==(const Point&, const Point&) = default;

 private:
  void check() const {
    for (int i = 0; i < dim_; ++i)
      if (!std::isfinite(c_[i]))
        throw std::invalid_argument("Point: non-finite coordinate");
  }

  int dim_ = 0;
  std::array<double, 3> c_{0.0, 0.0, 0.0};
};

/// Half-open axis-aligned box, the product of intervals (lo_i, hi_i].
/// The half-open convention makes atom membership unambiguous when an atom
/// sits on a face shared by two boxes.
class Box {
 public:
  Box(const Point& lo, const Point& hi) : lo_(lo), hi_(hi) {
    if (lo.dim() != hi.dim())
      throw std::invalid_argument("Box: corner dimensions differ");
    for (int i = 0; i < lo.dim(); ++i)
      if (!(lo[i] < hi[i]))
        throw std::invalid_argument("Box: need lo < hi in every coordinate");
  }

  int dim() const { return lo_.dim(); }
  double lo(int i) const { return lo_[i]; }
  double hi(int i) const { return hi_[i]; }

  bool contains(const Point& p) const {
    if (p.dim() != dim())
      throw std::invalid_argument("Box: point dimension mismatch");
    for (int i = 0; i < dim(); ++i)
      if (!(lo_[i] < p[i] && p[i] <= hi_[i])) return false;
    return true;
  }

  /// Smallest absolute distance from any coordinate of p to a face plane of
  /// this box. Used to screen boundary-sensitive checks.
  double boundary_distance(const Point& p) const {
    double d = std::numeric_limits<double>::infinity();
    for (int i = 0; i < dim(); ++i) {
      d = std::min(d, std::abs(p[i] - lo_[i]));
      d = std::min(d, std::abs(p[i] - hi_[i]));
    }
    return d;
  }

 private:
  Point lo_, hi_;
};

/// True when two half-open boxes share no point.
inline bool boxes_disjoint(const Box& a, const Box& b) {
  if (a.dim() != b.dim())
    throw std::invalid_argument("boxes_disjoint: dimension mismatch");
  for (int i = 0; i < a.dim(); ++i)
    if (!(a.lo(i) < b.hi(i) && b.lo(i) < a.hi(i))) return true;
  return false;
}

}  // namespace dip
