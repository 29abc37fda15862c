#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dip/point.hpp"

namespace dip {

/// Tolerance for matrix-level comparisons (group axioms, orthogonality).
inline constexpr double kMatTol = 1e-12;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// 3x3 row-major matrix. Dimensions below 3 embed in the upper-left block
/// with the remaining diagonal set to 1.
struct Mat3 {
  std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

  static Mat3 identity() { return Mat3{}; }

  double operator()(int r, int c) const { return m[static_cast<std::size_t>(3 * r + c)]; }
  double& operator()(int r, int c) { return m[static_cast<std::size_t>(3 * r + c)]; }

  Mat3 operator*(const Mat3& o) const {
    Mat3 out;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) {
        double s = 0.0;
        for (int k = 0; k < 3; ++k) s += (*this)(r, k) * o(k, c);
        out(r, c) = s;
      }
    return out;
  }

  Mat3 transpose() const {
    Mat3 out;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) out(r, c) = (*this)(c, r);
    return out;
  }

  double max_abs_diff(const Mat3& o) const {
    double d = 0.0;
    for (std::size_t i = 0; i < 9; ++i) d = std::max(d, std::abs(m[i] - o.m[i]));
    return d;
  }

  double det() const {
    return (*this)(0, 0) * ((*this)(1, 1) * (*this)(2, 2) - (*this)(1, 2) * (*this)(2, 1)) -
           (*this)(0, 1) * ((*this)(1, 0) * (*this)(2, 2) - (*this)(1, 2) * (*this)(2, 0)) +
           (*this)(0, 2) * ((*this)(1, 0) * (*this)(2, 1) - (*this)(1, 1) * (*this)(2, 0));
  }
};

/// Orthogonal-affine map x -> A x + b in dimension p. Rotations have b = 0;
/// the univariate reflection about mu is A = -1, b = 2 mu.
class Isometry {
 public:
  Isometry(int dim, const Mat3& a, const std::array<double, 3>& b)
      : dim_(dim), a_(a), b_(b) {
    if (dim < 1 || dim > 3) throw std::invalid_argument("Isometry: dimension must be 1, 2 or 3");
  }

  static Isometry identity(int dim) { return Isometry(dim, Mat3::identity(), {0, 0, 0}); }

  int dim() const { return dim_; }
  const Mat3& linear() const { return a_; }
  const std::array<double, 3>& offset() const { return b_; }

  Point apply(const Point& x) const {
    if (x.dim() != dim_)
      throw std::invalid_argument("Isometry: point dimension mismatch");
    std::array<double, 3> in{0, 0, 0};
    for (int i = 0; i < dim_; ++i) in[static_cast<std::size_t>(i)] = x[i];
    std::array<double, 3> out{};
    for (int r = 0; r < 3; ++r)
      out[static_cast<std::size_t>(r)] =
          a_(r, 0) * in[0] + a_(r, 1) * in[1] + a_(r, 2) * in[2] +
          b_[static_cast<std::size_t>(r)];
    return Point::from_span(std::span<const double>(out.data(), static_cast<std::size_t>(dim_)));
  }

  /// this after other: x -> this(other(x)).
  Isometry compose(const Isometry& other) const {
    if (other.dim_ != dim_)
      throw std::invalid_argument("Isometry: compose dimension mismatch");
    Mat3 a = a_ * other.a_;
    std::array<double, 3> b{};
    for (int r = 0; r < 3; ++r)
      b[static_cast<std::size_t>(r)] =
          a_(r, 0) * other.b_[0] + a_(r, 1) * other.b_[1] + a_(r, 2) * other.b_[2] +
          b_[static_cast<std::size_t>(r)];
    return Isometry(dim_, a, b);
  }

  /// Inverse assuming A is orthogonal: (A^T, -A^T b).
  Isometry inverse() const {
    Mat3 at = a_.transpose();
    std::array<double, 3> b{};
    for (int r = 0; r < 3; ++r)
      b[static_cast<std::size_t>(r)] =
          -(at(r, 0) * b_[0] + at(r, 1) * b_[1] + at(r, 2) * b_[2]);
    return Isometry(dim_, at, b);
  }

  bool approx_equal(const Isometry& o, double tol = kMatTol) const {
    if (o.dim_ != dim_) return false;
    if (a_.max_abs_diff(o.a_) > tol) return false;
    for (std::size_t i = 0; i < 3; ++i)
      if (std::abs(b_[i] - o.b_[i]) > tol) return false;
    return true;
  }

 private:
  int dim_;
  Mat3 a_;
  std::array<double, 3> b_;
};

/// Angle canonicalized to [0, 2pi); 2pi itself maps to 0 (the identity).
inline double canonical_angle(double theta) {
  if (!std::isfinite(theta)) throw std::invalid_argument("angle must be finite");
  double t = std::fmod(theta, kTwoPi);
  if (t < 0.0) t += kTwoPi;
  if (t >= kTwoPi) t = 0.0;
  return t;
}

/// Planar rotation by theta (counterclockwise).
class Rotation2 {
 public:
  explicit Rotation2(double theta) : theta_(canonical_angle(theta)) {}

  double theta() const { return theta_; }

  Rotation2 compose(const Rotation2& o) const { return Rotation2(theta_ + o.theta_); }

  Mat3 matrix() const {
    Mat3 a;
    const double c = std::cos(theta_), s = std::sin(theta_);
    a(0, 0) = c;
    a(0, 1) = -s;
    a(1, 0) = s;
    a(1, 1) = c;
    return a;
  }

  Isometry isometry() const {
    if (theta_ == 0.0) return Isometry::identity(2);
    return Isometry(2, matrix(), {0, 0, 0});
  }

  Point apply(const Point& x) const { return isometry().apply(x); }

 private:
  double theta_;
};

/// Univariate reflection x -> 2 mu - x about a known center, or the identity.
class Reflection1 {
 public:
  Reflection1(double center, bool reflect) : center_(center), reflect_(reflect) {
    if (!std::isfinite(center)) throw std::invalid_argument("Reflection1: center must be finite");
  }

  double center() const { return center_; }
  bool is_reflection() const { return reflect_; }

  Isometry isometry() const {
    if (!reflect_) return Isometry::identity(1);
    Mat3 a;
    a(0, 0) = -1.0;
    return Isometry(1, a, {2.0 * center_, 0, 0});
  }

  Point apply(const Point& x) const { return isometry().apply(x); }

 private:
  double center_;
  bool reflect_;
};

/// The three basic counterclockwise axis rotations in R^3.
inline Mat3 rot_x(double t) {
  Mat3 a;
  const double c = std::cos(t), s = std::sin(t);
  a(1, 1) = c;
  a(1, 2) = -s;
  a(2, 1) = s;
  a(2, 2) = c;
  return a;
}

inline Mat3 rot_y(double t) {
  Mat3 a;
  const double c = std::cos(t), s = std::sin(t);
  a(0, 0) = c;
  a(0, 2) = s;
  a(2, 0) = -s;
  a(2, 2) = c;
  return a;
}

inline Mat3 rot_z(double t) {
  Mat3 a;
  const double c = std::cos(t), s = std::sin(t);
  a(0, 0) = c;
  a(0, 1) = -s;
  a(1, 0) = s;
  a(1, 1) = c;
  return a;
}

/// 3-D rotation given by yaw/pitch/roll angles about the x, y, z axes.
/// matrix() is the expanded closed form of rot_x * rot_y * rot_z.
class Rotation3 {
 public:
  Rotation3(double theta_x, double theta_y, double theta_z)
      : tx_(theta_x), ty_(theta_y), tz_(theta_z) {
    if (!std::isfinite(theta_x) || !std::isfinite(theta_y) || !std::isfinite(theta_z))
      throw std::invalid_argument("Rotation3: angles must be finite");
  }

  double theta_x() const { return tx_; }
  double theta_y() const { return ty_; }
  double theta_z() const { return tz_; }

  Mat3 matrix() const {
    const double cx = std::cos(tx_), sx = std::sin(tx_);
    const double cy = std::cos(ty_), sy = std::sin(ty_);
    const double cz = std::cos(tz_), sz = std::sin(tz_);
    Mat3 a;
    a(0, 0) = cy * cz;
    a(0, 1) = -cy * sz;
    a(0, 2) = sy;
    a(1, 0) = cx * sz + sx * sy * cz;
    a(1, 1) = cx * cz - sx * sy * sz;
    a(1, 2) = -sx * cy;
    a(2, 0) = sx * sz - cx * sy * cz;
    a(2, 1) = sx * cz + cx * sy * sz;
    a(2, 2) = cx * cy;
    return a;
  }

  Isometry isometry() const { return Isometry(3, matrix(), {0, 0, 0}); }

  Point apply(const Point& x) const { return isometry().apply(x); }

 private:
  double tx_, ty_, tz_;
};

inline Rotation3 euler_rotation(double theta_x, double theta_y, double theta_z) {
  return Rotation3(theta_x, theta_y, theta_z);
}

enum class GroupKind { cyclic2d, reflection1, cyclic3d };

/// Finite transformation group, stored as an ordered element list with the
/// cyclic structure elements[i] o elements[j] = elements[(i+j) mod k].
/// Element 0 is always the exact identity.
class FiniteGroup {
 public:
  int order() const { return static_cast<int>(elements_.size()); }
  int dim() const { return elements_.front().dim(); }
  const std::vector<Isometry>& elements() const { return elements_; }
  const Isometry& element(int j) const { return elements_.at(static_cast<std::size_t>(j)); }

  GroupKind kind() const { return kind_; }
  double mu() const { return mu_; }
  const std::array<double, 3>& axis() const { return axis_; }

  /// Exhaustive axiom check against the cyclic structure: identity at index
  /// 0, elements[i] o elements[j] matching elements[(i+j) mod k], and the
  /// inverse of elements[i] matching elements[(k-i) mod k]. Throws on
  /// violation. O(k^2); intended for k <= 512.
  void verify_axioms(double tol = kMatTol) const {
    const int k = order();
    if (!elements_[0].approx_equal(Isometry::identity(dim()), tol))
      throw std::logic_error("FiniteGroup: element 0 is not the identity");
    for (int i = 0; i < k; ++i) {
      const Isometry inv = elements_[static_cast<std::size_t>(i)].inverse();
      if (!inv.approx_equal(elements_[static_cast<std::size_t>((k - i) % k)], tol))
        throw std::logic_error("FiniteGroup: inverse not in group");
      for (int j = 0; j < k; ++j) {
        const Isometry comp = elements_[static_cast<std::size_t>(i)].compose(
            elements_[static_cast<std::size_t>(j)]);
        if (!comp.approx_equal(elements_[static_cast<std::size_t>((i + j) % k)], tol))
          throw std::logic_error("FiniteGroup: not closed under composition");
      }
    }
  }

  friend FiniteGroup make_cyclic_group_2d(int k);
  friend FiniteGroup make_reflection_group(double mu);
  friend FiniteGroup make_cyclic_group_3d(int k, const std::array<double, 3>& axis);

 private:
  FiniteGroup(GroupKind kind, std::vector<Isometry> elems, double mu,
              const std::array<double, 3>& axis)
      : kind_(kind), elements_(std::move(elems)), mu_(mu), axis_(axis) {
    // Cheap sanity pass at construction; the full O(k^2) check stays explicit.
    if (order() <= 64) verify_axioms();
  }

  GroupKind kind_;
  std::vector<Isometry> elements_;
  double mu_ = 0.0;
  std::array<double, 3> axis_{0, 0, 1};
};

/// Cyclic planar rotation group of order k: angles 2 pi j / k, j = 0..k-1.
inline FiniteGroup make_cyclic_group_2d(int k) {
  if (k < 1) throw std::invalid_argument("make_cyclic_group_2d: k must be >= 1");
  std::vector<Isometry> elems;
  elems.reserve(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) {
    if (j == 0) {
      elems.push_back(Isometry::identity(2));
    } else {
      elems.push_back(Rotation2(kTwoPi * j / k).isometry());
    }
  }
  return FiniteGroup(GroupKind::cyclic2d, std::move(elems), 0.0, {0, 0, 1});
}

/// Order-2 group {x, 2 mu - x}.
inline FiniteGroup make_reflection_group(double mu) {
  if (!std::isfinite(mu)) throw std::invalid_argument("make_reflection_group: mu must be finite");
  std::vector<Isometry> elems;
  elems.push_back(Isometry::identity(1));
  elems.push_back(Reflection1(mu, true).isometry());
  return FiniteGroup(GroupKind::reflection1, std::move(elems), mu, {0, 0, 1});
}

/// Cyclic group of k rotations about a unit axis. Axis-aligned axes use the
/// basic matrices directly; a general axis conjugates rot_z by an orthonormal
/// frame R taking e_z to the axis: R rot_z(theta) R^T.
inline FiniteGroup make_cyclic_group_3d(int k, const std::array<double, 3>& axis) {
  if (k < 1) throw std::invalid_argument("make_cyclic_group_3d: k must be >= 1");
  const double n2 = axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2];
  if (n2 == 0.0) throw std::invalid_argument("make_cyclic_group_3d: zero axis");
  if (std::abs(std::sqrt(n2) - 1.0) > 1e-9)
    throw std::invalid_argument("make_cyclic_group_3d: axis must be unit length");

  enum class Aligned { none, x, y, z };
  Aligned aligned = Aligned::none;
  if (std::abs(axis[0] - 1.0) < 1e-12 && std::abs(axis[1]) < 1e-12 && std::abs(axis[2]) < 1e-12)
    aligned = Aligned::x;
  else if (std::abs(axis[1] - 1.0) < 1e-12 && std::abs(axis[0]) < 1e-12 && std::abs(axis[2]) < 1e-12)
    aligned = Aligned::y;
  else if (std::abs(axis[2] - 1.0) < 1e-12 && std::abs(axis[0]) < 1e-12 && std::abs(axis[1]) < 1e-12)
    aligned = Aligned::z;

  Mat3 frame;  // columns (v, w, axis), orthonormal, det +1
  if (aligned == Aligned::none) {
    std::array<double, 3> u = axis;
    std::array<double, 3> pick = std::abs(u[0]) < 0.9 ? std::array<double, 3>{1, 0, 0}
                                                      : std::array<double, 3>{0, 1, 0};
    // v = normalize(u x pick), w = u x v
    std::array<double, 3> v{u[1] * pick[2] - u[2] * pick[1],
                            u[2] * pick[0] - u[0] * pick[2],
                            u[0] * pick[1] - u[1] * pick[0]};
    const double vn = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    for (auto& c : v) c /= vn;
    std::array<double, 3> w{u[1] * v[2] - u[2] * v[1],
                            u[2] * v[0] - u[0] * v[2],
                            u[0] * v[1] - u[1] * v[0]};
    for (int r = 0; r < 3; ++r) {
      frame(r, 0) = v[static_cast<std::size_t>(r)];
      frame(r, 1) = w[static_cast<std::size_t>(r)];
      frame(r, 2) = u[static_cast<std::size_t>(r)];
    }
  }

  std::vector<Isometry> elems;
  elems.reserve(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) {
    if (j == 0) {
      elems.push_back(Isometry::identity(3));
      continue;
    }
    const double theta = kTwoPi * j / k;
    Mat3 a;
    switch (aligned) {
      case Aligned::x: a = rot_x(theta); break;
      case Aligned::y: a = rot_y(theta); break;
      case Aligned::z: a = rot_z(theta); break;
      case Aligned::none: a = frame * rot_z(theta) * frame.transpose(); break;
    }
    elems.push_back(Isometry(3, a, {0, 0, 0}));
  }
  return FiniteGroup(GroupKind::cyclic3d, std::move(elems), 0.0, axis);
}

inline Point apply(const Isometry& g, const Point& x) { return g.apply(x); }

/// All k images g_j(x) in element order. Fixed points are kept with
/// multiplicity so downstream 1/k weights stay uniform.
inline std::vector<Point> orbit(const FiniteGroup& g, const Point& x) {
  if (x.dim() != g.dim()) throw std::invalid_argument("orbit: dimension mismatch");
  std::vector<Point> out;
  out.reserve(static_cast<std::size_t>(g.order()));
  for (const Isometry& e : g.elements()) out.push_back(e.apply(x));
  return out;
}

}  // namespace dip
