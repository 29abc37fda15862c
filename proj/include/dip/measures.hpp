#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "dip/groups.hpp"
#include "dip/point.hpp"
#include "dip/rng.hpp"

namespace dip {

/// Tolerance for weight normalization of discrete measures.
inline constexpr double kWeightTol = 1e-9;

struct Atom {
  Point point;
  double weight;
};

/// Finitely supported probability measure: weighted atoms in R^p.
/// Weights are nonnegative and sum to one within kWeightTol. Duplicate atoms
/// are allowed; merged() collapses them explicitly.
class DiscreteMeasure {
 public:
  explicit DiscreteMeasure(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
    if (atoms_.empty()) throw std::invalid_argument("DiscreteMeasure: no atoms");
    dim_ = atoms_.front().point.dim();
    double total = 0.0;
    cum_.reserve(atoms_.size());
    for (const Atom& a : atoms_) {
      if (a.point.dim() != dim_)
        throw std::invalid_argument("DiscreteMeasure: mixed dimensions");
      if (!(a.weight >= 0.0) || !std::isfinite(a.weight))
        throw std::invalid_argument("DiscreteMeasure: weights must be nonnegative");
      total += a.weight;
      cum_.push_back(total);
    }
    if (std::abs(total - 1.0) > kWeightTol)
      throw std::invalid_argument("DiscreteMeasure: weights must sum to 1");
  }

  int dim() const { return dim_; }
  std::size_t size() const { return atoms_.size(); }
  const std::vector<Atom>& atoms() const { return atoms_; }

  double eval_box(const Box& box) const {
    if (box.dim() != dim_)
      throw std::invalid_argument("DiscreteMeasure: box dimension mismatch");
    double mass = 0.0;
    for (const Atom& a : atoms_)
      if (box.contains(a.point)) mass += a.weight;
    return mass;
  }

  /// One draw, atoms weighted by their masses (inverse CDF on prefix sums).
  Point sample(Rng& rng) const {
    const double u = rng.uniform() * cum_.back();
    auto it = std::upper_bound(cum_.begin(), cum_.end(), u);
    std::size_t i = static_cast<std::size_t>(it - cum_.begin());
    if (i >= atoms_.size()) i = atoms_.size() - 1;
    return atoms_[i].point;
  }

  /// Copy with coincident atoms merged: atoms sorted lexicographically by
  /// coordinates, consecutive points within tol in every coordinate pooled.
  DiscreteMeasure merged(double tol = 1e-12) const {
    std::vector<Atom> sorted = atoms_;
    std::sort(sorted.begin(), sorted.end(), [this](const Atom& a, const Atom& b) {
      for (int i = 0; i < dim_; ++i) {
        if (a.point[i] < b.point[i]) return true;
        if (a.point[i] > b.point[i]) return false;
      }
      return false;
    });
    std::vector<Atom> out;
    for (const Atom& a : sorted) {
      bool close = false;
      if (!out.empty()) {
        close = true;
        for (int i = 0; i < dim_; ++i)
          if (std::abs(out.back().point[i] - a.point[i]) > tol) {
            close = false;
            break;
          }
      }
      if (close)
        out.back().weight += a.weight;
      else
        out.push_back(a);
    }
    return DiscreteMeasure(std::move(out));
  }

 private:
  int dim_;
  std::vector<Atom> atoms_;
  std::vector<double> cum_;
};

/// Standard normal CDF.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

namespace detail {

// Antiderivative of the unit half-circle height sqrt(1 - x^2).
inline double half_circle_J(double x) {
  x = std::clamp(x, -1.0, 1.0);
  return 0.5 * (x * std::sqrt(std::max(0.0, 1.0 - x * x)) + std::asin(x));
}

// Area of {x <= a, y <= b} inside the unit disk.
inline double unit_disk_corner_area(double a, double b) {
  if (a <= -1.0 || b <= -1.0) return 0.0;
  a = std::min(a, 1.0);
  if (b >= 1.0) {  // only the x constraint binds
    return 2.0 * (half_circle_J(a) - half_circle_J(-1.0));
  }
  const double s = std::sqrt(std::max(0.0, 1.0 - b * b));
  double area = 0.0;
  if (b >= 0.0) {
    const double u1 = std::clamp(a, -1.0, -s);
    area += 2.0 * (half_circle_J(u1) - half_circle_J(-1.0));
    if (a > -s) {
      const double u2 = std::clamp(a, -s, s);
      area += b * (u2 + s) + half_circle_J(u2) - half_circle_J(-s);
      if (a > s) area += 2.0 * (half_circle_J(a) - half_circle_J(s));
    }
  } else {
    if (a > -s) {
      const double u2 = std::clamp(a, -s, s);
      area += b * (u2 + s) + half_circle_J(u2) - half_circle_J(-s);
    }
  }
  return area;
}

}  // namespace detail

/// Mass of an axis-aligned box under the uniform law on the origin-centered
/// disk of the given radius (exact, via segment antiderivatives).
inline double uniform_disk_box_mass(double radius, const Box& box) {
  const double inv = 1.0 / radius;
  auto corner = [&](double x, double y) {
    return detail::unit_disk_corner_area(x * inv, y * inv);
  };
  const double area = corner(box.hi(0), box.hi(1)) - corner(box.lo(0), box.hi(1)) -
                      corner(box.hi(0), box.lo(1)) + corner(box.lo(0), box.lo(1));
  return std::clamp(area / std::numbers::pi, 0.0, 1.0);
}

enum class BaseKind {
  gauss1d_symmetric,
  gauss2d_isotropic,
  uniform_disk,
  uniform_unit_square,
  gauss3d_isotropic,
};

/// Built-in continuous base distributions. All kinds have exact box
/// probabilities; the rotation-invariant kinds (isotropic Gaussians, disk)
/// have it in every direction, the unit square only under quarter turns.
class BaseMeasure {
 public:
  static BaseMeasure gauss1d(double mu, double sigma) {
    check_scale(sigma);
    if (!std::isfinite(mu)) throw std::invalid_argument("gauss1d: mu must be finite");
    BaseMeasure b(BaseKind::gauss1d_symmetric);
    b.mu_ = mu;
    b.sigma_ = sigma;
    return b;
  }
  static BaseMeasure gauss2d(double sigma) {
    check_scale(sigma);
    BaseMeasure b(BaseKind::gauss2d_isotropic);
    b.sigma_ = sigma;
    return b;
  }
  static BaseMeasure disk(double radius) {
    check_scale(radius);
    BaseMeasure b(BaseKind::uniform_disk);
    b.radius_ = radius;
    return b;
  }
  static BaseMeasure unit_square() { return BaseMeasure(BaseKind::uniform_unit_square); }
  static BaseMeasure gauss3d(double sigma) {
    check_scale(sigma);
    BaseMeasure b(BaseKind::gauss3d_isotropic);
    b.sigma_ = sigma;
    return b;
  }

  BaseKind kind() const { return kind_; }
  double sigma() const { return sigma_; }
  double radius() const { return radius_; }
  double mu() const { return mu_; }

  int dim() const {
    switch (kind_) {
      case BaseKind::gauss1d_symmetric: return 1;
      case BaseKind::gauss2d_isotropic:
      case BaseKind::uniform_disk:
      case BaseKind::uniform_unit_square: return 2;
      case BaseKind::gauss3d_isotropic: return 3;
    }
    return 0;
  }

  bool rotation_invariant() const {
    return kind_ == BaseKind::gauss2d_isotropic || kind_ == BaseKind::uniform_disk ||
           kind_ == BaseKind::gauss3d_isotropic;
  }

  double eval_box(const Box& box) const {
    if (box.dim() != dim()) throw std::invalid_argument("BaseMeasure: box dimension mismatch");
    switch (kind_) {
      case BaseKind::gauss1d_symmetric:
        return normal_cdf((box.hi(0) - mu_) / sigma_) - normal_cdf((box.lo(0) - mu_) / sigma_);
      case BaseKind::gauss2d_isotropic: {
        double p = 1.0;
        for (int i = 0; i < 2; ++i)
          p *= normal_cdf(box.hi(i) / sigma_) - normal_cdf(box.lo(i) / sigma_);
        return p;
      }
      case BaseKind::uniform_disk:
        return uniform_disk_box_mass(radius_, box);
      case BaseKind::uniform_unit_square: {
        double p = 1.0;
        for (int i = 0; i < 2; ++i)
          p *= std::max(0.0, std::min(box.hi(i), 1.0) - std::max(box.lo(i), 0.0));
        return p;
      }
      case BaseKind::gauss3d_isotropic: {
        double p = 1.0;
        for (int i = 0; i < 3; ++i)
          p *= normal_cdf(box.hi(i) / sigma_) - normal_cdf(box.lo(i) / sigma_);
        return p;
      }
    }
    return 0.0;
  }

  /// Draw order: gauss kinds take one normal per coordinate; the square two
  /// uniforms (x then y); the disk two uniforms (radial then angular).
  Point sample(Rng& rng) const {
    switch (kind_) {
      case BaseKind::gauss1d_symmetric:
        return Point(mu_ + sigma_ * rng.normal());
      case BaseKind::gauss2d_isotropic: {
        const double x = sigma_ * rng.normal();
        const double y = sigma_ * rng.normal();
        return Point(x, y);
      }
      case BaseKind::uniform_disk: {
        const double r = radius_ * std::sqrt(rng.uniform());
        const double phi = kTwoPi * rng.uniform();
        return Point(r * std::cos(phi), r * std::sin(phi));
      }
      case BaseKind::uniform_unit_square: {
        const double x = rng.uniform();
        const double y = rng.uniform();
        return Point(x, y);
      }
      case BaseKind::gauss3d_isotropic: {
        const double x = sigma_ * rng.normal();
        const double y = sigma_ * rng.normal();
        const double z = sigma_ * rng.normal();
        return Point(x, y, z);
      }
    }
    throw std::logic_error("BaseMeasure: unknown kind");
  }

 private:
  explicit BaseMeasure(BaseKind kind) : kind_(kind) {}
  static void check_scale(double s) {
    if (!(s > 0.0) || !std::isfinite(s))
      throw std::invalid_argument("BaseMeasure: scale parameter must be positive");
  }

  BaseKind kind_;
  double sigma_ = 1.0;
  double radius_ = 1.0;
  double mu_ = 0.0;
};

/// Law of A_Theta X_I: a data point picked uniformly, rotated by an angle
/// uniform on [0, 2pi). This is the empirical component of the rotation-limit
/// posterior; every draw lands on a circle of some data radius.
class OrbitLaw {
 public:
  explicit OrbitLaw(std::vector<Point> data) : data_(std::move(data)) {
    if (data_.empty()) throw std::invalid_argument("OrbitLaw: empty data");
    for (const Point& p : data_)
      if (p.dim() != 2) throw std::invalid_argument("OrbitLaw: data must be 2-D");
  }

  const std::vector<Point>& data() const { return data_; }
  int dim() const { return 2; }

  /// Fraction of the circle of the given radius (centered at the origin)
  /// lying inside the box: exact arc measure over 2 pi. Crossing angles come
  /// from the box edge lines; each maximal sub-arc is classified by its
  /// midpoint.
  static double arc_fraction(double radius, const Box& box) {
    if (box.dim() != 2) throw std::invalid_argument("arc_fraction: box must be 2-D");
    if (radius == 0.0) return box.contains(Point(0.0, 0.0)) ? 1.0 : 0.0;
    std::vector<double> cuts;
    for (double c : {box.lo(0), box.hi(0)}) {
      if (std::abs(c) < radius) {
        const double t = std::acos(c / radius);
        cuts.push_back(t);
        cuts.push_back(kTwoPi - t);
      }
    }
    for (double c : {box.lo(1), box.hi(1)}) {
      if (std::abs(c) < radius) {
        const double t = std::asin(c / radius);
        cuts.push_back(canonical_angle(t));
        cuts.push_back(canonical_angle(std::numbers::pi - t));
      }
    }
    auto on_circle = [&](double phi) {
      return Point(radius * std::cos(phi), radius * std::sin(phi));
    };
    if (cuts.empty()) return box.contains(on_circle(0.5)) ? 1.0 : 0.0;
    std::sort(cuts.begin(), cuts.end());
    cuts.push_back(cuts.front() + kTwoPi);
    double arc = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      const double a = cuts[i], b = cuts[i + 1];
      if (box.contains(on_circle(0.5 * (a + b)))) arc += b - a;
    }
    return std::clamp(arc / kTwoPi, 0.0, 1.0);
  }

  double eval_box(const Box& box) const {
    if (box.dim() != 2) throw std::invalid_argument("OrbitLaw: box must be 2-D");
    CompensatedSum s;
    for (const Point& p : data_) s.add(arc_fraction(p.norm(), box));
    return s.value() / static_cast<double>(data_.size());
  }

  /// Draw order: datum index, then the rotation angle.
  Point sample(Rng& rng) const {
    const Point& x = data_[rng.uniform_index(data_.size())];
    const double t = kTwoPi * rng.uniform();
    const double c = std::cos(t), s = std::sin(t);
    return Point(c * x[0] - s * x[1], s * x[0] + c * x[1]);
  }

 private:
  std::vector<Point> data_;
};

/// Convex mixture p * continuous + (1 - p) * empirical. The posterior base
/// measure is represented exactly in this form; the empirical part is either
/// a discrete measure (finite groups) or an OrbitLaw (rotation limit), and is
/// absent when p = 1 (no data).
class MixtureBase {
 public:
  enum class EmpiricalKind { none, discrete, orbit };

  MixtureBase(double p_cont, BaseMeasure continuous)
      : p_cont_(p_cont), continuous_(std::move(continuous)) {
    check_p(p_cont);
    if (p_cont != 1.0)
      throw std::invalid_argument("MixtureBase: p_cont < 1 requires an empirical part");
  }

  MixtureBase(double p_cont, BaseMeasure continuous, DiscreteMeasure empirical)
      : p_cont_(p_cont), continuous_(std::move(continuous)), empirical_(std::move(empirical)) {
    check_p(p_cont);
    if (discrete().dim() != continuous_.dim())
      throw std::invalid_argument("MixtureBase: empirical dimension mismatch");
  }

  MixtureBase(double p_cont, BaseMeasure continuous, OrbitLaw empirical)
      : p_cont_(p_cont), continuous_(std::move(continuous)), empirical_(std::move(empirical)) {
    check_p(p_cont);
    if (continuous_.dim() != 2)
      throw std::invalid_argument("MixtureBase: orbit empirical requires a 2-D base");
  }

  double p_cont() const { return p_cont_; }
  const BaseMeasure& continuous() const { return continuous_; }
  int dim() const { return continuous_.dim(); }

  EmpiricalKind empirical_kind() const {
    if (std::holds_alternative<DiscreteMeasure>(empirical_)) return EmpiricalKind::discrete;
    if (std::holds_alternative<OrbitLaw>(empirical_)) return EmpiricalKind::orbit;
    return EmpiricalKind::none;
  }

  const DiscreteMeasure& discrete() const {
    if (!std::holds_alternative<DiscreteMeasure>(empirical_))
      throw std::logic_error("MixtureBase: no discrete empirical part");
    return std::get<DiscreteMeasure>(empirical_);
  }

  const OrbitLaw& orbit() const {
    if (!std::holds_alternative<OrbitLaw>(empirical_))
      throw std::logic_error("MixtureBase: no orbit empirical part");
    return std::get<OrbitLaw>(empirical_);
  }

  double eval_box(const Box& box) const {
    double mass = p_cont_ * continuous_.eval_box(box);
    if (p_cont_ < 1.0) {
      const double emp = std::holds_alternative<DiscreteMeasure>(empirical_)
                             ? std::get<DiscreteMeasure>(empirical_).eval_box(box)
                             : std::get<OrbitLaw>(empirical_).eval_box(box);
      mass += (1.0 - p_cont_) * emp;
    }
    return mass;
  }

  /// Draw order: one uniform selects the component (u < p_cont takes the
  /// continuous part), then that component's own draws.
  Point sample(Rng& rng) const {
    const double u = rng.uniform();
    if (u < p_cont_ || empirical_kind() == EmpiricalKind::none)
      return continuous_.sample(rng);
    if (std::holds_alternative<DiscreteMeasure>(empirical_))
      return std::get<DiscreteMeasure>(empirical_).sample(rng);
    return std::get<OrbitLaw>(empirical_).sample(rng);
  }

 private:
  static void check_p(double p) {
    if (!(p >= 0.0 && p <= 1.0))
      throw std::invalid_argument("MixtureBase: p_cont must lie in [0,1]");
  }

  double p_cont_;
  BaseMeasure continuous_;
  std::variant<std::monostate, DiscreteMeasure, OrbitLaw> empirical_;
};

/// Orbit-averaged Dirac: k atoms at the orbit of x, each of weight 1/k.
inline DiscreteMeasure symmetrized_dirac(const FiniteGroup& g, const Point& x) {
  const std::vector<Point> orb = orbit(g, x);
  const double w = 1.0 / static_cast<double>(g.order());
  std::vector<Atom> atoms;
  atoms.reserve(orb.size());
  for (const Point& p : orb) atoms.push_back({p, w});
  return DiscreteMeasure(std::move(atoms));
}

/// Group-symmetrized empirical measure: k*m atoms g_j(X_i), each of weight
/// 1/(k m), ordered datum-major (the orbit of X_1, then of X_2, ...).
inline DiscreteMeasure symmetrized_empirical(const FiniteGroup& g,
                                             std::span<const Point> data) {
  if (data.empty()) throw std::invalid_argument("symmetrized_empirical: empty data");
  const double w = 1.0 / (static_cast<double>(g.order()) * static_cast<double>(data.size()));
  std::vector<Atom> atoms;
  atoms.reserve(data.size() * static_cast<std::size_t>(g.order()));
  for (const Point& x : data) {
    if (x.dim() != g.dim())
      throw std::invalid_argument("symmetrized_empirical: dimension mismatch");
    for (const Isometry& e : g.elements()) atoms.push_back({e.apply(x), w});
  }
  return DiscreteMeasure(std::move(atoms));
}

/// Mean-centered empirical measure: atoms X_i - Xbar, weight 1/m. The result
/// has mean zero up to rounding.
inline DiscreteMeasure centered_empirical(std::span<const double> data) {
  if (data.empty()) throw std::invalid_argument("centered_empirical: empty data");
  CompensatedSum s;
  for (double x : data) {
    if (!std::isfinite(x)) throw std::invalid_argument("centered_empirical: non-finite datum");
    s.add(x);
  }
  const double mean = s.value() / static_cast<double>(data.size());
  const double w = 1.0 / static_cast<double>(data.size());
  std::vector<Atom> atoms;
  atoms.reserve(data.size());
  for (double x : data) atoms.push_back({Point(x - mean), w});
  return DiscreteMeasure(std::move(atoms));
}

/// Replace every atom (x, w) by the k atoms (g_j(x), w/k). The output is
/// exactly group-invariant: each group element permutes its atom list.
inline DiscreteMeasure orbit_symmetrize_measure(const FiniteGroup& g,
                                                const DiscreteMeasure& m) {
  if (m.dim() != g.dim())
    throw std::invalid_argument("orbit_symmetrize_measure: dimension mismatch");
  const double inv_k = 1.0 / static_cast<double>(g.order());
  std::vector<Atom> atoms;
  atoms.reserve(m.size() * static_cast<std::size_t>(g.order()));
  for (const Atom& a : m.atoms())
    for (const Isometry& e : g.elements())
      atoms.push_back({e.apply(a.point), a.weight * inv_k});
  return DiscreteMeasure(std::move(atoms));
}

template <class Measure>
double eval_box(const Measure& m, const Box& box) {
  return m.eval_box(box);
}

template <class Measure>
std::vector<Point> sample(const Measure& m, std::size_t n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("sample: n must be >= 1");
  std::vector<Point> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(m.sample(rng));
  return out;
}

struct BoxMassEstimate {
  double value;
  double std_error;
  std::size_t n;
};

/// Monte Carlo box probability with its standard error, for measures or
/// queries without a closed form (e.g. rotated boxes).
template <class Measure>
BoxMassEstimate mc_box_mass(const Measure& m, const Box& box, std::size_t n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("mc_box_mass: n must be >= 1");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (box.contains(m.sample(rng))) ++hits;
  const double p = static_cast<double>(hits) / static_cast<double>(n);
  const double se = std::sqrt(std::max(p * (1.0 - p), 1.0 / static_cast<double>(n)) /
                              static_cast<double>(n));
  return {p, se, n};
}

}  // namespace dip
