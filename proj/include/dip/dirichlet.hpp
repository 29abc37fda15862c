#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "dip/measures.hpp"
#include "dip/point.hpp"
#include "dip/rng.hpp"

namespace dip {

/// Parameter vector of a finite Dirichlet distribution.
struct DirichletParams {
  std::vector<double> a;

  explicit DirichletParams(std::vector<double> params) : a(std::move(params)) {
    if (a.size() < 2) throw std::invalid_argument("DirichletParams: need at least 2 components");
    for (double x : a)
      if (!(x > 0.0) || !std::isfinite(x))
        throw std::invalid_argument("DirichletParams: parameters must be positive");
  }
};

/// One Dirichlet draw as normalized independent Gamma(a_i, 1) variables.
inline std::vector<double> sample_dirichlet(const DirichletParams& params, Rng& rng) {
  return normalized_gamma_weights(params.a, rng);
}

/// Dirichlet process parameters: concentration and base measure. Posterior
/// parameters reuse the same type with the concentration alpha + m and the
/// mixture base.
struct DPParams {
  double concentration;
  MixtureBase base;

  DPParams(double c, MixtureBase b) : concentration(c), base(std::move(b)) {
    if (!(c > 0.0) || !std::isfinite(c))
      throw std::invalid_argument("DPParams: concentration must be positive");
  }
};

/// Conjugate posterior update: alpha* = alpha + m and the base mixture
/// p_m H + (1 - p_m) F_m with p_m = alpha / (alpha + m) and F_m the plain
/// empirical measure of the data. Exact algebra, no sampling.
inline DPParams dp_posterior_params(double alpha, const BaseMeasure& h,
                                    std::span<const Point> data) {
  if (!(alpha > 0.0) || !std::isfinite(alpha))
    throw std::invalid_argument("dp_posterior_params: alpha must be positive");
  const double m = static_cast<double>(data.size());
  if (data.empty()) return DPParams(alpha, MixtureBase(1.0, h));
  const double w = 1.0 / m;
  std::vector<Atom> atoms;
  atoms.reserve(data.size());
  for (const Point& x : data) {
    if (x.dim() != h.dim())
      throw std::invalid_argument("dp_posterior_params: data dimension mismatch");
    atoms.push_back({x, w});
  }
  return DPParams(alpha + m,
                  MixtureBase(alpha / (alpha + m), h, DiscreteMeasure(std::move(atoms))));
}

enum class TruncationMode { stick_breaking, finite_n };

struct TruncationInfo {
  TruncationMode mode;
  double eps = 0.0;       // stick-breaking residual tolerance
  double residual = 0.0;  // realized residual mass assigned to the last atom
  int n_atoms = 0;        // atom count (capacity N for finite_n)
};

/// A realized process path: a discrete measure plus how it was truncated.
struct TruncatedPath {
  DiscreteMeasure measure;
  TruncationInfo truncation;
};

/// Stick-breaking path sampler. Per round the draw order is: the Beta(1,
/// alpha) stick fraction, then the atom location from the base. Generation
/// stops once the unbroken stick mass falls to eps or below; that remainder
/// becomes one final atom drawn from the base, so weights sum to one.
inline TruncatedPath sample_dp_stick_breaking(const DPParams& params, double eps, Rng& rng) {
  if (!(eps > 0.0 && eps < 1.0))
    throw std::invalid_argument("sample_dp_stick_breaking: eps must lie in (0,1)");
  std::vector<Atom> atoms;
  double remaining = 1.0;
  while (remaining > eps) {
    const double v = rng.beta(1.0, params.concentration);
    const Point x = params.base.sample(rng);
    const double w = v * remaining;
    atoms.push_back({x, w});
    remaining -= w;
    if (remaining <= 0.0) {
      remaining = 0.0;
      break;
    }
  }
  const double residual = remaining;
  if (residual > 0.0) {
    atoms.push_back({params.base.sample(rng), residual});
  }
  TruncationInfo info{TruncationMode::stick_breaking, eps, residual,
                      static_cast<int>(atoms.size())};
  return {DiscreteMeasure(std::move(atoms)), info};
}

/// Finite-N path sampler: N atoms drawn i.i.d. from the base (all locations
/// first), then Dirichlet(alpha/N, ..., alpha/N) weights via normalized
/// Gamma(alpha/N, 1) jumps.
inline TruncatedPath sample_dp_finite(const DPParams& params, int n_atoms, Rng& rng) {
  if (n_atoms < 1) throw std::invalid_argument("sample_dp_finite: N must be >= 1");
  const std::size_t n = static_cast<std::size_t>(n_atoms);
  std::vector<Point> locations;
  locations.reserve(n);
  for (std::size_t i = 0; i < n; ++i) locations.push_back(params.base.sample(rng));

  std::vector<double> weights;
  if (n == 1) {
    weights.assign(1, 1.0);
  } else {
    const std::vector<double> shapes(n, params.concentration / static_cast<double>(n));
    weights = normalized_gamma_weights(shapes, rng);
  }

  std::vector<Atom> atoms;
  atoms.reserve(n);
  for (std::size_t i = 0; i < n; ++i) atoms.push_back({locations[i], weights[i]});
  TruncationInfo info{TruncationMode::finite_n, 0.0, 0.0, n_atoms};
  return {DiscreteMeasure(std::move(atoms)), info};
}

}  // namespace dip
