#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dip/measures.hpp"
#include "dip/point.hpp"
#include "dip/posterior.hpp"
#include "dip/rng.hpp"

namespace dip {

/// reps x n_boxes matrix of realized box probabilities, one row per path.
struct PathSample {
  std::size_t reps = 0;
  std::size_t n_boxes = 0;
  std::vector<double> values;  // row-major

  double at(std::size_t r, std::size_t b) const { return values[r * n_boxes + b]; }
  double& at(std::size_t r, std::size_t b) { return values[r * n_boxes + b]; }

  std::vector<double> column(std::size_t b) const {
    std::vector<double> col(reps);
    for (std::size_t r = 0; r < reps; ++r) col[r] = at(r, b);
    return col;
  }
};

/// Sample reps posterior paths and evaluate each on every box. Replica r
/// uses the derived stream rng.derive(r), so results do not depend on
/// evaluation order and can be replicated in parallel.
inline PathSample finite_dim_sample(const DipPosterior& posterior, std::span<const Box> boxes,
                                    std::size_t reps, const SamplerConfig& config,
                                    const Rng& rng) {
  if (reps < 1) throw std::invalid_argument("finite_dim_sample: reps must be >= 1");
  if (boxes.empty()) throw std::invalid_argument("finite_dim_sample: no boxes");
  PathSample out;
  out.reps = reps;
  out.n_boxes = boxes.size();
  out.values.resize(reps * boxes.size());
  for (std::size_t r = 0; r < reps; ++r) {
    Rng replica = rng.derive(r);
    const TruncatedPath path = sample_path(posterior, config, replica);
    for (std::size_t b = 0; b < boxes.size(); ++b)
      out.at(r, b) = path.measure.eval_box(boxes[b]);
  }
  return out;
}

/// Closed-form Dirichlet moments of the path probabilities on pairwise
/// disjoint boxes:
///   E[P(B)]        = H*(B)
///   Var[P(B)]      = H*(B) (1 - H*(B)) / (alpha* + 1)
///   E[P(B) P(C)]   = alpha*/(alpha* + 1) H*(B) H*(C)   (B, C disjoint).
/// Computed from the base mixture only, never sampled.
struct MomentOracle {
  std::vector<double> mean;
  std::vector<double> variance;
  std::vector<double> cross;  // row-major n x n, diagonal unused (0)

  double cross_at(std::size_t i, std::size_t j) const { return cross[i * mean.size() + j]; }
};

inline MomentOracle moment_oracle(double alpha_star, const MixtureBase& base,
                                  std::span<const Box> boxes) {
  if (!(alpha_star > 0.0)) throw std::invalid_argument("moment_oracle: alpha_star must be positive");
  for (std::size_t i = 0; i < boxes.size(); ++i)
    for (std::size_t j = i + 1; j < boxes.size(); ++j)
      if (!boxes_disjoint(boxes[i], boxes[j]))
        throw std::invalid_argument("moment_oracle: boxes must be pairwise disjoint");
  MomentOracle o;
  o.mean.resize(boxes.size());
  o.variance.resize(boxes.size());
  o.cross.assign(boxes.size() * boxes.size(), 0.0);
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const double p = base.eval_box(boxes[i]);
    o.mean[i] = p;
    o.variance[i] = p * (1.0 - p) / (alpha_star + 1.0);
  }
  const double factor = alpha_star / (alpha_star + 1.0);
  for (std::size_t i = 0; i < boxes.size(); ++i)
    for (std::size_t j = 0; j < boxes.size(); ++j)
      if (i != j) o.cross[i * boxes.size() + j] = factor * o.mean[i] * o.mean[j];
  return o;
}

/// Empirical-vs-analytic moment comparison. A z-score is the deviation of
/// the empirical statistic from its closed-form value in units of the Monte
/// Carlo standard error of that statistic; entries with zero deviation and
/// zero error report z = 0.
struct MomentCheck {
  std::size_t reps = 0;
  std::vector<double> mean_z;
  std::vector<double> var_z;
  std::vector<double> cross_z;  // row-major, i < j populated
  std::size_t n_boxes = 0;

  double max_abs_z() const {
    double m = 0.0;
    for (double z : mean_z) m = std::max(m, std::abs(z));
    for (double z : var_z) m = std::max(m, std::abs(z));
    for (double z : cross_z) m = std::max(m, std::abs(z));
    return m;
  }
  bool pass(double threshold = 4.0) const { return max_abs_z() <= threshold; }
};

namespace detail {

// Deviations below the weight-normalization tolerance are below the
// resolution of the weight algebra itself and count as exact agreement.
inline double safe_z(double deviation, double se) {
  if (std::abs(deviation) <= kWeightTol) return 0.0;
  if (se > 0.0) return deviation / se;
  return std::numeric_limits<double>::infinity();
}

}  // namespace detail

/// Moment check against precomputed path samples. The Dirichlet moment
/// identities assume the finite-dimensional Dirichlet law on the given
/// boxes; that holds exactly for trivial groups (plain DP paths) and for
/// group-invariant sets.
inline MomentCheck check_moments_from_sample(double alpha_star, const MixtureBase& base,
                                             std::span<const Box> boxes,
                                             const PathSample& sample) {
  if (sample.n_boxes != boxes.size())
    throw std::invalid_argument("check_moments_from_sample: box count mismatch");
  const MomentOracle oracle = moment_oracle(alpha_star, base, boxes);
  const double n = static_cast<double>(sample.reps);

  MomentCheck check;
  check.reps = sample.reps;
  check.n_boxes = boxes.size();
  check.mean_z.resize(boxes.size());
  check.var_z.resize(boxes.size());
  check.cross_z.assign(boxes.size() * boxes.size(), 0.0);

  std::vector<double> means(boxes.size());
  for (std::size_t b = 0; b < boxes.size(); ++b) {
    CompensatedSum s;
    for (std::size_t r = 0; r < sample.reps; ++r) s.add(sample.at(r, b));
    means[b] = s.value() / n;

    CompensatedSum s2, s4;
    for (std::size_t r = 0; r < sample.reps; ++r) {
      const double d = sample.at(r, b) - means[b];
      s2.add(d * d);
      s4.add(d * d * d * d);
    }
    const double var = s2.value() / n;
    const double m4 = s4.value() / n;

    const double se_mean = std::sqrt(var / n);
    check.mean_z[b] = detail::safe_z(means[b] - oracle.mean[b], se_mean);

    const double var_of_var = std::max(m4 - var * var, 0.0) / n;
    check.var_z[b] = detail::safe_z(var - oracle.variance[b], std::sqrt(var_of_var));
  }

  for (std::size_t i = 0; i < boxes.size(); ++i) {
    for (std::size_t j = i + 1; j < boxes.size(); ++j) {
      CompensatedSum sp, sp2;
      for (std::size_t r = 0; r < sample.reps; ++r) {
        const double prod = sample.at(r, i) * sample.at(r, j);
        sp.add(prod);
        sp2.add(prod * prod);
      }
      const double mean_p = sp.value() / n;
      const double var_p = std::max(sp2.value() / n - mean_p * mean_p, 0.0);
      check.cross_z[i * boxes.size() + j] =
          detail::safe_z(mean_p - oracle.cross_at(i, j), std::sqrt(var_p / n));
    }
  }
  return check;
}

inline MomentCheck check_moments(const DipPosterior& posterior, std::span<const Box> boxes,
                                 std::size_t reps, const SamplerConfig& config, const Rng& rng) {
  const PathSample sample = finite_dim_sample(posterior, boxes, reps, config, rng);
  return check_moments_from_sample(posterior.alpha_star(), posterior.base(), boxes, sample);
}

/// Result of an invariance scan: the largest |P(B) - P(g^{-1} B)| over the
/// group and the boundary-safe boxes, plus which boxes were skipped because
/// an atom (original or transformed) sat within the safety buffer of a face.
struct InvarianceReport {
  double max_gap = 0.0;
  std::vector<std::size_t> skipped_boxes;
};

inline InvarianceReport invariance_gap(const DiscreteMeasure& measure, const FiniteGroup& group,
                                       std::span<const Box> boxes, double buffer = 1e-9) {
  if (measure.dim() != group.dim())
    throw std::invalid_argument("invariance_gap: dimension mismatch");
  // Transformed atom positions, one vector per group element.
  std::vector<std::vector<Point>> images(static_cast<std::size_t>(group.order()));
  for (std::size_t j = 0; j < images.size(); ++j) {
    images[j].reserve(measure.size());
    const Isometry& g = group.element(static_cast<int>(j));
    for (const Atom& a : measure.atoms()) images[j].push_back(g.apply(a.point));
  }

  InvarianceReport report;
  for (std::size_t b = 0; b < boxes.size(); ++b) {
    const Box& box = boxes[b];
    bool safe = true;
    for (const auto& pts : images) {
      for (const Point& p : pts)
        if (box.boundary_distance(p) <= buffer) {
          safe = false;
          break;
        }
      if (!safe) break;
    }
    if (!safe) {
      report.skipped_boxes.push_back(b);
      continue;
    }
    const double p0 = measure.eval_box(box);
    for (std::size_t j = 1; j < images.size(); ++j) {
      double pj = 0.0;
      for (std::size_t i = 0; i < measure.size(); ++i)
        if (box.contains(images[j][i])) pj += measure.atoms()[i].weight;
      report.max_gap = std::max(report.max_gap, std::abs(p0 - pj));
    }
  }
  return report;
}

/// Two-sample Kolmogorov-Smirnov distance (sup gap of empirical CDFs).
inline double ks_distance(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_distance: empty sample");
  std::vector<double> x(a.begin(), a.end());
  std::vector<double> y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] <= v) ++i;
    while (j < y.size() && y[j] <= v) ++j;
    const double fx = static_cast<double>(i) / static_cast<double>(x.size());
    const double fy = static_cast<double>(j) / static_cast<double>(y.size());
    d = std::max(d, std::abs(fx - fy));
  }
  return d;
}

/// One statistic of a sweep: the sweep level, the box it refers to (-1 for
/// aggregates), the statistic name, its value and a Monte Carlo scale (0 for
/// deterministic quantities).
struct ReportRow {
  double level;
  int box;
  std::string stat;
  double value;
  double sigma;
};

struct ConvergenceReport {
  std::string sweep;  // "k" or "m"
  std::vector<double> levels;
  std::size_t reps = 0;
  std::vector<ReportRow> rows;
};

/// Base-measure gaps and per-box KS distances between the k-group posterior
/// and the rotation-limit posterior, for each k level. Derived streams: the
/// limit sampler uses stream 2*L (L = number of levels) and level i uses
/// stream i, all from the passed master generator.
inline ConvergenceReport sweep_k(double alpha, const BaseMeasure& h,
                                 std::span<const Point> data, std::span<const int> k_levels,
                                 std::span<const Box> boxes, std::size_t reps,
                                 const SamplerConfig& config, const Rng& rng) {
  if (k_levels.empty()) throw std::invalid_argument("sweep_k: no levels");
  for (std::size_t i = 0; i + 1 < k_levels.size(); ++i)
    if (k_levels[i] >= k_levels[i + 1])
      throw std::invalid_argument("sweep_k: levels must be strictly increasing");

  const DipPosterior limit = fit_limit(alpha, h, data);
  const PathSample limit_sample =
      finite_dim_sample(limit, boxes, reps, config, rng.derive(2 * k_levels.size()));

  ConvergenceReport report;
  report.sweep = "k";
  report.reps = reps;
  const double ks_sigma = std::sqrt(2.0 / static_cast<double>(reps));

  for (std::size_t li = 0; li < k_levels.size(); ++li) {
    const int k = k_levels[li];
    report.levels.push_back(static_cast<double>(k));
    const DipPosterior post = fit(alpha, h, data, make_cyclic_group_2d(k));
    const PathSample sample = finite_dim_sample(post, boxes, reps, config, rng.derive(li));
    for (std::size_t b = 0; b < boxes.size(); ++b) {
      const double gap = std::abs(post.base().eval_box(boxes[b]) - limit.base().eval_box(boxes[b]));
      report.rows.push_back({static_cast<double>(k), static_cast<int>(b), "base_gap", gap, 0.0});
      const double ks = ks_distance(sample.column(b), limit_sample.column(b));
      report.rows.push_back({static_cast<double>(k), static_cast<int>(b), "ks", ks, ks_sigma});
    }
  }
  return report;
}

/// Fixed evaluation grid for consistency sweeps: an 8 x 8 partition of
/// (-3, 3]^2 into half-open cells.
inline std::vector<Box> default_box_grid_2d() {
  const std::vector<double> cuts{-3.0, -2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0, 3.0};
  std::vector<Box> grid;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
    for (std::size_t j = 0; j + 1 < cuts.size(); ++j)
      grid.emplace_back(Point(cuts[i], cuts[j]), Point(cuts[i + 1], cuts[j + 1]));
  return grid;
}

/// Large-sample consistency sweep: for each m, draw a sample of size m from
/// the (spherically symmetric) truth, fit the k-group posterior, and record
/// the sup over the fixed grid of |H*(B) - F_true(B)|. Level i draws its
/// data from stream i of the master generator.
inline ConvergenceReport sweep_m(const BaseMeasure& f_true, double alpha, const BaseMeasure& h,
                                 std::span<const int> m_levels, int group_order, const Rng& rng) {
  if (m_levels.empty()) throw std::invalid_argument("sweep_m: no levels");
  for (std::size_t i = 0; i + 1 < m_levels.size(); ++i)
    if (m_levels[i] >= m_levels[i + 1])
      throw std::invalid_argument("sweep_m: levels must be strictly increasing");
  if (f_true.dim() != 2 || !f_true.rotation_invariant())
    throw std::invalid_argument("sweep_m: F_true must be 2-D and spherically symmetric");
  if (group_order < 1) throw std::invalid_argument("sweep_m: group order must be >= 1");

  const std::vector<Box> grid = default_box_grid_2d();
  const FiniteGroup group = make_cyclic_group_2d(group_order);

  ConvergenceReport report;
  report.sweep = "m";
  report.reps = 1;
  for (std::size_t li = 0; li < m_levels.size(); ++li) {
    const int m = m_levels[li];
    report.levels.push_back(static_cast<double>(m));
    Rng stream = rng.derive(li);
    const std::vector<Point> data = sample(f_true, static_cast<std::size_t>(m), stream);
    const DipPosterior post = fit(alpha, h, data, group);
    double sup = 0.0;
    for (const Box& box : grid)
      sup = std::max(sup, std::abs(post.base().eval_box(box) - f_true.eval_box(box)));
    report.rows.push_back({static_cast<double>(m), -1, "sup_base_gap", sup, 0.0});
  }
  return report;
}

}  // namespace dip
