// Acceptance suite: one test case per criterion, each printing a PASS/FAIL
// line. Run via ctest (-R acceptance) or directly; the binary exercises the
// library end to end, including the installed CLI (DIP_CLI_PATH).
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "dip/dip.hpp"

using namespace dip;

namespace {

void report(int criterion, const std::string& name, bool ok) {
  std::printf("[criterion %2d] %-34s %s\n", criterion, name.c_str(), ok ? "PASS" : "FAIL");
  std::fflush(stdout);
}

Box box2(double x0, double y0, double x1, double y1) {
  return Box(Point(x0, y0), Point(x1, y1));
}

// The frozen evaluation boxes for the convergence criterion: four boxes of
// moderate gaussian mass drawn once from a fixed generator.
std::vector<Box> frozen_gauss_boxes(std::uint64_t seed, std::size_t count) {
  const BaseMeasure h = BaseMeasure::gauss2d(1.0);
  Rng rng(seed);
  std::vector<Box> boxes;
  while (boxes.size() < count) {
    const double x0 = rng.uniform(-2.0, 1.0);
    const double y0 = rng.uniform(-2.0, 1.0);
    const Box b(Point(x0, y0), Point(x0 + rng.uniform(1.0, 3.0), y0 + rng.uniform(1.0, 3.0)));
    const double mass = h.eval_box(b);
    if (mass > 0.2 && mass < 0.8) boxes.push_back(b);
  }
  return boxes;
}

std::vector<Point> gauss_data(std::uint64_t seed, int m) {
  Rng rng(seed);
  std::vector<Point> data;
  for (int i = 0; i < m; ++i) data.push_back(Point(rng.normal(), rng.normal()));
  return data;
}

// 10% weight distortion of a path measure: atoms in the half-plane x <= 0
// gain a factor 1.1, then the measure is renormalized.
DiscreteMeasure distort_weights(const DiscreteMeasure& m, double factor) {
  std::vector<Atom> atoms = m.atoms();
  double total = 0.0;
  for (Atom& a : atoms) {
    if (a.point[0] <= 0.0) a.weight *= factor;
    total += a.weight;
  }
  for (Atom& a : atoms) a.weight /= total;
  return DiscreteMeasure(std::move(atoms));
}

struct MeanVar {
  double mean;
  double var;
  double se_mean;
  double se_var;
};

MeanVar mean_var(const std::vector<double>& xs) {
  const double n = static_cast<double>(xs.size());
  CompensatedSum s;
  for (double x : xs) s.add(x);
  const double mean = s.value() / n;
  CompensatedSum s2, s4;
  for (double x : xs) {
    const double d = x - mean;
    s2.add(d * d);
    s4.add(d * d * d * d);
  }
  const double var = s2.value() / n;
  const double m4 = s4.value() / n;
  return {mean, var, std::sqrt(var / n), std::sqrt(std::max(m4 - var * var, 0.0) / n)};
}

}  // namespace

TEST_CASE("criterion 1: posterior base equals the direct sum") {
  Rng rng(11001);
  const int ks[] = {1, 2, 4, 8};
  bool ok = true;
  double worst = 0.0;
  for (int cfg = 0; cfg < 50; ++cfg) {
    const double alpha = rng.uniform(0.1, 10.0);
    const int m = 1 + static_cast<int>(rng.uniform_index(20));
    const FiniteGroup group = make_cyclic_group_2d(ks[cfg % 4]);
    const BaseMeasure h = (cfg % 2 == 0) ? BaseMeasure::gauss2d(1.0) : BaseMeasure::disk(1.5);
    std::vector<Point> data;
    for (int i = 0; i < m; ++i) data.push_back(Point(rng.normal(), rng.normal()));
    const DipPosterior post = fit(alpha, h, data, group);
    for (int t = 0; t < 20; ++t) {
      const double x0 = rng.uniform(-2.5, 2.5), y0 = rng.uniform(-2.5, 2.5);
      const Box b = box2(x0, y0, x0 + rng.uniform(0.2, 2.5), y0 + rng.uniform(0.2, 2.5));
      double count = 0.0;
      for (const Point& x : data)
        for (const Isometry& e : group.elements())
          if (b.contains(e.apply(x))) count += 1.0;
      const double direct = (alpha * h.eval_box(b) + count / group.order()) /
                            (alpha + static_cast<double>(m));
      const double diff = std::abs(post.base().eval_box(b) - direct);
      worst = std::max(worst, diff);
      if (diff > 1e-12) ok = false;
    }
  }
  report(1, "posterior base exactness", ok);
  CHECK(ok);
  CHECK(worst <= 1e-12);
}

TEST_CASE("criterion 2: posterior algebra and trivial-group equivalence") {
  bool ok = true;
  Rng rng(11002);
  for (int cfg = 0; cfg < 20; ++cfg) {
    const double alpha = rng.uniform(0.1, 10.0);
    const int m = static_cast<int>(rng.uniform_index(21));
    const std::vector<Point> data = gauss_data(rng.next_u64(), m);
    const BaseMeasure h = BaseMeasure::gauss2d(1.0);
    const DipPosterior dip1 = fit(alpha, h, data, make_cyclic_group_2d(1));
    const DPParams dp = dp_posterior_params(alpha, h, data);
    if (dip1.alpha_star() != alpha + m) ok = false;
    if (m > 0 && dip1.p_cont() != alpha / (alpha + m)) ok = false;
    if (dip1.alpha_star() != dp.concentration) ok = false;
    if (dip1.p_cont() != dp.base.p_cont()) ok = false;
    if (m > 0) {
      const auto& a = dip1.base().discrete().atoms();
      const auto& b = dp.base.discrete().atoms();
      if (a.size() != b.size()) ok = false;
      for (std::size_t i = 0; i < a.size() && ok; ++i)
        if (!(a[i].point == b[i].point) || a[i].weight != b[i].weight) ok = false;
    }
  }
  report(2, "posterior update algebra", ok);
  CHECK(ok);
}

TEST_CASE("criterion 3: prior moment laws with a distorted negative control") {
  const BaseMeasure h = BaseMeasure::gauss2d(1.0);
  const std::vector<Box> boxes{box2(-0.8, -0.8, 0.8, 0.8), box2(-2.0, -2.0, 0.0, 2.0),
                               box2(-0.4, -2.2, 2.2, 0.6)};
  const std::size_t reps = 10000;
  bool ok = true;
  for (double alpha : {0.5, 1.0, 5.0}) {
    const DPParams prior(alpha, MixtureBase(1.0, h));
    std::vector<std::vector<double>> cols(boxes.size());
    const Rng master(11003 + static_cast<std::uint64_t>(alpha * 10));
    for (std::size_t r = 0; r < reps; ++r) {
      Rng replica = master.derive(r);
      const TruncatedPath path = sample_dp_stick_breaking(prior, 1e-6, replica);
      for (std::size_t b = 0; b < boxes.size(); ++b)
        cols[b].push_back(path.measure.eval_box(boxes[b]));
    }
    for (std::size_t b = 0; b < boxes.size(); ++b) {
      const double hb = h.eval_box(boxes[b]);
      const double beta_mean = hb;
      const double beta_var = hb * (1.0 - hb) / (alpha + 1.0);
      const MeanVar mv = mean_var(cols[b]);
      if (std::abs(mv.mean - beta_mean) > 4.0 * mv.se_mean) ok = false;
      if (std::abs(mv.var - beta_var) > 4.0 * mv.se_var) ok = false;
    }
  }

  // negative control: 10% weight distortion must break at least one moment
  {
    const double alpha = 5.0;
    const DPParams prior(alpha, MixtureBase(1.0, h));
    std::vector<std::vector<double>> cols(boxes.size());
    const Rng master(11099);
    for (std::size_t r = 0; r < reps; ++r) {
      Rng replica = master.derive(r);
      const DiscreteMeasure bad =
          distort_weights(sample_dp_stick_breaking(prior, 1e-6, replica).measure, 1.1);
      for (std::size_t b = 0; b < boxes.size(); ++b) cols[b].push_back(bad.eval_box(boxes[b]));
    }
    double max_z = 0.0;
    for (std::size_t b = 0; b < boxes.size(); ++b) {
      const double hb = h.eval_box(boxes[b]);
      const MeanVar mv = mean_var(cols[b]);
      max_z = std::max(max_z, std::abs(mv.mean - hb) / mv.se_mean);
      max_z = std::max(max_z, std::abs(mv.var - hb * (1.0 - hb) / (alpha + 1.0)) / mv.se_var);
    }
    if (!(max_z > 4.0)) ok = false;
  }
  report(3, "prior Beta moment laws", ok);
  CHECK(ok);
}

TEST_CASE("criterion 4: product-moment identity on disjoint box pairs") {
  struct PairConfig {
    DipPosterior post;
    std::vector<Box> pair;
  };
  std::vector<PairConfig> configs;

  // the analytic spot pair: alpha* = 1, H*(C) = H*(D) = 0.25
  const DipPosterior spot = fit(1.0, BaseMeasure::unit_square(), {}, make_cyclic_group_2d(1));
  configs.push_back({spot, {box2(0.0, 0.0, 0.5, 0.5), box2(0.5, 0.0, 1.0, 0.5)}});

  const BaseMeasure g = BaseMeasure::gauss2d(1.0);
  configs.push_back({fit(2.0, g, gauss_data(11041, 3), make_cyclic_group_2d(1)),
                     {box2(-2.0, -2.0, 0.0, 2.0), box2(0.0, -2.0, 2.0, 2.0)}});
  configs.push_back({fit(0.5, BaseMeasure::disk(2.0), gauss_data(11042, 5), make_cyclic_group_2d(1)),
                     {box2(-1.5, -1.5, 0.2, 0.3), box2(0.3, -1.0, 1.8, 1.5)}});
  configs.push_back({fit(1.0, g, gauss_data(11043, 8), make_cyclic_group_2d(1)),
                     {box2(-1.0, -1.0, 0.5, 0.5), box2(0.6, -0.5, 2.0, 1.5)}});
  configs.push_back({fit(5.0, g, gauss_data(11044, 2), make_cyclic_group_2d(1)),
                     {box2(-2.2, 0.0, 0.0, 1.8), box2(0.1, 0.1, 1.9, 2.1)}});

  const std::size_t reps = 10000;
  bool ok = true;

  // the spot value itself is exact arithmetic
  const MomentOracle spot_oracle =
      moment_oracle(configs[0].post.alpha_star(), configs[0].post.base(), configs[0].pair);
  if (spot_oracle.cross_at(0, 1) != 0.03125) ok = false;

  for (std::size_t c = 0; c < configs.size(); ++c) {
    const DipPosterior& post = configs[c].post;
    const std::vector<Box>& pair = configs[c].pair;
    const MomentOracle oracle = moment_oracle(post.alpha_star(), post.base(), pair);
    const PathSample sample = finite_dim_sample(post, pair, reps, SamplerConfig::stick(1e-6),
                                                Rng(11050 + c));
    CompensatedSum sp, sp2;
    for (std::size_t r = 0; r < reps; ++r) {
      const double v = sample.at(r, 0) * sample.at(r, 1);
      sp.add(v);
      sp2.add(v * v);
    }
    const double mean = sp.value() / static_cast<double>(reps);
    const double se =
        std::sqrt(std::max(sp2.value() / static_cast<double>(reps) - mean * mean, 0.0) /
                  static_cast<double>(reps));
    if (std::abs(mean - oracle.cross_at(0, 1)) > 4.0 * se) ok = false;
  }
  report(4, "product-moment identity", ok);
  CHECK(ok);
}

TEST_CASE("criterion 5: sampled paths are exactly group invariant") {
  struct GroupCase {
    DipPosterior post;
    double scale;
  };
  std::vector<GroupCase> cases;
  cases.push_back({fit(1.0, BaseMeasure::disk(2.0), gauss_data(11051, 4), make_cyclic_group_2d(3)), 2.5});
  cases.push_back({fit(1.0, BaseMeasure::gauss2d(1.0), gauss_data(11052, 5), make_cyclic_group_2d(4)), 3.0});
  cases.push_back({fit(0.5, BaseMeasure::gauss2d(1.0), gauss_data(11053, 2), make_cyclic_group_2d(7)), 3.0});
  {
    Rng r(11054);
    std::vector<double> xs{r.normal(), r.normal(), r.normal()};
    cases.push_back({fit_univariate_symmetric(1.0, BaseMeasure::gauss1d(0.7, 1.0), xs, 0.7), 4.0});
  }
  {
    Rng r(11055);
    std::vector<Point> d3;
    for (int i = 0; i < 3; ++i) d3.push_back(Point(r.normal(), r.normal(), r.normal()));
    cases.push_back({fit(1.0, BaseMeasure::gauss3d(1.0), d3, make_cyclic_group_3d(5, {0.0, 1.0, 0.0})), 3.0});
  }

  bool ok = true;
  std::size_t total_safe = 0;
  double worst = 0.0;
  for (std::size_t c = 0; c < cases.size(); ++c) {
    const DipPosterior& post = cases[c].post;
    const FiniteGroup& group = *post.group();
    Rng box_rng(11060 + c);
    std::vector<Box> boxes;
    const int dim = post.base().dim();
    while (boxes.size() < 260) {
      std::vector<double> lo(static_cast<std::size_t>(dim)), hi(static_cast<std::size_t>(dim));
      for (int i = 0; i < dim; ++i) {
        const double a = box_rng.uniform(-cases[c].scale, cases[c].scale);
        lo[static_cast<std::size_t>(i)] = a;
        hi[static_cast<std::size_t>(i)] = a + box_rng.uniform(0.1, cases[c].scale);
      }
      boxes.emplace_back(Point::from_span(lo), Point::from_span(hi));
    }
    const Rng master(11070 + c);
    for (int r = 0; r < 10; ++r) {
      Rng replica = master.derive(static_cast<std::uint64_t>(r));
      const TruncatedPath path = sample_path(post, SamplerConfig::stick(1e-6), replica);
      const InvarianceReport rep = invariance_gap(path.measure, group, boxes);
      const std::size_t safe = boxes.size() - rep.skipped_boxes.size();
      total_safe += safe;
      if (safe < 200) ok = false;
      worst = std::max(worst, rep.max_gap);
      if (rep.max_gap > 1e-9) ok = false;
    }
  }
  report(5, "path invariance (gap <= 1e-9)", ok);
  CHECK(ok);
  CHECK(worst <= 1e-9);
  CHECK(total_safe >= 200u * 50u);
}

TEST_CASE("criterion 6: convergence of the k-group posterior to the limit") {
  const BaseMeasure h = BaseMeasure::gauss2d(1.0);
  const std::vector<Box> boxes = frozen_gauss_boxes(1001, 4);
  const std::vector<Point> data = gauss_data(7, 5);
  const DipPosterior limit = fit_limit(1.0, h, data);

  bool ok = true;
  std::vector<double> prev(boxes.size(), 1e18);
  double k256_max = 0.0;
  for (int k : {4, 16, 64, 256}) {
    const DipPosterior post = fit(1.0, h, data, make_cyclic_group_2d(k));
    for (std::size_t b = 0; b < boxes.size(); ++b) {
      const double gap =
          std::abs(post.base().eval_box(boxes[b]) - limit.base().eval_box(boxes[b]));
      // analytic base gaps carry no MC noise, so non-increasing is strict
      if (gap > prev[b]) ok = false;
      prev[b] = gap;
      if (k == 256) k256_max = std::max(k256_max, gap);
    }
  }
  if (!(k256_max < 0.02)) ok = false;

  const std::size_t reps = 10000;
  const SamplerConfig cfg = SamplerConfig::stick(1e-6);
  const DipPosterior p256 = fit(1.0, h, data, make_cyclic_group_2d(256));
  const PathSample s256 = finite_dim_sample(p256, boxes, reps, cfg, Rng(601));
  const PathSample slim = finite_dim_sample(limit, boxes, reps, cfg, Rng(602));
  double ks_max = 0.0;
  for (std::size_t b = 0; b < boxes.size(); ++b)
    ks_max = std::max(ks_max, ks_distance(s256.column(b), slim.column(b)));
  if (!(ks_max <= 0.05)) ok = false;

  report(6, "k -> infinity convergence", ok);
  CHECK(ok);
  CHECK(k256_max < 0.02);
  CHECK(ks_max <= 0.05);
}

TEST_CASE("criterion 7: consistency as the sample grows") {
  const BaseMeasure f_true = BaseMeasure::gauss2d(1.0);
  const BaseMeasure h = BaseMeasure::disk(2.0);
  const std::vector<Box> grid = default_box_grid_2d();
  const FiniteGroup g4 = make_cyclic_group_2d(4);
  int wins = 0;
  for (std::uint64_t s = 1; s <= 20; ++s) {
    Rng rng(700 + s);
    Rng r10 = rng.derive(0);
    Rng r1000 = rng.derive(1);
    const std::vector<Point> d10 = sample(f_true, 10, r10);
    const std::vector<Point> d1000 = sample(f_true, 1000, r1000);
    auto supgap = [&](const std::vector<Point>& d) {
      const DipPosterior p = fit(1.0, h, d, g4);
      double sup = 0.0;
      for (const Box& b : grid)
        sup = std::max(sup, std::abs(p.base().eval_box(b) - f_true.eval_box(b)));
      return sup;
    };
    if (supgap(d1000) < supgap(d10)) ++wins;
  }
  const bool ok = wins >= 18;
  report(7, "large-m consistency", ok);
  CHECK(ok);
}

TEST_CASE("criterion 8: stick-breaking and finite-N sample the same law") {
  const BaseMeasure h = BaseMeasure::gauss2d(1.0);
  const std::vector<Box> boxes{box2(-0.8, -0.8, 0.8, 0.8), box2(-2.0, -2.0, 0.3, 2.0),
                               box2(-0.4, -2.2, 2.2, 0.6)};
  const DPParams prior(2.0, MixtureBase(1.0, h));
  const std::size_t reps = 10000;
  std::vector<std::vector<double>> sv(boxes.size()), fv(boxes.size());
  for (std::size_t r = 0; r < reps; ++r) {
    Rng r1 = Rng(603).derive(r);
    Rng r2 = Rng(604).derive(r);
    const TruncatedPath ps = sample_dp_stick_breaking(prior, 1e-6, r1);
    const TruncatedPath pf = sample_dp_finite(prior, 2000, r2);
    for (std::size_t b = 0; b < boxes.size(); ++b) {
      sv[b].push_back(ps.measure.eval_box(boxes[b]));
      fv[b].push_back(pf.measure.eval_box(boxes[b]));
    }
  }
  double ks_max = 0.0;
  for (std::size_t b = 0; b < boxes.size(); ++b)
    ks_max = std::max(ks_max, ks_distance(sv[b], fv[b]));
  const bool ok = ks_max <= 0.02;
  report(8, "sampler cross-validation", ok);
  CHECK(ok);
}

TEST_CASE("criterion 9: euler product matrix identity") {
  Rng rng(11090);
  bool ok = true;
  for (int rep = 0; rep < 100; ++rep) {
    const double tx = rng.uniform(-10.0, 10.0);
    const double ty = rng.uniform(-10.0, 10.0);
    const double tz = rng.uniform(-10.0, 10.0);
    const Mat3 closed = Rotation3(tx, ty, tz).matrix();
    const Mat3 product = rot_x(tx) * rot_y(ty) * rot_z(tz);
    if (closed.max_abs_diff(product) > 1e-12) ok = false;
  }
  report(9, "closed-form rotation product", ok);
  CHECK(ok);
}

TEST_CASE("criterion 10: CLI runs are byte-identical given a seed") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "dip-acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string cli = DIP_CLI_PATH;

  auto run = [&](const std::string& args, const std::string& log) {
    const std::string cmd = cli + " " + args + " > " + (dir / log).string() + " 2>&1";
    return std::system(cmd.c_str());
  };
  auto same_bytes = [&](const std::string& a, const std::string& b) {
    return read_text_file((dir / a).string()) == read_text_file((dir / b).string());
  };

  bool ok = true;
  auto twice = [&](const std::string& args_tpl, const std::string& tag,
                   const std::vector<std::string>& outputs) {
    for (int pass = 1; pass <= 2; ++pass) {
      std::string args = args_tpl;
      std::string::size_type pos;
      while ((pos = args.find("{}")) != std::string::npos)
        args.replace(pos, 2, (dir / (tag + std::to_string(pass))).string());
      if (run(args, tag + "_log" + std::to_string(pass) + ".txt") != 0) ok = false;
    }
    for (const std::string& out : outputs)
      if (!same_bytes(tag + "1" + out, tag + "2" + out)) ok = false;
  };

  // {}* expands to a per-pass prefix so the two runs write separate files
  twice("gen --dist gauss2d --m 50 --seed 42 --out {}.csv", "gen", {".csv"});
  twice("gen --dist gauss1d --m 0 --seed 1 --out {}.csv", "genempty", {".csv"});

  // a fixed data file for the fit-based commands
  run("gen --dist gauss2d --m 6 --seed 9 --out " + (dir / "data.csv").string(), "setup1.txt");
  twice("fit --alpha 1.5 --base disk --radius 2 --group cyclic2d:4 --data " +
            (dir / "data.csv").string() + " --out {}.json",
        "fit", {".json"});

  run("fit --alpha 1 --base gauss2d --group cyclic2d:3 --data " + (dir / "data.csv").string() +
          " --out " + (dir / "post.json").string(),
      "setup2.txt");
  twice("sample --posterior " + (dir / "post.json").string() +
            " --sampler stick --eps 1e-6 --reps 5 --seed 7 --out {}.jsonl",
        "samstick", {".jsonl"});
  twice("sample --posterior " + (dir / "post.json").string() +
            " --sampler finite --n-atoms 200 --reps 3 --seed 8 --out {}.jsonl",
        "samfin", {".jsonl"});

  twice("converge --mode k --alpha 1 --base gauss2d --data " + (dir / "data.csv").string() +
            " --k-levels 4,16 --reps 150 --n-boxes 2 --seed 21 --out {}.csv",
        "convk", {".csv"});
  twice("converge --mode m --alpha 1 --base disk --radius 2 --f-true gauss2d "
        "--m-levels 10,50 --seed 4 --out {}.csv",
        "convm", {".csv"});

  // check writes no files; its stdout must still be reproducible
  run("check --kind moments --posterior " + (dir / "post.json").string() +
          " --reps 400 --seed 5",
      "check1.txt");
  run("check --kind moments --posterior " + (dir / "post.json").string() +
          " --reps 400 --seed 5",
      "check2.txt");
  if (!same_bytes("check1.txt", "check2.txt")) ok = false;

  report(10, "CLI determinism", ok);
  CHECK(ok);
  fs::remove_all(dir);
}
