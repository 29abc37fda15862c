// dip: command-line front end for Dirichlet invariant process simulation.
//
// Subcommands: gen, fit, sample, converge, check. Every command is
// deterministic given its flags and --seed; repeated runs produce
// byte-identical output files. Exit codes: 0 success, 1 check failure,
// 2 usage error, 3 I/O error.

#include <cstdint>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "dip/dip.hpp"

namespace {

using dip::BaseMeasure;
using dip::Box;
using dip::DipPosterior;
using dip::FiniteGroup;
using dip::Point;
using dip::Rng;
using dip::SamplerConfig;

struct CheckFailed {};

BaseMeasure make_base(const std::string& kind, double sigma, double radius, double mu) {
  if (kind == "gauss1d") return BaseMeasure::gauss1d(mu, sigma);
  if (kind == "gauss2d") return BaseMeasure::gauss2d(sigma);
  if (kind == "gauss3d") return BaseMeasure::gauss3d(sigma);
  if (kind == "disk") return BaseMeasure::disk(radius);
  if (kind == "square") return BaseMeasure::unit_square();
  throw CLI::ValidationError("--base", "unknown base kind '" + kind + "'");
}

// Group specs: cyclic2d:K | reflection:MU | cyclic3d:K:AX:AY:AZ | limit.
struct ParsedGroup {
  bool limit = false;
  std::optional<FiniteGroup> group;
};

ParsedGroup parse_group(const std::string& spec) {
  std::vector<std::string> parts;
  std::istringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(item);
  if (parts.empty()) throw CLI::ValidationError("--group", "empty group spec");
  try {
    if (parts[0] == "limit" && parts.size() == 1) return {true, std::nullopt};
    if (parts[0] == "cyclic2d" && parts.size() == 2)
      return {false, dip::make_cyclic_group_2d(std::stoi(parts[1]))};
    if (parts[0] == "reflection" && parts.size() == 2)
      return {false, dip::make_reflection_group(std::stod(parts[1]))};
    if (parts[0] == "cyclic3d" && parts.size() == 5) {
      std::array<double, 3> axis{std::stod(parts[2]), std::stod(parts[3]), std::stod(parts[4])};
      const double n = std::sqrt(axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]);
      if (n == 0.0) throw std::invalid_argument("zero axis");
      for (double& c : axis) c /= n;
      return {false, dip::make_cyclic_group_3d(std::stoi(parts[1]), axis)};
    }
  } catch (const CLI::Error&) {
    throw;
  } catch (const std::exception& e) {
    throw CLI::ValidationError("--group", std::string("bad group spec: ") + e.what());
  }
  throw CLI::ValidationError("--group",
                             "expected cyclic2d:K | reflection:MU | cyclic3d:K:AX:AY:AZ | limit");
}

double base_scale(const BaseMeasure& h) {
  switch (h.kind()) {
    case dip::BaseKind::uniform_disk: return 1.2 * h.radius();
    case dip::BaseKind::uniform_unit_square: return 1.5;
    case dip::BaseKind::gauss1d_symmetric: return std::abs(h.mu()) + 3.0 * h.sigma();
    case dip::BaseKind::gauss2d_isotropic:
    case dip::BaseKind::gauss3d_isotropic: return 3.0 * h.sigma();
  }
  return 3.0;
}

double measure_scale(const DipPosterior& post) {
  double s = base_scale(post.base().continuous());
  for (const Point& x : post.data())
    for (int i = 0; i < x.dim(); ++i) s = std::max(s, std::abs(x[i]) + 0.5);
  return s;
}

std::vector<Box> random_boxes(int dim, int count, double scale, Rng& rng) {
  std::vector<Box> boxes;
  while (static_cast<int>(boxes.size()) < count) {
    std::vector<double> lo(static_cast<std::size_t>(dim)), hi(static_cast<std::size_t>(dim));
    for (int i = 0; i < dim; ++i) {
      const double a = rng.uniform(-scale, scale);
      const double w = rng.uniform(0.05 * scale, scale);
      lo[static_cast<std::size_t>(i)] = a;
      hi[static_cast<std::size_t>(i)] = a + w;
    }
    boxes.emplace_back(Point::from_span(lo), Point::from_span(hi));
  }
  return boxes;
}

// Disjoint boxes: the `count` heaviest cells of a fixed grid over
// (-s, s]^dim under the given base mixture, so the moment checks always
// probe where the mass is.
std::vector<Box> disjoint_grid_boxes(int dim, int count, double scale,
                                     const dip::MixtureBase& base) {
  const std::vector<double> fr{-1.0, -1.0 / 3.0, 1.0 / 3.0, 1.0};
  std::vector<Box> cells;
  const int per_axis = static_cast<int>(fr.size()) - 1;
  const int total = dim == 1 ? per_axis : (dim == 2 ? per_axis * per_axis : per_axis * per_axis * per_axis);
  for (int idx = 0; idx < total; ++idx) {
    int rem = idx;
    std::vector<double> lo, hi;
    for (int d = 0; d < dim; ++d) {
      const int c = rem % per_axis;
      rem /= per_axis;
      lo.push_back(fr[static_cast<std::size_t>(c)] * scale);
      hi.push_back(fr[static_cast<std::size_t>(c) + 1] * scale);
    }
    cells.emplace_back(Point::from_span(lo), Point::from_span(hi));
  }
  std::vector<std::size_t> order(cells.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return base.eval_box(cells[a]) > base.eval_box(cells[b]);
  });
  std::vector<Box> out;
  for (std::size_t i = 0; i < order.size() && static_cast<int>(out.size()) < count; ++i)
    out.push_back(cells[order[i]]);
  return out;
}

SamplerConfig make_sampler(const std::string& name, double eps, int n_atoms, int k_sym) {
  SamplerConfig cfg;
  if (name == "stick")
    cfg = SamplerConfig::stick(eps);
  else if (name == "finite")
    cfg = SamplerConfig::finite(n_atoms);
  else
    throw CLI::ValidationError("--sampler", "expected 'stick' or 'finite'");
  cfg.orbit_copies = k_sym;
  cfg.validate();
  return cfg;
}

// --config FILE: JSON object whose keys mirror long flags. Values from the
// file are spliced in front of the explicit flags, so the command line wins.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::string config_path;
  std::vector<std::string> stripped;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw CLI::ValidationError("--config", "missing file argument");
      config_path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
    } else {
      stripped.push_back(args[i]);
    }
  }
  if (config_path.empty()) return stripped;
  if (stripped.empty())
    throw CLI::ValidationError("--config", "a subcommand is required before --config");

  const dip::json j = dip::read_json_file(config_path);
  if (!j.is_object()) throw dip::IoError("config: expected a JSON object of flag values");
  // flags given explicitly win: skip those keys entirely
  auto given_explicitly = [&](const std::string& key) {
    const std::string flag = "--" + key;
    for (const std::string& a : stripped)
      if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
    return false;
  };
  std::vector<std::string> injected;
  for (const auto& [key, value] : j.items()) {
    if (given_explicitly(key)) continue;
    injected.push_back("--" + key);
    if (value.is_boolean()) {
      if (!value.get<bool>()) injected.pop_back();  // false flag: omit
      continue;
    }
    if (value.is_array()) {
      std::string joined;
      for (const auto& e : value) {
        if (!joined.empty()) joined += ",";
        joined += e.is_string() ? e.get<std::string>() : e.dump();
      }
      injected.push_back(joined);
    } else if (value.is_string()) {
      injected.push_back(value.get<std::string>());
    } else {
      injected.push_back(value.dump());
    }
  }
  // subcommand first, then config values, then explicit flags
  std::vector<std::string> out;
  out.push_back(stripped.front());
  out.insert(out.end(), injected.begin(), injected.end());
  out.insert(out.end(), stripped.begin() + 1, stripped.end());
  return out;
}

// ---------------------------------------------------------------------------

struct GenOptions {
  std::string dist, out;
  int m = 0;
  std::uint64_t seed = 0;
  double sigma = 1.0, radius = 1.0, mu = 0.0;
};

void run_gen(const GenOptions& o) {
  const BaseMeasure base = make_base(o.dist, o.sigma, o.radius, o.mu);
  Rng rng(o.seed);
  std::vector<Point> pts;
  pts.reserve(static_cast<std::size_t>(o.m));
  for (int i = 0; i < o.m; ++i) pts.push_back(base.sample(rng));
  dip::write_text_file(o.out, dip::points_to_csv(pts, base.dim()));
  std::cout << "gen: dist=" << o.dist << " m=" << o.m << " dim=" << base.dim()
            << " seed=" << o.seed << " out=" << o.out << "\n";
}

struct FitOptions {
  std::string base, group, data, out;
  double alpha = 1.0, sigma = 1.0, radius = 1.0, mu = 0.0;
};

void run_fit(const FitOptions& o) {
  const BaseMeasure h = make_base(o.base, o.sigma, o.radius, o.mu);
  const ParsedGroup g = parse_group(o.group);
  const std::vector<Point> data = dip::points_from_csv(dip::read_text_file(o.data));
  const DipPosterior post =
      g.limit ? dip::fit_limit(o.alpha, h, data) : dip::fit(o.alpha, h, data, *g.group);

  dip::write_text_file(o.out, dip::to_json(post).dump(2) + "\n");

  std::size_t atom_count = 0;
  if (post.base().empirical_kind() == dip::MixtureBase::EmpiricalKind::discrete)
    atom_count = post.base().discrete().size();
  else if (post.base().empirical_kind() == dip::MixtureBase::EmpiricalKind::orbit)
    atom_count = post.base().orbit().data().size();
  std::cout << "fit: alpha_star=" << dip::format_double(post.alpha_star())
            << " p_cont=" << dip::format_double(post.p_cont()) << " atoms=" << atom_count
            << " out=" << o.out << "\n";
  if (!post.invariance_warning().empty())
    std::cerr << "warning: " << post.invariance_warning() << "\n";
}

struct SampleOptions {
  std::string posterior, out, sampler = "stick";
  double eps = 1e-6;
  int n_atoms = 2000, k_sym = 360, reps = 1;
  std::uint64_t seed = 0;
};

void run_sample(const SampleOptions& o) {
  const DipPosterior post = dip::posterior_from_json(dip::read_json_file(o.posterior));
  const SamplerConfig cfg = make_sampler(o.sampler, o.eps, o.n_atoms, o.k_sym);
  if (o.reps < 1) throw CLI::ValidationError("--reps", "must be >= 1");
  const Rng master(o.seed);
  std::string out;
  for (int r = 0; r < o.reps; ++r) {
    Rng replica = master.derive(static_cast<std::uint64_t>(r));
    const dip::TruncatedPath path = dip::sample_path(post, cfg, replica);
    out += dip::to_json(path).dump();
    out += "\n";
  }
  dip::write_text_file(o.out, out);
  std::cout << "sample: reps=" << o.reps << " sampler=" << o.sampler << " seed=" << o.seed
            << " out=" << o.out << "\n";
}

struct ConvergeOptions {
  std::string mode, base, f_true = "gauss2d", data, out, sampler = "stick";
  double alpha = 1.0, sigma = 1.0, radius = 1.0, mu = 0.0, eps = 1e-6;
  int n_atoms = 2000, k_sym = 360, reps = 1000, n_boxes = 5, group_k = 4;
  std::vector<int> k_levels, m_levels;
  std::uint64_t seed = 0;
};

void run_converge(const ConvergeOptions& o) {
  const BaseMeasure h = make_base(o.base, o.sigma, o.radius, o.mu);
  dip::ConvergenceReport report;
  if (o.mode == "k") {
    if (o.data.empty()) throw CLI::ValidationError("--data", "k-sweep needs a data file");
    if (o.k_levels.empty()) throw CLI::ValidationError("--k-levels", "k-sweep needs levels");
    const std::vector<Point> data = dip::points_from_csv(dip::read_text_file(o.data));
    Rng box_rng = Rng(o.seed).derive(0xB0);
    const std::vector<Box> boxes = random_boxes(2, o.n_boxes, base_scale(h), box_rng);
    const SamplerConfig cfg = make_sampler(o.sampler, o.eps, o.n_atoms, o.k_sym);
    report = dip::sweep_k(o.alpha, h, data, o.k_levels,
                          boxes, static_cast<std::size_t>(o.reps), cfg, Rng(o.seed));
  } else if (o.mode == "m") {
    if (o.m_levels.empty()) throw CLI::ValidationError("--m-levels", "m-sweep needs levels");
    const BaseMeasure truth = make_base(o.f_true, o.sigma, o.radius, o.mu);
    report = dip::sweep_m(truth, o.alpha, h, o.m_levels, o.group_k, Rng(o.seed));
  } else {
    throw CLI::ValidationError("--mode", "expected 'k' or 'm'");
  }
  const bool json_out = o.out.size() > 5 && o.out.substr(o.out.size() - 5) == ".json";
  dip::write_text_file(o.out,
                       json_out ? dip::to_json(report).dump(2) + "\n" : dip::report_to_csv(report));
  std::cout << "converge: mode=" << o.mode << " levels=" << report.levels.size()
            << " seed=" << o.seed << " out=" << o.out << "\n";
}

struct CheckOptions {
  std::string kind, posterior, sampler = "stick";
  double eps = 1e-6, distort = 0.0;
  int n_atoms = 2000, k_sym = 360, reps = 0, n_boxes = 0;
  std::uint64_t seed = 0;
};

void run_check(const CheckOptions& o) {
  const DipPosterior post = dip::posterior_from_json(dip::read_json_file(o.posterior));
  const SamplerConfig cfg = make_sampler(o.sampler, o.eps, o.n_atoms, o.k_sym);
  const double scale = measure_scale(post);

  if (o.kind == "moments") {
    const int reps = o.reps > 0 ? o.reps : 10000;
    const int n_boxes = o.n_boxes > 0 ? o.n_boxes : 3;
    const std::vector<Box> boxes =
        disjoint_grid_boxes(post.base().dim(), n_boxes, scale, post.base());

    dip::PathSample sample = dip::finite_dim_sample(post, boxes, static_cast<std::size_t>(reps),
                                                    cfg, Rng(o.seed));
    if (o.distort != 0.0) {
      // negative control: inflate the heaviest box's mass on every path and
      // renormalize, as if atom weights in that region were distorted
      std::size_t target = 0;
      double best = -1.0;
      for (std::size_t b = 0; b < sample.n_boxes; ++b) {
        double mean = 0.0;
        for (std::size_t r = 0; r < sample.reps; ++r) mean += sample.at(r, b);
        if (mean > best) {
          best = mean;
          target = b;
        }
      }
      for (std::size_t r = 0; r < sample.reps; ++r) {
        const double p0 = sample.at(r, target);
        const double total = p0 * (1.0 + o.distort) + (1.0 - p0);
        for (std::size_t b = 0; b < sample.n_boxes; ++b)
          sample.at(r, b) = (b == target ? p0 * (1.0 + o.distort) : sample.at(r, b)) / total;
      }
    }
    const dip::MomentCheck check =
        dip::check_moments_from_sample(post.alpha_star(), post.base(), boxes, sample);
    std::cout << "check moments: reps=" << reps << " boxes=" << n_boxes
              << " max|z|=" << dip::format_double(check.max_abs_z()) << " threshold=4\n";
    for (std::size_t b = 0; b < check.n_boxes; ++b)
      std::cout << "  box " << b << ": mean_z=" << dip::format_double(check.mean_z[b])
                << " var_z=" << dip::format_double(check.var_z[b]) << "\n";
    for (std::size_t i = 0; i < check.n_boxes; ++i)
      for (std::size_t j = i + 1; j < check.n_boxes; ++j)
        std::cout << "  pair (" << i << "," << j
                  << "): product_z=" << dip::format_double(check.cross_z[i * check.n_boxes + j])
                  << "\n";
    if (!check.pass(4.0)) {
      std::cout << "FAIL\n";
      throw CheckFailed{};
    }
    std::cout << "PASS\n";
    return;
  }

  if (o.kind == "invariance") {
    const int reps = o.reps > 0 ? o.reps : 8;
    const int n_boxes = o.n_boxes > 0 ? o.n_boxes : 200;
    Rng box_rng = Rng(o.seed).derive(0xB0);
    const std::vector<Box> boxes = random_boxes(post.base().dim(), n_boxes, scale, box_rng);
    const FiniteGroup group = post.group() != nullptr
                                  ? *post.group()
                                  : dip::make_cyclic_group_2d(cfg.orbit_copies);
    double max_gap = 0.0;
    std::size_t skipped = 0;
    const Rng master(o.seed);
    for (int r = 0; r < reps; ++r) {
      Rng replica = master.derive(static_cast<std::uint64_t>(r));
      const dip::TruncatedPath path = dip::sample_path(post, cfg, replica);
      const dip::InvarianceReport rep = dip::invariance_gap(path.measure, group, boxes);
      max_gap = std::max(max_gap, rep.max_gap);
      skipped += rep.skipped_boxes.size();
    }
    std::cout << "check invariance: paths=" << reps << " boxes=" << n_boxes
              << " skipped=" << skipped << " max_gap=" << dip::format_double(max_gap)
              << " tol=1e-09\n";
    if (max_gap > 1e-9) {
      std::cout << "FAIL\n";
      throw CheckFailed{};
    }
    std::cout << "PASS\n";
    return;
  }

  throw CLI::ValidationError("--kind", "expected 'moments' or 'invariance'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dip: Dirichlet invariant process simulation toolkit"};
  app.require_subcommand(1);

  GenOptions gen;
  CLI::App* cmd_gen = app.add_subcommand("gen", "generate a sample as CSV");
  cmd_gen->add_option("--dist", gen.dist, "distribution: gauss1d|gauss2d|gauss3d|disk|square")
      ->required();
  cmd_gen->add_option("--m", gen.m, "sample size")->required()->check(CLI::NonNegativeNumber);
  cmd_gen->add_option("--seed", gen.seed, "RNG seed");
  cmd_gen->add_option("--out", gen.out, "output CSV path")->required();
  cmd_gen->add_option("--sigma", gen.sigma, "gaussian scale");
  cmd_gen->add_option("--radius", gen.radius, "disk radius");
  cmd_gen->add_option("--mu", gen.mu, "gauss1d center");

  FitOptions fit;
  CLI::App* cmd_fit = app.add_subcommand("fit", "fit a posterior from a CSV sample");
  cmd_fit->add_option("--alpha", fit.alpha, "concentration")->required();
  cmd_fit->add_option("--base", fit.base, "prior guess: gauss1d|gauss2d|gauss3d|disk|square")
      ->required();
  cmd_fit->add_option("--group", fit.group,
                      "group: cyclic2d:K | reflection:MU | cyclic3d:K:AX:AY:AZ | limit")
      ->required();
  cmd_fit->add_option("--data", fit.data, "input CSV path")->required();
  cmd_fit->add_option("--out", fit.out, "output posterior JSON path")->required();
  cmd_fit->add_option("--sigma", fit.sigma, "gaussian scale");
  cmd_fit->add_option("--radius", fit.radius, "disk radius");
  cmd_fit->add_option("--mu", fit.mu, "gauss1d center");

  SampleOptions sm;
  CLI::App* cmd_sample = app.add_subcommand("sample", "draw posterior paths as JSON lines");
  cmd_sample->add_option("--posterior", sm.posterior, "posterior JSON path")->required();
  cmd_sample->add_option("--sampler", sm.sampler, "stick | finite");
  cmd_sample->add_option("--eps", sm.eps, "stick-breaking residual tolerance");
  cmd_sample->add_option("--n-atoms", sm.n_atoms, "finite-N atom count");
  cmd_sample->add_option("--k-sym", sm.k_sym, "orbit copies for limit posteriors");
  cmd_sample->add_option("--reps", sm.reps, "number of paths")->required();
  cmd_sample->add_option("--seed", sm.seed, "RNG seed");
  cmd_sample->add_option("--out", sm.out, "output JSONL path")->required();

  ConvergeOptions cv;
  CLI::App* cmd_converge = app.add_subcommand("converge", "k-sweep or m-sweep study");
  cmd_converge->add_option("--mode", cv.mode, "k | m")->required();
  cmd_converge->add_option("--alpha", cv.alpha, "concentration")->required();
  cmd_converge->add_option("--base", cv.base, "prior guess kind")->required();
  cmd_converge->add_option("--sigma", cv.sigma, "gaussian scale");
  cmd_converge->add_option("--radius", cv.radius, "disk radius");
  cmd_converge->add_option("--mu", cv.mu, "gauss1d center");
  cmd_converge->add_option("--data", cv.data, "input CSV (k mode)");
  cmd_converge->add_option("--k-levels", cv.k_levels, "group orders, e.g. 4,16,64,256")
      ->delimiter(',');
  cmd_converge->add_option("--m-levels", cv.m_levels, "sample sizes, e.g. 10,100,1000")
      ->delimiter(',');
  cmd_converge->add_option("--f-true", cv.f_true, "true distribution (m mode): gauss2d|disk");
  cmd_converge->add_option("--group-k", cv.group_k, "group order for the m-sweep");
  cmd_converge->add_option("--n-boxes", cv.n_boxes, "number of evaluation boxes (k mode)");
  cmd_converge->add_option("--reps", cv.reps, "paths per level (k mode)");
  cmd_converge->add_option("--sampler", cv.sampler, "stick | finite");
  cmd_converge->add_option("--eps", cv.eps, "stick-breaking residual tolerance");
  cmd_converge->add_option("--n-atoms", cv.n_atoms, "finite-N atom count");
  cmd_converge->add_option("--k-sym", cv.k_sym, "orbit copies for limit paths");
  cmd_converge->add_option("--seed", cv.seed, "RNG seed");
  cmd_converge->add_option("--out", cv.out, "output report path (.csv or .json)")->required();

  CheckOptions ck;
  CLI::App* cmd_check = app.add_subcommand("check", "moment or invariance diagnostics");
  cmd_check->add_option("--kind", ck.kind, "moments | invariance")->required();
  cmd_check->add_option("--posterior", ck.posterior, "posterior JSON path")->required();
  cmd_check->add_option("--reps", ck.reps, "paths (default 10000 moments / 8 invariance)");
  cmd_check->add_option("--n-boxes", ck.n_boxes, "boxes (default 3 moments / 200 invariance)");
  cmd_check->add_option("--sampler", ck.sampler, "stick | finite");
  cmd_check->add_option("--eps", ck.eps, "stick-breaking residual tolerance");
  cmd_check->add_option("--n-atoms", ck.n_atoms, "finite-N atom count");
  cmd_check->add_option("--k-sym", ck.k_sym, "orbit copies for limit paths");
  cmd_check->add_option("--distort", ck.distort, "inject a weight distortion (negative control)");
  cmd_check->add_option("--seed", ck.seed, "RNG seed");

  cmd_gen->callback([&] { run_gen(gen); });
  cmd_fit->callback([&] { run_fit(fit); });
  cmd_sample->callback([&] { run_sample(sm); });
  cmd_converge->callback([&] { run_converge(cv); });
  cmd_check->callback([&] { run_check(ck); });

  try {
    const std::vector<std::string> args = expand_config(argc, argv);
    // CLI11 parses reversed argument vectors
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const CheckFailed&) {
    return 1;
  } catch (const dip::IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
