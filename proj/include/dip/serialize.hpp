#pragma once

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "dip/convergence.hpp"
#include "dip/dirichlet.hpp"
#include "dip/measures.hpp"
#include "dip/point.hpp"
#include "dip/posterior.hpp"

namespace dip {

using json = nlohmann::json;

/// File and parse failures; the CLI maps this to its I/O exit code.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Round-trip decimal formatting (17 significant digits).
inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

inline json to_json(const Point& p) {
  json arr = json::array();
  for (int i = 0; i < p.dim(); ++i) arr.push_back(p[i]);
  return arr;
}

inline Point point_from_json(const json& j) {
  if (!j.is_array() || j.empty() || j.size() > 3)
    throw IoError("point: expected an array of 1 to 3 numbers");
  std::vector<double> v;
  for (const auto& e : j) v.push_back(e.get<double>());
  return Point::from_span(v);
}

inline json to_json(const DiscreteMeasure& m) {
  json atoms = json::array();
  for (const Atom& a : m.atoms())
    atoms.push_back(json{{"point", to_json(a.point)}, {"weight", a.weight}});
  return json{{"dim", m.dim()}, {"atoms", std::move(atoms)}};
}

inline DiscreteMeasure discrete_measure_from_json(const json& j) {
  if (!j.contains("dim") || !j.contains("atoms")) throw IoError("measure: missing dim/atoms");
  const int dim = j.at("dim").get<int>();
  std::vector<Atom> atoms;
  for (const auto& e : j.at("atoms")) {
    Point p = point_from_json(e.at("point"));
    if (p.dim() != dim) throw IoError("measure: atom dimension mismatch");
    atoms.push_back({p, e.at("weight").get<double>()});
  }
  return DiscreteMeasure(std::move(atoms));
}

inline json to_json(const TruncationInfo& t) {
  if (t.mode == TruncationMode::stick_breaking)
    return json{{"mode", "stick-breaking"},
                {"eps", t.eps},
                {"residual", t.residual},
                {"atoms", t.n_atoms}};
  return json{{"mode", "finite-N"}, {"N", t.n_atoms}};
}

inline TruncationInfo truncation_from_json(const json& j) {
  TruncationInfo t{};
  const std::string mode = j.at("mode").get<std::string>();
  if (mode == "stick-breaking") {
    t.mode = TruncationMode::stick_breaking;
    t.eps = j.at("eps").get<double>();
    t.residual = j.at("residual").get<double>();
    t.n_atoms = j.at("atoms").get<int>();
  } else if (mode == "finite-N") {
    t.mode = TruncationMode::finite_n;
    t.n_atoms = j.at("N").get<int>();
  } else {
    throw IoError("truncation: unknown mode '" + mode + "'");
  }
  return t;
}

inline json to_json(const TruncatedPath& p) {
  json j = to_json(p.measure);
  j["truncation"] = to_json(p.truncation);
  return j;
}

inline TruncatedPath path_from_json(const json& j) {
  return TruncatedPath{discrete_measure_from_json(j), truncation_from_json(j.at("truncation"))};
}

inline json to_json(const BaseMeasure& b) {
  switch (b.kind()) {
    case BaseKind::gauss1d_symmetric:
      return json{{"kind", "gauss1d"}, {"mu", b.mu()}, {"sigma", b.sigma()}};
    case BaseKind::gauss2d_isotropic:
      return json{{"kind", "gauss2d"}, {"sigma", b.sigma()}};
    case BaseKind::uniform_disk:
      return json{{"kind", "disk"}, {"radius", b.radius()}};
    case BaseKind::uniform_unit_square:
      return json{{"kind", "square"}};
    case BaseKind::gauss3d_isotropic:
      return json{{"kind", "gauss3d"}, {"sigma", b.sigma()}};
  }
  throw std::logic_error("to_json: unknown base kind");
}

inline BaseMeasure base_measure_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "gauss1d")
    return BaseMeasure::gauss1d(j.at("mu").get<double>(), j.at("sigma").get<double>());
  if (kind == "gauss2d") return BaseMeasure::gauss2d(j.at("sigma").get<double>());
  if (kind == "disk") return BaseMeasure::disk(j.at("radius").get<double>());
  if (kind == "square") return BaseMeasure::unit_square();
  if (kind == "gauss3d") return BaseMeasure::gauss3d(j.at("sigma").get<double>());
  throw IoError("base measure: unknown kind '" + kind + "'");
}

inline json to_json(const GroupSpec& s) {
  switch (s.kind) {
    case PosteriorGroupKind::cyclic2d: return json{{"kind", "cyclic2d"}, {"k", s.k}};
    case PosteriorGroupKind::reflection: return json{{"kind", "reflection"}, {"mu", s.mu}};
    case PosteriorGroupKind::cyclic3d:
      return json{{"kind", "cyclic3d"}, {"k", s.k}, {"axis", {s.axis[0], s.axis[1], s.axis[2]}}};
    case PosteriorGroupKind::limit: return json{{"kind", "limit"}};
  }
  throw std::logic_error("to_json: unknown group kind");
}

inline GroupSpec group_spec_from_json(const json& j) {
  GroupSpec s;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "cyclic2d") {
    s.kind = PosteriorGroupKind::cyclic2d;
    s.k = j.at("k").get<int>();
  } else if (kind == "reflection") {
    s.kind = PosteriorGroupKind::reflection;
    s.k = 2;
    s.mu = j.at("mu").get<double>();
  } else if (kind == "cyclic3d") {
    s.kind = PosteriorGroupKind::cyclic3d;
    s.k = j.at("k").get<int>();
    const auto& axis = j.at("axis");
    if (!axis.is_array() || axis.size() != 3) throw IoError("group: cyclic3d axis must have 3 entries");
    for (int i = 0; i < 3; ++i) s.axis[static_cast<std::size_t>(i)] = axis[static_cast<std::size_t>(i)].get<double>();
  } else if (kind == "limit") {
    s.kind = PosteriorGroupKind::limit;
  } else {
    throw IoError("group: unknown kind '" + kind + "'");
  }
  return s;
}

inline json to_json(const DipPosterior& p) {
  json data = json::array();
  for (const Point& x : p.data()) data.push_back(to_json(x));
  json j{{"alpha_star", p.alpha_star()},
         {"p_cont", p.p_cont()},
         {"group", to_json(p.group_spec())},
         {"base_continuous", to_json(p.base().continuous())},
         {"data", std::move(data)}};
  if (!p.invariance_warning().empty()) j["warning"] = p.invariance_warning();
  return j;
}

/// Rebuild a posterior from its JSON form. The stored alpha_star and p_cont
/// are used verbatim (bit-preserving); the empirical part is reconstructed
/// from the data snapshot and the group.
inline DipPosterior posterior_from_json(const json& j) {
  const double alpha_star = j.at("alpha_star").get<double>();
  const double p_cont = j.at("p_cont").get<double>();
  const GroupSpec spec = group_spec_from_json(j.at("group"));
  const BaseMeasure h = base_measure_from_json(j.at("base_continuous"));
  std::vector<Point> data;
  for (const auto& e : j.at("data")) data.push_back(point_from_json(e));
  const double m = static_cast<double>(data.size());
  if (std::abs(p_cont * alpha_star - (alpha_star - m)) > 1e-6 * alpha_star)
    throw IoError("posterior: inconsistent alpha_star / p_cont / data size");
  std::string warning = j.contains("warning") ? j.at("warning").get<std::string>() : "";

  if (spec.kind == PosteriorGroupKind::limit) {
    MixtureBase base = data.empty() ? MixtureBase(1.0, h)
                                    : MixtureBase(p_cont, h, OrbitLaw(data));
    return DipPosterior(alpha_star, spec, std::nullopt, std::move(base), std::move(data),
                        std::move(warning));
  }
  FiniteGroup group = rebuild_group(spec);
  MixtureBase base = data.empty()
                         ? MixtureBase(1.0, h)
                         : MixtureBase(p_cont, h, symmetrized_empirical(group, data));
  return DipPosterior(alpha_star, spec, std::move(group), std::move(base), std::move(data),
                      std::move(warning));
}

inline json to_json(const MomentCheck& c) {
  json j{{"reps", c.reps}, {"n_boxes", c.n_boxes}, {"mean_z", c.mean_z}, {"var_z", c.var_z}};
  json cross = json::array();
  for (std::size_t i = 0; i < c.n_boxes; ++i)
    for (std::size_t k = i + 1; k < c.n_boxes; ++k)
      cross.push_back(json{{"i", i}, {"j", k}, {"z", c.cross_z[i * c.n_boxes + k]}});
  j["cross_z"] = std::move(cross);
  j["max_abs_z"] = c.max_abs_z();
  return j;
}

inline json to_json(const ConvergenceReport& r) {
  json rows = json::array();
  for (const ReportRow& row : r.rows)
    rows.push_back(json{{"level", row.level},
                        {"box", row.box},
                        {"stat", row.stat},
                        {"value", row.value},
                        {"mc_sigma", row.sigma}});
  return json{{"sweep", r.sweep}, {"levels", r.levels}, {"reps", r.reps}, {"rows", std::move(rows)}};
}

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw IoError("write failed for '" + path + "'");
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline json read_json_file(const std::string& path) {
  const std::string text = read_text_file(path);
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw IoError("invalid JSON in '" + path + "'");
  return j;
}

/// CSV sample files: header "x", "x,y" or "x,y,z", one row of decimal
/// doubles per point.
inline std::string points_to_csv(std::span<const Point> points, int dim) {
  static const char* headers[] = {"", "x", "x,y", "x,y,z"};
  std::string out = headers[dim];
  out += "\n";
  for (const Point& p : points) {
    for (int i = 0; i < dim; ++i) {
      if (i > 0) out += ",";
      out += format_double(p[i]);
    }
    out += "\n";
  }
  return out;
}

inline std::vector<Point> points_from_csv(const std::string& text, int* dim_out = nullptr) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw IoError("CSV: missing header line");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  int dim = 0;
  if (line == "x") dim = 1;
  else if (line == "x,y") dim = 2;
  else if (line == "x,y,z") dim = 3;
  else throw IoError("CSV: unrecognized header '" + line + "'");
  if (dim_out) *dim_out = dim;

  std::vector<Point> points;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> vals;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      try {
        std::size_t used = 0;
        const double v = std::stod(cell, &used);
        if (used != cell.size()) throw std::invalid_argument("trailing characters");
        vals.push_back(v);
      } catch (const std::exception&) {
        throw IoError("CSV line " + std::to_string(lineno) + ": bad number '" + cell + "'");
      }
    }
    if (static_cast<int>(vals.size()) != dim)
      throw IoError("CSV line " + std::to_string(lineno) + ": expected " + std::to_string(dim) +
                    " columns, got " + std::to_string(vals.size()));
    try {
      points.push_back(Point::from_span(vals));
    } catch (const std::exception& e) {
      throw IoError("CSV line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return points;
}

inline std::string report_to_csv(const ConvergenceReport& r) {
  std::string out = "level,box,stat,value,mc_sigma\n";
  for (const ReportRow& row : r.rows) {
    out += format_double(row.level);
    out += ",";
    out += std::to_string(row.box);
    out += ",";
    out += row.stat;
    out += ",";
    out += format_double(row.value);
    out += ",";
    out += format_double(row.sigma);
    out += "\n";
  }
  return out;
}

inline std::string moment_check_to_csv(const MomentCheck& c) {
  std::string out = "check,box_i,box_j,z\n";
  for (std::size_t b = 0; b < c.n_boxes; ++b) {
    out += "mean," + std::to_string(b) + ",-1," + format_double(c.mean_z[b]) + "\n";
    out += "variance," + std::to_string(b) + ",-1," + format_double(c.var_z[b]) + "\n";
  }
  for (std::size_t i = 0; i < c.n_boxes; ++i)
    for (std::size_t j = i + 1; j < c.n_boxes; ++j)
      out += "product," + std::to_string(i) + "," + std::to_string(j) + "," +
             format_double(c.cross_z[i * c.n_boxes + j]) + "\n";
  return out;
}

}  // namespace dip
