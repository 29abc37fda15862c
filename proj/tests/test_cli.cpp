#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "dip/dip.hpp"

using namespace dip;
namespace fs = std::filesystem;

namespace {

struct CliFixture {
  fs::path dir;

  CliFixture() {
    dir = fs::temp_directory_path() / "dip-cli-tests";
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~CliFixture() { fs::remove_all(dir); }

  std::string path(const std::string& name) const { return (dir / name).string(); }

  int run(const std::string& args) const {
    const std::string cmd = std::string(DIP_CLI_PATH) + " " + args + " > " +
                            path("stdout.txt") + " 2> " + path("stderr.txt");
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
  }

  std::string out() const { return read_text_file(path("stdout.txt")); }
};

}  // namespace

TEST_CASE("gen: empty sample writes a header-only file") {
  CliFixture cli;
  REQUIRE(cli.run("gen --dist gauss1d --m 0 --seed 1 --out " + cli.path("empty.csv")) == 0);
  CHECK(read_text_file(cli.path("empty.csv")) == "x\n");
}

TEST_CASE("gen: three-dimensional samples carry the x,y,z header") {
  CliFixture cli;
  REQUIRE(cli.run("gen --dist gauss3d --m 5 --seed 2 --out " + cli.path("g3.csv")) == 0);
  int dim = 0;
  const std::vector<Point> pts = points_from_csv(read_text_file(cli.path("g3.csv")), &dim);
  CHECK(dim == 3);
  CHECK(pts.size() == 5);
}

TEST_CASE("gen: large gaussian sample has the right mean") {
  CliFixture cli;
  REQUIRE(cli.run("gen --dist gauss2d --m 100000 --seed 5 --out " + cli.path("big.csv")) == 0);
  const std::vector<Point> pts = points_from_csv(read_text_file(cli.path("big.csv")));
  REQUIRE(pts.size() == 100000);
  for (int c = 0; c < 2; ++c) {
    CompensatedSum s;
    for (const Point& p : pts) s.add(p[c]);
    CHECK(std::abs(s.value() / 100000.0) < 4.0 / std::sqrt(100000.0));
  }
}

TEST_CASE("fit: single datum with quarter turns, and the empty-data prior") {
  CliFixture cli;
  write_text_file(cli.path("one.csv"), "x,y\n1.0,0.0\n");
  REQUIRE(cli.run("fit --alpha 1 --base disk --radius 2 --group cyclic2d:4 --data " +
                  cli.path("one.csv") + " --out " + cli.path("one.json")) == 0);
  const DipPosterior post = posterior_from_json(read_json_file(cli.path("one.json")));
  CHECK(post.alpha_star() == 2.0);
  CHECK(post.p_cont() == 0.5);
  REQUIRE(post.base().discrete().size() == 4);
  for (const Atom& a : post.base().discrete().atoms()) CHECK(a.weight == 0.25);
  CHECK(cli.out().find("alpha_star=2") != std::string::npos);

  write_text_file(cli.path("none.csv"), "x,y\n");
  REQUIRE(cli.run("fit --alpha 1.5 --base gauss2d --group cyclic2d:4 --data " +
                  cli.path("none.csv") + " --out " + cli.path("prior.json")) == 0);
  const DipPosterior prior = posterior_from_json(read_json_file(cli.path("prior.json")));
  CHECK(prior.alpha_star() == 1.5);
  CHECK(prior.p_cont() == 1.0);
}

TEST_CASE("fit: the file round trip reproduces base probabilities") {
  CliFixture cli;
  REQUIRE(cli.run("gen --dist gauss2d --m 9 --seed 17 --out " + cli.path("d.csv")) == 0);
  REQUIRE(cli.run("fit --alpha 2 --base gauss2d --group cyclic2d:3 --data " + cli.path("d.csv") +
                  " --out " + cli.path("p.json")) == 0);

  const std::vector<Point> data = points_from_csv(read_text_file(cli.path("d.csv")));
  const DipPosterior direct = fit(2.0, BaseMeasure::gauss2d(1.0), data, make_cyclic_group_2d(3));
  const DipPosterior loaded = posterior_from_json(read_json_file(cli.path("p.json")));

  Rng rng(501);
  for (int i = 0; i < 100; ++i) {
    const double x0 = rng.uniform(-2.5, 2.5), y0 = rng.uniform(-2.5, 2.5);
    const Box b(Point(x0, y0), Point(x0 + rng.uniform(0.2, 2.0), y0 + rng.uniform(0.2, 2.0)));
    CHECK(loaded.base().eval_box(b) == direct.base().eval_box(b));
  }
}

TEST_CASE("sample: JSONL output matches library draws and the base-mean oracle") {
  CliFixture cli;
  write_text_file(cli.path("d.csv"), "x,y\n0.5,0.2\n-0.3,0.9\n");
  REQUIRE(cli.run("fit --alpha 1 --base gauss2d --group cyclic2d:1 --data " + cli.path("d.csv") +
                  " --out " + cli.path("p.json")) == 0);
  const int reps = 400;
  REQUIRE(cli.run("sample --posterior " + cli.path("p.json") +
                  " --sampler stick --eps 1e-6 --reps " + std::to_string(reps) + " --seed 3 --out " +
                  cli.path("paths.jsonl")) == 0);

  const std::string text = read_text_file(cli.path("paths.jsonl"));
  std::vector<TruncatedPath> paths;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) paths.push_back(path_from_json(json::parse(line)));
  REQUIRE(static_cast<int>(paths.size()) == reps);

  // trivial group: the CLI paths equal direct DP posterior draws, line by line
  const DipPosterior post = posterior_from_json(read_json_file(cli.path("p.json")));
  const DPParams dp(post.alpha_star(), post.base());
  const Rng master(3);
  for (int r = 0; r < 5; ++r) {
    Rng replica = master.derive(static_cast<std::uint64_t>(r));
    const TruncatedPath direct = sample_dp_stick_breaking(dp, 1e-6, replica);
    REQUIRE(paths[static_cast<std::size_t>(r)].measure.size() == direct.measure.size());
    for (std::size_t i = 0; i < direct.measure.size(); ++i) {
      CHECK(paths[static_cast<std::size_t>(r)].measure.atoms()[i].point ==
            direct.measure.atoms()[i].point);
      CHECK(paths[static_cast<std::size_t>(r)].measure.atoms()[i].weight ==
            direct.measure.atoms()[i].weight);
    }
  }

  // column mean across all paths approaches the analytic base mass
  const Box b(Point(-0.5, -0.5), Point(1.0, 1.0));
  CompensatedSum s;
  for (const TruncatedPath& p : paths) s.add(p.measure.eval_box(b));
  const double expect = post.base().eval_box(b);
  const double sd = std::sqrt(expect * (1.0 - expect) / (post.alpha_star() + 1.0));
  CHECK(std::abs(s.value() / reps - expect) < 4.0 * sd / std::sqrt(static_cast<double>(reps)));
}

TEST_CASE("converge: a fixed point of the rotations gives zero base gaps") {
  CliFixture cli;
  write_text_file(cli.path("origin.csv"), "x,y\n0.0,0.0\n");
  REQUIRE(cli.run("converge --mode k --alpha 1 --base gauss2d --data " + cli.path("origin.csv") +
                  " --k-levels 2,8 --reps 25 --n-boxes 2 --seed 2 --out " +
                  cli.path("rep.csv")) == 0);
  const std::string csv = read_text_file(cli.path("rep.csv"));
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  CHECK(line == "level,box,stat,value,mc_sigma");
  int gap_rows = 0;
  while (std::getline(in, line)) {
    if (line.find("base_gap") == std::string::npos) continue;
    ++gap_rows;
    const auto last_comma = line.rfind(',');
    const auto prev_comma = line.rfind(',', last_comma - 1);
    const double value = std::stod(line.substr(prev_comma + 1, last_comma - prev_comma - 1));
    CHECK(value <= 1e-12);
  }
  CHECK(gap_rows == 4);  // 2 levels x 2 boxes
}

TEST_CASE("check: invariance passes and a distorted moments run exits 1") {
  CliFixture cli;
  write_text_file(cli.path("d.csv"), "x,y\n0.9,0.1\n-0.2,0.7\n");
  REQUIRE(cli.run("fit --alpha 1 --base gauss2d --group cyclic2d:4 --data " + cli.path("d.csv") +
                  " --out " + cli.path("p4.json")) == 0);
  CHECK(cli.run("check --kind invariance --posterior " + cli.path("p4.json") +
                " --reps 4 --seed 6") == 0);

  REQUIRE(cli.run("fit --alpha 1 --base gauss2d --group cyclic2d:1 --data " + cli.path("d.csv") +
                  " --out " + cli.path("p1.json")) == 0);
  CHECK(cli.run("check --kind moments --posterior " + cli.path("p1.json") +
                " --reps 4000 --seed 6") == 0);
  CHECK(cli.run("check --kind moments --posterior " + cli.path("p1.json") +
                " --reps 4000 --seed 6 --distort 0.1") == 1);
}

TEST_CASE("exit codes distinguish usage and I/O failures") {
  CliFixture cli;
  CHECK(cli.run("sample --posterior nope.json --reps 1 --out " + cli.path("x.jsonl")) == 3);
  CHECK(cli.run("fit --alpha 1 --base nosuch --group cyclic2d:4 --data d --out o") == 2);
  CHECK(cli.run("fit --alpha 1 --base gauss2d --group spiral:9 --data d --out o") == 2);
  CHECK(cli.run("wibble") == 2);
  write_text_file(cli.path("bad.csv"), "x,y\n1.0,oops\n");
  CHECK(cli.run("fit --alpha 1 --base gauss2d --group cyclic2d:2 --data " + cli.path("bad.csv") +
                " --out " + cli.path("o.json")) == 3);
}

TEST_CASE("config file supplies defaults and explicit flags win") {
  CliFixture cli;
  write_text_file(cli.path("cfg.json"),
                  "{\"dist\": \"gauss2d\", \"m\": 4, \"seed\": 11, \"out\": \"" +
                      cli.path("a.csv") + "\"}");
  REQUIRE(cli.run("gen --config " + cli.path("cfg.json")) == 0);
  CHECK(points_from_csv(read_text_file(cli.path("a.csv"))).size() == 4);

  REQUIRE(cli.run("gen --config " + cli.path("cfg.json") + " --m 2 --out " + cli.path("b.csv")) ==
          0);
  CHECK(points_from_csv(read_text_file(cli.path("b.csv"))).size() == 2);
}
