#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "corrugate/fields.hpp"

using namespace corrugate;
namespace fs = std::filesystem;

namespace {

const fs::path kTmp = fs::temp_directory_path() / "corrugate_cli_test";

struct Run {
  int code;
  std::string out;
};

Run cli(const std::string& args) {
  const fs::path log = kTmp / "stdout.txt";
  const std::string cmd = std::string(CORRUGATE_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int st = std::system(cmd.c_str());
  std::ifstream f(log);
  std::stringstream ss;
  ss << f.rdbuf();
  return {WEXITSTATUS(st), ss.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

fs::path write_config(const std::string& name, const std::string& body) {
  const fs::path p = kTmp / name;
  std::ofstream(p) << body;
  return p;
}

struct Setup {
  Setup() {
    fs::remove_all(kTmp);
    fs::create_directories(kTmp / "a");
    fs::create_directories(kTmp / "b");
  }
};

const std::string kMinimal = "n = 2\nmetric = conformal\nmetric.c = 1.5\ngrid = 32\nQ = 0\nseed = 3\n";

}  // namespace

TEST_CASE("run: minimal config succeeds and writes artifacts") {
  Setup s;
  const fs::path cfg = write_config("min.cfg", kMinimal);
  const Run r = cli("run --config " + cfg.string() + " --out " + (kTmp / "a").string());
  CHECK(r.code == 0);
  const std::string json = slurp(kTmp / "a" / "report.json");
  CHECK(json.find("\"status\": \"PASSED\"") != std::string::npos);
  CHECK(json.find("\"seed\": 3") != std::string::npos);
  CHECK(fs::exists(kTmp / "a" / "stages.csv"));
  CHECK(fs::exists(kTmp / "a" / "u_0.cgf"));
  // One defect row: Q + 1 = 1.
  const std::string csv = slurp(kTmp / "a" / "stages.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);

  // Determinism.
  CHECK(cli("run --quiet --config " + cfg.string() + " --out " + (kTmp / "b").string()).code == 0);
  CHECK(slurp(kTmp / "b" / "report.json") == json);
  CHECK(slurp(kTmp / "b" / "stages.csv") == csv);

  const Run rep = cli("report " + (kTmp / "a" / "report.json").string());
  CHECK(rep.code == 0);
  CHECK(rep.out.find("PASSED") != std::string::npos);
}

TEST_CASE("run: exit codes") {
  Setup s;
  const Run bad = cli("run --config " + write_config("t.cfg", "theta = 0.4\n").string());
  CHECK(bad.code == 2);
  CHECK(bad.out.find("1/(1+2(n-1))") != std::string::npos);
  CHECK(cli("run --config " + write_config("u.cfg", "speed = 3\n").string()).code == 2);
  const fs::path cfg = write_config("m.cfg", kMinimal);
  CHECK(cli("run --config " + cfg.string() + " --out " + (kTmp / "missing").string()).code == 3);
  CHECK(cli("run --config " + (kTmp / "none.cfg").string()).code == 3);
  // Not short: the pipeline reports a failed run.
  const fs::path ns = write_config("ns.cfg", "metric.c = 0.5\ngrid = 32\nQ = 0\n");
  CHECK(cli("run --config " + ns.string() + " --out " + (kTmp / "a").string()).code == 1);
}

TEST_CASE("verify suites") {
  Setup s;
  const Run p = cli("verify --suite periodic");
  CHECK(p.code == 0);
  CHECK(p.out.find("[PASS] periodic/inclusion_identity") != std::string::npos);
  const Run q = cli("verify --suite primitives --seed 7");
  CHECK(q.code == 0);
  CHECK(q.out.find("[PASS] primitives/basis_reconstruction") != std::string::npos);
  const Run i = cli("verify --suite ibp");
  CHECK(i.code == 0);
  CHECK(i.out.find("slope") != std::string::npos);
  CHECK(cli("verify --suite nonsense").code == 2);
}

TEST_CASE("export-mesh") {
  Setup s;
  const GridDomain d = GridDomain::box(2, {0, 0}, {1, 1}, 0.25);
  const Field flat = sample(d, Rank::map, 3, [](const Point& x, double* o) {
    o[0] = x[0];
    o[1] = x[1];
    o[2] = 0.0;
  });
  write_field(flat, (kTmp / "flat.cgf").string());
  CHECK(cli("export-mesh " + (kTmp / "flat.cgf").string() + " --out " + (kTmp / "flat.obj").string()).code == 0);
  std::ifstream obj(kTmp / "flat.obj");
  std::string line;
  int v = 0, f = 0;
  long long maxi = 0;
  while (std::getline(obj, line)) {
    if (line.rfind("v ", 0) == 0) {
      ++v;
      double x, y, z;
      std::sscanf(line.c_str(), "v %lf %lf %lf", &x, &y, &z);
      CHECK(z == 0.0);
    } else if (line.rfind("f ", 0) == 0) {
      ++f;
      long long a, b, c;
      std::sscanf(line.c_str(), "f %lld %lld %lld", &a, &b, &c);
      maxi = std::max({maxi, a, b, c});
      CHECK(a != b);
      CHECK(b != c);
    }
  }
  CHECK(v == 25);
  CHECK(f == 32);
  CHECK(maxi == 25);

  const GridDomain d3 = GridDomain::box(3, {0, 0, 0}, {1, 1, 1}, 0.5);
  write_field(Field::map(d3), (kTmp / "cube.cgf").string());
  const Run r = cli("export-mesh " + (kTmp / "cube.cgf").string() + " --out " + (kTmp / "cube.obj").string());
  CHECK(r.code == 2);
  CHECK(r.out.find("wrong-dimension") != std::string::npos);
}
