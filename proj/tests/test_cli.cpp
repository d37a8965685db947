#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

std::string cli() {
  const char* p = std::getenv("MPCDP_CLI");
  REQUIRE_MESSAGE(p != nullptr, "MPCDP_CLI not set");
  return p;
}

Run run(const std::string& args) {
  const std::string cmd = cli() + " " + args + " 2>/dev/null";
  Run r;
  FILE* f = popen(cmd.c_str(), "r");
  REQUIRE(f != nullptr);
  char buf[4096];
  while (std::size_t got = fread(buf, 1, sizeof buf, f)) r.out.append(buf, got);
  const int status = pclose(f);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path scratch() {
  static fs::path dir = [] {
    auto d = fs::temp_directory_path() / ("mpcdp_cli_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("gen") {
  auto r = run("gen --kind path --n 3");
  CHECK(r.code == 0);
  std::istringstream in(r.out);
  std::string header, line;
  std::getline(in, header);
  CHECK(header == "3");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 3);

  const auto star = scratch() / "star.txt";
  CHECK(run("gen --kind star --n 4 --out " + star.string()).code == 0);
  // Root 1 with three children.
  std::istringstream s(slurp(star));
  std::getline(s, header);
  int under_root = 0;
  std::uint64_t v, p;
  while (s >> v >> p)
    if (p == 1) ++under_root;
  CHECK(under_root == 3);

  CHECK(run("gen --kind blob --n 3").code == 4);
  CHECK(run("gen --kind path").code == 4);
  CHECK(run("gen --kind path --n 5 --weights gauss").code == 4);
  CHECK(run("gen --kind points --n 5 --dim 3").code == 0);
  CHECK(run("gen --kind graph --n 10 --edges 20").code == 0);
  CHECK(run("gen --kind path --n 20 --seed 4").out == run("gen --kind path --n 20 --seed 4").out);
}

TEST_CASE("solve with verification") {
  const auto tree = scratch() / "path.txt";
  REQUIRE(run("gen --kind path --n 64 --weights uniform:1:9 --out " + tree.string()).code == 0);
  // A 64-vertex input is below the default budget's regime on 16 machines.
  const std::string in = " --machines 4 --in " + tree.string();
  auto r = run("solve --problem matching --verify" + in);
  CHECK(r.code == 0);
  auto j = json::parse(r.out);
  CHECK(j["match"] == true);
  CHECK(j["answer"] == j["oracle_answer"]);
  CHECK(j["n"] == 64);
  CHECK(j["rounds"].get<int>() > 0);
  CHECK_FALSE(j.contains("wall_ms"));
  CHECK(json::parse(run("solve --problem mis --wall-time" + in).out).contains("wall_ms"));
  // Without --verify there is no oracle answer.
  auto plain = json::parse(run("solve --problem vc" + in).out);
  CHECK(plain["oracle_answer"].is_null());
  for (const char* p : {"longest-path", "dominating-set", "bisection"})
    CHECK(run(std::string("solve --verify --problem ") + p + in).code == 0);
  for (const char* p : {"kst", "kmedian", "kcenter"})
    CHECK(run(std::string("solve --verify --k 5 --problem ") + p + in).code == 0);
}

TEST_CASE("solve errors") {
  const auto tree = scratch() / "rr.txt";
  REQUIRE(run("gen --kind random_recursive --n 500 --out " + tree.string()).code == 0);
  auto r = run("solve --problem bisection --machines 16 --cap-constant 0.001 --in " + tree.string());
  CHECK(r.code == 3);
  auto j = json::parse(r.out);
  CHECK(j["error"] == "CapExceeded");
  CHECK(j["used"].get<std::uint64_t>() > j["cap"].get<std::uint64_t>());
  CHECK(run("solve --problem tsp --in " + tree.string()).code == 4);
  CHECK(run("solve --problem kst --in " + tree.string()).code == 4);
  CHECK(run("solve --problem kst --k 501 --in " + tree.string()).code == 4);
  CHECK(run("solve --problem matching --machines 1 --in " + tree.string()).code == 4);
  CHECK(run("solve --problem matching --in /nonexistent/file").code == 1);
  CHECK(run("").code == 4);
}

TEST_CASE("geometry problems") {
  const auto pts = scratch() / "pts.txt";
  REQUIRE(run("gen --kind points --n 120 --dim 2 --out " + pts.string()).code == 0);
  auto mst = json::parse(run("solve --problem mst-metric --verify --in " + pts.string()).out);
  CHECK(mst["mst_edges"] == 119);
  CHECK(mst["match"] == true);
  auto cp = run("solve --problem closest-pair --metric manhattan --verify --in " + pts.string());
  CHECK(cp.code == 0);
  CHECK(json::parse(cp.out)["rounds"] == 3);
  CHECK(run("solve --problem closest-pair --metric cosine --in " + pts.string()).code == 4);
  const auto g = scratch() / "g.txt";
  REQUIRE(run("gen --kind graph --n 100 --out " + g.string()).code == 0);
  auto sp = json::parse(run("solve --problem mst-sparse --verify --in " + g.string()).out);
  CHECK(sp["match"] == true);
}

TEST_CASE("stats") {
  const auto tree = scratch() / "fb.txt";
  REQUIRE(run("gen --kind full_binary --n 200 --out " + tree.string()).code == 0);
  const auto one = scratch() / "m0.json";
  REQUIRE(run("solve --problem mis --seed 0 --metrics-out " + one.string() + " --in " + tree.string()).code == 0);
  auto single = json::parse(run("stats --metrics " + one.string()).out);
  const auto rec = json::parse(slurp(one));
  CHECK(single["samples"] == 1);
  CHECK(single["rounds"]["max"] == rec["rounds"].get<double>());
  CHECK(single["rounds"]["median"] == single["rounds"]["max"]);
  CHECK(single["rounds"]["p95"] == single["rounds"]["max"]);
  CHECK(run("stats").code == 4);
  CHECK(run("stats --metrics").code == 4);

  std::string files;
  for (int seed = 0; seed < 100; ++seed) {
    const auto f = scratch() / ("s" + std::to_string(seed) + ".json");
    REQUIRE(run("solve --problem mis --seed " + std::to_string(seed) + " --metrics-out " + f.string() + " --in " +
                tree.string())
                .code == 0);
    files += " " + f.string();
  }
  auto agg = json::parse(run("stats --metrics" + files).out);
  CHECK(agg["samples"] == 100);
  CHECK(agg["rounds"]["median"].get<double>() <= agg["rounds"]["p95"].get<double>());
  CHECK(agg["rounds"]["p95"].get<double>() <= agg["rounds"]["max"].get<double>());
  fs::remove_all(scratch());
}
