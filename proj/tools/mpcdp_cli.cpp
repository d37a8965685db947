// mpcdp: generate instances, run the solvers on the simulated cluster,
// check them against the oracles and aggregate round metrics.

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "mpcdp/geo_mst.hpp"
#include "mpcdp/linear_problems.hpp"
#include "mpcdp/oracles.hpp"
#include "mpcdp/polylog_problems.hpp"

using namespace mpcdp;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kFailure = 1, kMismatch = 2, kCap = 3, kUsage = 4 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_input(const std::string& path) {
  if (path == "-") {
    std::ostringstream ss;
    ss << std::cin.rdbuf();
    return ss.str();
  }
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

// ---------------------------------------------------------------- gen

struct GenArgs {
  std::string kind;
  std::uint64_t n = 0;
  std::uint64_t seed = 1;
  std::string weights = "none";
  std::string out;
  std::size_t dim = 2;
  std::int64_t range = 1 << 20;
  std::uint64_t edges = 0;
};

int cmd_gen(const GenArgs& a) {
  if (a.n == 0) throw UsageError("--n must be positive");
  if (a.kind == "points") {
    write_output(a.out, emit_points(gen_points(a.n, a.dim, a.seed, a.range)));
  } else if (a.kind == "graph") {
    const auto wd = WeightDist::parse(a.weights == "none" ? "uniform:1:1000" : a.weights);
    const Value hi = wd.kind == WeightDist::Kind::Uniform ? wd.hi : 1;
    write_output(a.out, emit_graph(gen_sparse_graph(a.n, a.edges ? a.edges : 3 * a.n, a.seed, hi)));
  } else {
    TreeKind kind;
    try {
      kind = parse_tree_kind(a.kind);
    } catch (const Error&) {
      throw UsageError("unknown kind '" + a.kind + "'");
    }
    WeightDist wd;
    try {
      wd = WeightDist::parse(a.weights);
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
    write_output(a.out, emit_tree(gen_tree(kind, a.n, a.seed, wd)));
  }
  return kOk;
}

// ---------------------------------------------------------------- solve

struct SolveArgs {
  std::string problem;
  std::string in;
  std::uint32_t machines = 16;
  std::uint64_t seed = 1;
  bool verify = false;
  std::string metrics_out;
  double cap_constant = 8.0;
  std::uint64_t k = 0;
  std::string metric = "euclidean";
  bool wall_time = false;
  bool no_caps = false;
};

bool is_polylog(const std::string& p) {
  const auto& names = polylog_problem_names();
  return std::find(names.begin(), names.end(), p) != names.end();
}

bool is_geo(const std::string& p) { return p == "mst-metric" || p == "mst-sparse" || p == "closest-pair"; }

bool is_kcluster(const std::string& p) { return p == "kmedian" || p == "kcenter"; }

bool known_problem(const std::string& p) {
  return is_polylog(p) || is_geo(p) || is_kcluster(p) || p == "bisection" || p == "kst";
}

Cluster make_cluster(const SolveArgs& a, std::uint64_t n, SpaceClass cls, std::uint64_t* words) {
  ClusterConfig c;
  c.machines = a.machines;
  c.words_per_machine = default_words_per_machine(n, a.machines, cls, a.cap_constant);
  c.enforce_caps = !a.no_caps;
  c.seed = a.seed;
  *words = c.words_per_machine;
  return Cluster(c, n);
}

json metrics_record(const SolveArgs& a, std::uint64_t n, const Cluster& cl) {
  json j = json::parse(metrics_json(cl.metrics()));
  j["problem"] = a.problem;
  j["n"] = n;
  j["m"] = a.machines;
  j["seed"] = a.seed;
  j["max_resident"] = cl.max_resident();
  return j;
}

int cmd_solve(const SolveArgs& a) {
  if (!known_problem(a.problem)) throw UsageError("unknown problem '" + a.problem + "'");
  if (a.machines < 2) throw UsageError("--machines must be at least 2");
  if (a.cap_constant <= 0) throw UsageError("--cap-constant must be positive");
  if ((a.problem == "kst" || is_kcluster(a.problem)) && a.k == 0) throw UsageError("--k is required for " + a.problem);
  const auto text = read_input(a.in);
  const auto start = std::chrono::steady_clock::now();

  json rep;
  rep["problem"] = a.problem;
  rep["m"] = a.machines;
  rep["seed"] = a.seed;
  std::optional<Value> answer, oracle;
  std::uint64_t n = 0, words = 0;
  std::optional<Cluster> cluster;

  auto emit_cap = [&](const CapExceeded& e) {
    rep["n"] = n;
    rep["error"] = "CapExceeded";
    rep["cap_kind"] = cap_kind_name(e.cap_kind);
    rep["machine"] = e.machine;
    rep["round"] = e.round;
    rep["used"] = e.used;
    rep["cap"] = e.cap;
    rep["words_per_machine"] = words;
    std::cout << rep.dump() << "\n";
    if (cluster && !a.metrics_out.empty()) write_output(a.metrics_out, metrics_record(a, n, *cluster).dump() + "\n");
    return kCap;
  };

  try {
    if (is_geo(a.problem)) {
      const Metric metric = [&] {
        try {
          return parse_metric(a.metric);
        } catch (const Error& e) {
          throw UsageError(e.what());
        }
      }();
      if (a.problem == "mst-sparse") {
        Graph g = parse_graph(text);
        n = g.n;
        cluster.emplace(make_cluster(a, g.n + g.edges.size(), SpaceClass::Linear, &words));
        auto r = sparse_mst(g, *cluster, a.seed);
        answer = r.total_key;
        rep["mst_edges"] = r.edges.size();
        rep["super_rounds"] = r.super_rounds;
        if (a.verify) oracle = total_weight(oracle_mst(g));
      } else {
        PointSet ps = parse_points(text);
        n = ps.size();
        rep["metric"] = metric_name(metric);
        cluster.emplace(make_cluster(a, n, SpaceClass::Linear, &words));
        if (a.problem == "mst-metric") {
          auto r = metric_mst(ps, metric, *cluster, a.seed);
          answer = r.total_key;
          rep["mst_edges"] = r.edges.size();
          rep["length"] = r.length;
          rep["super_rounds"] = r.super_rounds;
          rep["filtered_edges"] = r.filtered_edges;
          if (a.verify) oracle = total_weight(oracle_metric_mst(ps, metric));
        } else {
          auto r = closest_pair(ps, metric, *cluster, a.seed);
          answer = r.key;
          rep["pair"] = {r.u, r.v};
          rep["distance"] = r.distance;
          if (a.verify) oracle = oracle_closest_pair(ps, metric).key;
        }
      }
    } else {
      Tree t = parse_tree(text);
      n = t.size();
      rep["scale"] = integer_weights(t).scale;
      if (is_kcluster(a.problem)) {
        // Single-machine dynamic program; no simulated rounds.
        const auto k = std::min<std::uint64_t>(a.k, n);
        answer = a.problem == "kmedian" ? solve_kmedian(t, k) : solve_kcenter(t, k);
      } else if (is_polylog(a.problem)) {
        cluster.emplace(make_cluster(a, n, SpaceClass::Polylog, &words));
        auto plugin = make_polylog_plugin(a.problem);
        auto r = solve_polylog(*plugin, t, *cluster, a.seed);
        answer = r.answer;
        rep["tb_size"] = r.tb_size;
        rep["iterations"] = r.iterations;
        rep["components"] = r.components;
      } else {
        cluster.emplace(make_cluster(a, n, SpaceClass::Linear, &words));
        auto r = a.problem == "bisection" ? solve_bisection(t, *cluster, a.seed)
                                          : solve_kspanning(t, a.k, *cluster, a.seed);
        answer = r.answer;
        rep["tb_size"] = r.tb_size;
        rep["components"] = r.components;
        rep["schedule_depth"] = r.schedule_depth;
        rep["max_borders"] = r.max_borders;
      }
      if (a.verify) oracle = oracle_tree(a.problem, t, a.k);
      if (a.problem == "kst" || is_kcluster(a.problem)) rep["k"] = a.k;
    }
  } catch (const CapExceeded& e) {
    return emit_cap(e);
  }

  rep["n"] = n;
  rep["answer"] = *answer;
  rep["rounds"] = cluster ? cluster->rounds() : 0;
  rep["max_resident"] = cluster ? cluster->max_resident() : 0;
  rep["words_per_machine"] = words;
  rep["oracle_answer"] = oracle ? json(*oracle) : json(nullptr);
  rep["match"] = oracle ? json(*oracle == *answer) : json(nullptr);
  if (a.wall_time)
    rep["wall_ms"] = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  std::cout << rep.dump() << "\n";
  if (!a.metrics_out.empty()) {
    json mr = cluster ? metrics_record(a, n, *cluster) : json{{"rounds", 0}, {"per_round", json::array()}};
    mr["problem"] = a.problem;
    mr["n"] = n;
    mr["m"] = a.machines;
    mr["seed"] = a.seed;
    if (!cluster) mr["max_resident"] = 0;
    write_output(a.metrics_out, mr.dump() + "\n");
  }
  return oracle && *oracle != *answer ? kMismatch : kOk;
}

// ---------------------------------------------------------------- stats

// Nearest-rank percentile of a sorted sample.
double percentile(const std::vector<double>& s, double q) {
  const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(s.size())));
  return s[std::max<std::size_t>(rank, 1) - 1];
}

double median(const std::vector<double>& s) {
  const std::size_t k = s.size();
  return k % 2 ? s[k / 2] : (s[k / 2 - 1] + s[k / 2]) / 2;
}

json summary(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  return {{"max", xs.back()}, {"median", median(xs)}, {"p95", percentile(xs, 0.95)}};
}

int cmd_stats(const std::vector<std::string>& files) {
  if (files.empty()) throw UsageError("--metrics needs at least one file");
  struct Group {
    std::vector<double> rounds, resident, sent, received;
  };
  std::map<std::tuple<std::string, std::uint64_t, std::uint64_t>, Group> groups;
  for (const auto& f : files) {
    std::istringstream lines(read_input(f));
    std::string line;
    while (std::getline(lines, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      json j;
      try {
        j = json::parse(line);
      } catch (const json::exception& e) {
        throw std::runtime_error(f + ": " + e.what());
      }
      auto& g = groups[{j.value("problem", std::string("?")), j.value("n", std::uint64_t{0}),
                        j.value("m", std::uint64_t{0})}];
      double sent = 0, recv = 0, res = j.value("max_resident", 0.0);
      for (const auto& r : j.value("per_round", json::array())) {
        sent = std::max(sent, r.value("max_sent", 0.0));
        recv = std::max(recv, r.value("max_received", 0.0));
        res = std::max(res, r.value("max_resident", 0.0));
      }
      g.rounds.push_back(j.value("rounds", 0.0));
      g.resident.push_back(res);
      g.sent.push_back(sent);
      g.received.push_back(recv);
    }
  }
  if (groups.empty()) throw std::runtime_error("no metric records found");
  for (const auto& [key, g] : groups) {
    json out{{"problem", std::get<0>(key)},
             {"n", std::get<1>(key)},
             {"m", std::get<2>(key)},
             {"samples", g.rounds.size()},
             {"rounds", summary(g.rounds)},
             {"max_resident", summary(g.resident)},
             {"max_sent", summary(g.sent)},
             {"max_received", summary(g.received)}};
    std::cout << out.dump() << "\n";
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MPC tree dynamic programs on a simulated cluster"};
  app.require_subcommand(1);

  GenArgs g;
  auto* gen = app.add_subcommand("gen", "Generate a tree, point set or sparse graph");
  gen->add_option("--kind", g.kind, "Tree kind, 'points' or 'graph'")->required();
  gen->add_option("--n", g.n, "Vertices or points")->required();
  gen->add_option("--seed", g.seed, "Random seed");
  gen->add_option("--weights", g.weights, "none | unit | uniform:lo:hi");
  gen->add_option("--out", g.out, "Output file (stdout if omitted)");
  gen->add_option("--dim", g.dim, "Point dimension");
  gen->add_option("--range", g.range, "Coordinate range [0, range)");
  gen->add_option("--edges", g.edges, "Graph edges (default 3n)");

  SolveArgs s;
  auto* solve = app.add_subcommand("solve", "Run a solver and print a JSON report");
  solve->add_option("--problem", s.problem, "Problem name")->required();
  solve->add_option("--in", s.in, "Input file, '-' for stdin")->required();
  solve->add_option("--machines", s.machines, "Simulated machines");
  solve->add_option("--seed", s.seed, "Random seed");
  solve->add_flag("--verify", s.verify, "Compare with the sequential oracle");
  solve->add_option("--metrics-out", s.metrics_out, "Write per-round metrics (JSON line)");
  solve->add_option("--cap-constant", s.cap_constant, "Constant in the per-machine word budget");
  solve->add_option("--k", s.k, "k for kst, kmedian, kcenter");
  solve->add_option("--metric", s.metric, "euclidean | manhattan | chebyshev");
  solve->add_flag("--wall-time", s.wall_time, "Include wall time in the report");
  solve->add_flag("--no-caps", s.no_caps, "Record but do not enforce the word budget");

  std::vector<std::string> files;
  auto* stats = app.add_subcommand("stats", "Aggregate metric files: max, median, p95");
  stats->add_option("--metrics", files, "Metric files written by solve --metrics-out");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*gen) return cmd_gen(g);
    if (*solve) return cmd_solve(s);
    return cmd_stats(files);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == ErrorKind::InvalidArgument || e.kind() == ErrorKind::InfeasibleK ? kUsage : kFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
}
