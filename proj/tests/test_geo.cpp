#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "mpcdp/geo_mst.hpp"
#include "mpcdp/oracles.hpp"

using namespace mpcdp;

namespace {

Cluster loose_cluster(std::uint32_t m, std::size_t n) {
  ClusterConfig c;
  c.machines = m;
  c.words_per_machine = default_words_per_machine(n, m, SpaceClass::Linear);
  c.enforce_caps = false;
  return Cluster(c, n);
}

// Dense Prim over the complete graph; independent of any sorting.
Value prim_total(const PointSet& ps, Metric metric) {
  const std::size_t n = ps.size();
  std::vector<Value> best(n, kPosInf);
  std::vector<bool> in(n, false);
  best[0] = 0;
  Value total = 0;
  for (std::size_t it = 0; it < n; ++it) {
    std::size_t u = n;
    for (std::size_t v = 0; v < n; ++v)
      if (!in[v] && (u == n || best[v] < best[u])) u = v;
    in[u] = true;
    total += best[u];
    for (std::size_t v = 0; v < n; ++v)
      if (!in[v]) best[v] = std::min(best[v], distance_key(ps, u, v, metric));
  }
  return total;
}

std::set<std::uint64_t> ids(const std::vector<Edge>& es) {
  std::set<std::uint64_t> s;
  for (const auto& e : es) s.insert(e.id);
  return s;
}

}  // namespace

TEST_CASE("distance keys") {
  PointSet ps = parse_points("2 2\n0 0\n3 -4");
  CHECK(distance_key(ps, 0, 1, Metric::Euclidean) == 25);
  CHECK(key_length(25, Metric::Euclidean) == doctest::Approx(5.0));
  CHECK(distance_key(ps, 0, 1, Metric::Manhattan) == 7);
  CHECK(distance_key(ps, 0, 1, Metric::Chebyshev) == 4);
  CHECK(parse_metric(metric_name(Metric::Chebyshev)) == Metric::Chebyshev);
  CHECK_THROWS_AS(parse_metric("cosine"), Error);
  CHECK(parse_points(emit_points(gen_points(30, 3, 2))).points == gen_points(30, 3, 2).points);
  CHECK_THROWS_AS(parse_points("2 2\n0 0"), Error);
}

TEST_CASE("graph text form") {
  Graph g = gen_sparse_graph(50, 120, 3);
  Graph h = parse_graph(emit_graph(g));
  CHECK(h.n == g.n);
  CHECK(h.edges == g.edges);
  CHECK_THROWS_AS(parse_graph("2 1\n0 5 3"), Error);
}

TEST_CASE("closest pair oracle") {
  PointSet ps = parse_points("4 1\n0\n10\n13\n3");
  auto p = oracle_closest_pair(ps, Metric::Manhattan);
  CHECK(p.key == 3);
  CHECK(p.u == 0);
  CHECK(p.v == 3);  // ties broken by (u, v)
}

TEST_CASE("distributed closest pair") {
  for (auto metric : {Metric::Euclidean, Metric::Manhattan, Metric::Chebyshev})
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
      PointSet ps = gen_points(40 + seed * 30, 1 + seed % 3, seed, 1000);
      auto cl = loose_cluster(16, ps.size());
      auto got = closest_pair(ps, metric, cl, seed);
      auto want = oracle_closest_pair(ps, metric);
      CHECK(got.key == want.key);
      CHECK(got.u == want.u);
      CHECK(got.v == want.v);
      CHECK(got.rounds == 3);
    }
  PointSet two = parse_points("2 2\n1 1\n4 5");
  auto cl = loose_cluster(4, 2);
  CHECK(closest_pair(two, Metric::Euclidean, cl, 1).distance == doctest::Approx(5.0));
}

TEST_CASE("local filter never drops a tree edge") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Graph g = gen_sparse_graph(60, 300, seed, 50);
    const auto mst = ids(oracle_mst(g));
    LocalMstFilter f(60);
    auto order = g.edges;
    std::shuffle(order.begin(), order.end(), make_rng({seed}));
    for (const auto& e : order) {
      auto ev = f.insert(e);
      if (ev) CHECK(mst.count(ev->id) == 0);
    }
    CHECK(ids(f.edges()) == mst);
  }
  LocalMstFilter loop(2);
  Edge self{3, 3, 1, 0};
  CHECK(loop.insert(self).has_value());
  CHECK(loop.size() == 0);
}

TEST_CASE("sparse mst matches the oracle") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const std::uint64_t n = 20 + seed * 40;
    Graph g = gen_sparse_graph(n, 3 * n, seed, seed % 2 ? 5 : 100000);
    auto cl = loose_cluster(16, n);
    auto got = sparse_mst(g, cl, seed);
    auto want = oracle_mst(g);
    CHECK(got.edges == want);
    CHECK(got.total_key == total_weight(want));
    CHECK(got.rounds == cl.rounds());
  }
  // Disconnected input: a spanning forest.
  Graph f = parse_graph("4 2\n0 1 3\n2 3 4");
  auto cl = loose_cluster(4, 4);
  auto r = sparse_mst(f, cl, 1);
  CHECK(r.edges.size() == 2);
  CHECK(r.total_key == 7);
}

TEST_CASE("sparse mst super rounds") {
  const std::uint64_t n = 1024;
  Graph g = gen_sparse_graph(n, 4 * n, 7);
  auto cl = loose_cluster(16, n);
  auto r = sparse_mst(g, cl, 7);
  CHECK(r.edges == oracle_mst(g));
  CHECK(r.super_rounds <= 11);  // log2 n halvings at worst
}

TEST_CASE("metric mst matches the oracle and Prim") {
  for (auto metric : {Metric::Euclidean, Metric::Manhattan, Metric::Chebyshev})
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
      PointSet ps = gen_points(30 + seed * 25, 2, seed, seed % 2 ? 16 : 100000);
      auto cl = loose_cluster(16, ps.size());
      auto got = metric_mst(ps, metric, cl, seed);
      auto want = oracle_metric_mst(ps, metric);
      CHECK(got.edges == want);
      CHECK(got.total_key == prim_total(ps, metric));
      CHECK(got.edges.size() == ps.size() - 1);
      CHECK(got.filtered_edges >= got.edges.size());
    }
}

TEST_CASE("closest pair small examples") {
  auto cl = loose_cluster(4, 3);
  auto r = closest_pair(parse_points("3 1\n0\n1\n3"), Metric::Euclidean, cl, 1);
  CHECK(r.u == 0);
  CHECK(r.v == 1);
  CHECK(r.distance == doctest::Approx(1.0));
  auto c2 = loose_cluster(4, 2);
  CHECK(closest_pair(parse_points("2 2\n5 5\n5 5"), Metric::Euclidean, c2, 1).key == 0);
  PointSet big = gen_points(512, 2, 99, 1 << 16);
  ClusterConfig cfg;
  cfg.machines = 16;
  cfg.words_per_machine = default_words_per_machine(512, 16, SpaceClass::Linear);
  Cluster c3(cfg, 512);
  auto got = closest_pair(big, Metric::Euclidean, c3, 4);
  // Quadratic scan.
  Value best = kPosInf;
  for (std::size_t a = 0; a < big.size(); ++a)
    for (std::size_t b = a + 1; b < big.size(); ++b) best = std::min(best, distance_key(big, a, b, Metric::Euclidean));
  CHECK(got.key == best);
}

TEST_CASE("group sizes stay within twice the mean") {
  const std::uint64_t n = 4096;
  const std::uint32_t m = 64, k = pair_groups(m);
  CHECK(k == 8);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::vector<std::uint64_t> size(k, 0);
    for (std::uint64_t i = 0; i < n; ++i) ++size[group_of(seed, i, k)];
    CHECK(*std::max_element(size.begin(), size.end()) <= 2 * n / k);
  }
}

TEST_CASE("filter small examples") {
  LocalMstFilter tri(3);
  CHECK_FALSE(tri.insert({0, 1, 1, 0}).has_value());
  CHECK_FALSE(tri.insert({1, 2, 2, 1}).has_value());
  auto ev = tri.insert({0, 2, 3, 2});
  REQUIRE(ev.has_value());
  CHECK(ev->weight == 3);
  // Heaviest edge arriving first is the one evicted later.
  LocalMstFilter late(3);
  late.insert({0, 2, 3, 2});
  late.insert({0, 1, 1, 0});
  auto ev2 = late.insert({1, 2, 2, 1});
  REQUIRE(ev2.has_value());
  CHECK(ev2->id == 2);
  LocalMstFilter forest(8);
  for (std::uint64_t v = 1; v < 8; ++v) CHECK_FALSE(forest.insert({v / 2, v, static_cast<Value>(v), v}).has_value());
  CHECK(forest.size() == 7);
}

TEST_CASE("filter equals the offline tree on 200 graphs") {
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    const std::uint64_t n = 2 + seed % 63;
    Graph g = gen_sparse_graph(n, 3 * n, seed, seed % 3 ? 20 : 1000);
    LocalMstFilter f(n);
    for (const auto& e : g.edges) {
      auto ev = f.insert(e);
      if (ev) CHECK(ids(oracle_mst(g)).count(ev->id) == 0);
    }
    CHECK(f.edges() == oracle_mst(g));
  }
}

TEST_CASE("metric and sparse small examples") {
  auto cl = loose_cluster(4, 3);
  CHECK(metric_mst(parse_points("3 1\n0\n1\n3"), Metric::Manhattan, cl, 1).total_key == 3);
  auto c2 = loose_cluster(4, 4);
  auto sq = metric_mst(parse_points("4 2\n0 0\n0 1\n1 0\n1 1"), Metric::Euclidean, c2, 1);
  CHECK(sq.edges.size() == 3);
  CHECK(sq.length == doctest::Approx(3.0));
  auto c3 = loose_cluster(4, 5);
  auto path = sparse_mst(parse_graph("5 4\n0 1 7\n1 2 3\n2 3 9\n3 4 1"), c3, 2);
  CHECK(path.edges.size() == 4);
  auto c4 = loose_cluster(4, 4);
  auto cyc = sparse_mst(parse_graph("4 4\n0 1 1\n1 2 2\n2 3 3\n3 0 4"), c4, 2);
  CHECK(ids(cyc.edges) == std::set<std::uint64_t>{0, 1, 2});
}

TEST_CASE("sparse mst round budget") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const std::uint64_t n = 64u << (seed % 5);
    Graph g = gen_sparse_graph(n, 3 * n, seed);
    auto cl = loose_cluster(16, n);
    auto r = sparse_mst(g, cl, seed);
    const auto lg = static_cast<std::uint64_t>(std::ceil(std::log2(static_cast<double>(n))));
    CHECK(r.edges == oracle_mst(g));
    CHECK(r.super_rounds <= lg);
    CHECK(r.rounds <= lg * (lg + 3));
  }
}

TEST_CASE("metric mst on 256 points") {
  PointSet ps = gen_points(256, 3, 12);
  ClusterConfig cfg;
  cfg.machines = 16;
  cfg.words_per_machine = default_words_per_machine(256, 16, SpaceClass::Linear);
  cfg.enforce_caps = false;
  Cluster cl(cfg, 256);
  auto r = metric_mst(ps, Metric::Euclidean, cl, 3);
  CHECK(r.total_key == prim_total(ps, Metric::Euclidean));
  CHECK(r.edges.size() == 255);
}
