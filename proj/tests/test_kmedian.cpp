#include <algorithm>
#include <functional>

#include "doctest.h"
#include "mpcdp/linear_problems.hpp"
#include "mpcdp/oracles.hpp"

using namespace mpcdp;

namespace {

// All-pairs distances by a walk from every vertex, scaled weights.
std::vector<std::vector<Value>> distances(const Tree& t, std::vector<std::uint64_t>& ids) {
  auto w = integer_weights(t);
  ids.clear();
  for (const auto& v : t.vertices()) ids.push_back(v.index);
  std::sort(ids.begin(), ids.end());
  const std::size_t n = ids.size();
  auto pos = [&](std::uint64_t x) { return std::lower_bound(ids.begin(), ids.end(), x) - ids.begin(); };
  std::vector<std::vector<std::pair<std::size_t, Value>>> adj(n);
  for (const auto& v : t.vertices())
    if (v.parent != kRoot) {
      const auto a = pos(v.index), b = pos(v.parent);
      adj[a].emplace_back(b, w.of(v.index));
      adj[b].emplace_back(a, w.of(v.index));
    }
  std::vector<std::vector<Value>> d(n, std::vector<Value>(n, -1));
  for (std::size_t s = 0; s < n; ++s) {
    std::vector<std::size_t> stack{s};
    d[s][s] = 0;
    while (!stack.empty()) {
      auto u = stack.back();
      stack.pop_back();
      for (auto [x, wx] : adj[u])
        if (d[s][x] < 0) {
          d[s][x] = d[s][u] + wx;
          stack.push_back(x);
        }
    }
  }
  return d;
}

// Exhaustive over center sets of size min(k, n).
Value enumerate(const Tree& t, std::size_t k, bool center) {
  std::vector<std::uint64_t> ids;
  auto d = distances(t, ids);
  const std::size_t n = ids.size();
  k = std::min(k, n);
  std::vector<std::size_t> pick(k);
  Value best = kPosInf;
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t i, std::size_t from) {
    if (i == k) {
      Value cost = 0;
      for (std::size_t c = 0; c < n; ++c) {
        Value near = kPosInf;
        for (auto s : pick) near = std::min(near, d[s][c]);
        cost = center ? std::max(cost, near) : cost + near;
      }
      best = std::min(best, cost);
      return;
    }
    for (std::size_t s = from; s < n; ++s) {
      pick[i] = s;
      rec(i + 1, s + 1);
    }
  };
  rec(0, 0);
  return best;
}

}  // namespace

TEST_CASE("three vertex path") {
  Tree p = gen_tree(TreeKind::Path, 3, 1, WeightDist::parse("unit"));
  CHECK(solve_kmedian(p, 1) == 2);
  CHECK(solve_kcenter(p, 1) == 1);
  CHECK(solve_kmedian(p, 2) == 1);
  CHECK(solve_kmedian(p, 3) == 0);
  CHECK(solve_kcenter(p, 3) == 0);
}

TEST_CASE("degenerate inputs") {
  Tree one = parse_tree("1\n1 0");
  CHECK(solve_kmedian(one, 1) == 0);
  CHECK(solve_kcenter(one, 1) == 0);
  CHECK_THROWS_AS(solve_kmedian(one, 0), Error);
  Tree t = gen_tree(TreeKind::RandomRecursive, 20, 3, WeightDist::parse("uniform:1:9"));
  CHECK(solve_kmedian(t, 20) == 0);
  CHECK(solve_kcenter(t, 20) == 0);
}

TEST_CASE("leaf functions") {
  Tree p = gen_tree(TreeKind::Path, 2, 1, WeightDist::parse("unit"));
  for (bool center : {false, true}) {
    bool seen = false;
    kcluster_dp(p, 2, center, [&](std::uint64_t v, const NodeFunctions& f) {
      if (v != 2) return;
      seen = true;
      CHECK(f.eval_G(1, 0) == 0);
      CHECK(f.eval_G(1, kPosInf) == 0);
      CHECK(f.eval_F(1, 0) == 0);
      CHECK(f.eval_F(1, 7) == 0);
      CHECK(f.eval_G(0, kPosInf) == kPosInf);
      CHECK(f.eval_F(0, 7) == 7);
      CHECK(f.eval_G(1, -1) == kPosInf);
    });
    CHECK(seen);
  }
}

TEST_CASE("node functions are monotone and agree at infinity") {
  for (bool center : {false, true})
    for (std::uint64_t seed = 1; seed <= 25; ++seed) {
      const auto kind = all_tree_kinds()[seed % all_tree_kinds().size()];
      Tree t = gen_tree(kind, 4 + seed, seed, WeightDist::parse("uniform:1:12"));
      const std::size_t k = 1 + seed % 4;
      std::size_t nodes = 0;
      kcluster_dp(t, k, center, [&](std::uint64_t, const NodeFunctions& f) {
        ++nodes;
        for (std::size_t p = 0; p <= k; ++p) {
          for (std::size_t i = 1; i < f.G[p].size(); ++i) CHECK(f.G[p][i] <= f.G[p][i - 1]);
          Value prev = f.eval_F(p, 0);
          for (Value x = 1; x <= 60; ++x) {
            const Value cur = f.eval_F(p, x);
            CHECK(cur >= prev);
            prev = cur;
          }
          CHECK(f.eval_F(p, kPosInf) == f.eval_G(p, kPosInf));
        }
      });
      CHECK(nodes >= t.size());
    }
}

TEST_CASE("matches enumeration") {
  for (bool center : {false, true})
    for (auto kind : all_tree_kinds())
      for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        Tree t = gen_tree(kind, 3 + seed * 6, seed, WeightDist::parse(seed % 2 ? "uniform:1:20" : "unit"));
        for (std::size_t k = 1; k <= 3; ++k) {
          const Value got = center ? solve_kcenter(t, k) : solve_kmedian(t, k);
          CHECK(got == enumerate(t, k, center));
        }
      }
  // Rational weights.
  Tree r = parse_tree("4\n1 0\n2 1 1/2\n3 1 1/3\n4 3 1/3");
  CHECK(kcluster_dp(r, 1, false).scale == 6);
  CHECK(solve_kmedian(r, 1) == enumerate(r, 1, false));
  CHECK(solve_kcenter(r, 2) == enumerate(r, 2, true));
}

TEST_CASE("oracle agrees on small inputs") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Tree t = gen_tree(TreeKind::RandomRecursive, 2 + seed % 11, seed, WeightDist::parse("uniform:1:30"));
    for (std::size_t k = 1; k <= 3; ++k) {
      CHECK(oracle_kmedian(t, k) == solve_kmedian(t, std::min<std::size_t>(k, t.size())));
      CHECK(oracle_kcenter(t, k) == solve_kcenter(t, std::min<std::size_t>(k, t.size())));
    }
  }
}

TEST_CASE("more centers never cost more") {
  Tree t = gen_tree(TreeKind::Caterpillar, 60, 4, WeightDist::parse("uniform:1:50"));
  Value prev_m = kPosInf, prev_c = kPosInf;
  for (std::size_t k = 1; k <= 8; ++k) {
    const Value m = solve_kmedian(t, k), c = solve_kcenter(t, k);
    CHECK(m <= prev_m);
    CHECK(c <= prev_c);
    prev_m = m;
    prev_c = c;
  }
}
