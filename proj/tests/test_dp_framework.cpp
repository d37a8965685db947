#include <algorithm>
#include <set>

#include "doctest.h"
#include "mpcdp/decomposition.hpp"
#include "mpcdp/linear_problems.hpp"
#include "mpcdp/polylog_problems.hpp"

using namespace mpcdp;

namespace {

struct Instance {
  Tree tb;
  std::vector<ExtVertex> verts;
  std::unordered_map<std::uint64_t, ExtVertex> by;
  std::int64_t scale = 1;
};

Instance make_instance(TreeKind kind, std::size_t n, std::uint64_t seed) {
  Tree t = gen_tree(kind, n, seed, WeightDist::parse(seed % 3 ? "uniform:1:20" : "none"));
  Instance in;
  in.tb = binary_extension_sequential(t).tb;
  in.verts = ext_vertices(in.tb);
  for (const auto& v : in.verts) in.by[v.index] = v;
  in.scale = integer_weights(t).scale;
  return in;
}

// Vertices of the subtree of `top`, skipping the subtrees of `cut`.
std::vector<ExtVertex> region(const Instance& in, std::uint64_t top, const std::set<std::uint64_t>& cut) {
  std::vector<ExtVertex> out;
  std::vector<std::uint64_t> stack{top};
  while (!stack.empty()) {
    const auto v = stack.back();
    stack.pop_back();
    if (cut.count(v)) continue;
    out.push_back(in.by.at(v));
    for (auto c : in.tb.children(v)) stack.push_back(c);
  }
  return out;
}

UnknownLeaf leaf(const Instance& in, std::uint64_t v) {
  const auto& x = in.by.at(v);
  return {v, x.aux, int_weight(x, in.scale)};
}

bool is_desc(const Instance& in, std::uint64_t v, std::uint64_t anc) {
  for (auto u = v; u != kRoot; u = in.by.at(u).parent)
    if (u == anc) return true;
  return false;
}

std::vector<std::uint64_t> non_roots(const Instance& in) {
  std::vector<std::uint64_t> out;
  for (const auto& v : in.verts)
    if (v.parent != kRoot) out.push_back(v.index);
  std::sort(out.begin(), out.end());
  return out;
}

// Random connected vertex set of T^b with `size` vertices.
std::vector<ExtVertex> connected_set(const Instance& in, std::size_t size, std::mt19937_64& rng) {
  std::vector<std::uint64_t> frontier{in.verts[rng() % in.verts.size()].index};
  std::set<std::uint64_t> taken;
  std::vector<ExtVertex> out;
  while (!frontier.empty() && out.size() < size) {
    const std::size_t i = rng() % frontier.size();
    const auto v = frontier[i];
    frontier.erase(frontier.begin() + static_cast<std::ptrdiff_t>(i));
    if (!taken.insert(v).second) continue;
    out.push_back(in.by.at(v));
    const auto& x = in.by.at(v);
    if (x.parent != kRoot && !taken.count(x.parent)) frontier.push_back(x.parent);
    for (int j = 0; j < x.nchild; ++j)
      if (!taken.count(x.child[j])) frontier.push_back(x.child[j]);
  }
  return out;
}

std::uint64_t top_of(const std::vector<ExtVertex>& vs) {
  std::set<std::uint64_t> ids;
  for (const auto& v : vs) ids.insert(v.index);
  for (const auto& v : vs)
    if (v.parent == kRoot || !ids.count(v.parent)) return v.index;
  return 0;
}

// Splits a connected set at an internal edge (parent side, child side).
struct Split {
  std::vector<ExtVertex> upper, lower;
  JoinEdge edge;
};

Split split_set(const Instance& in, const std::vector<ExtVertex>& vs, std::mt19937_64& rng) {
  std::set<std::uint64_t> ids;
  for (const auto& v : vs) ids.insert(v.index);
  std::vector<std::uint64_t> lowers;
  for (const auto& v : vs)
    if (v.parent != kRoot && ids.count(v.parent)) lowers.push_back(v.index);
  std::sort(lowers.begin(), lowers.end());
  const auto c = lowers[rng() % lowers.size()];
  Split s;
  for (const auto& v : vs) (is_desc(in, v.index, c) ? s.lower : s.upper).push_back(v);
  const auto& cv = in.by.at(c);
  s.edge = JoinEdge{cv.parent, c, true, cv.aux, int_weight(cv, in.scale)};
  return s;
}

Cluster make_cluster(std::uint32_t m) {
  ClusterConfig cfg;
  cfg.machines = m;
  cfg.words_per_machine = 1 << 24;
  return Cluster(cfg, 64);
}

std::vector<std::uint64_t> random_cuts(std::uint64_t flat, std::uint32_t q, std::mt19937_64& rng) {
  std::vector<std::uint64_t> cuts{0, flat};
  for (std::uint32_t i = 1; i < q; ++i) cuts.push_back(rng() % (flat + 1));
  std::sort(cuts.begin(), cuts.end());
  return cuts;
}

}  // namespace

TEST_CASE("integer weight conventions") {
  ExtVertex v;
  v.aux = true;
  CHECK(int_weight(v, 6) == 0);
  v.aux = false;
  CHECK(int_weight(v, 6) == 6);
  v.has_weight = true;
  v.weight = Rational(1, 2);
  CHECK(int_weight(v, 6) == 3);
}

TEST_CASE("polylog partial wire form") {
  PolyPartial pd{5, {7, 9}, 2, std::vector<Value>(8, 3)};
  pd.table[2] = kNegInf;
  auto w = pd.encode();
  CHECK(w.size() == pd.words());
  std::size_t i = 0;
  CHECK(PolyPartial::decode(w, i) == pd);
  CHECK(i == w.size());
}

TEST_CASE("single known leaf gives the plugin's leaf vector") {
  ExtVertex v;
  v.index = 1;
  for (const auto& name : polylog_problem_names()) {
    auto p = make_polylog_plugin(name);
    auto pd = compress_component(*p, {v}, 1, {}, 1);
    CHECK(pd.table == node_vector(*p, NodeView{}, nullptr, nullptr));
  }
  MatchingPlugin mp;
  CHECK(compress_component(mp, {v}, 1, {}, 1).table == std::vector<Value>{kNegInf, 0});
}

TEST_CASE("merge of partials equals compress of the union") {
  int cases = 0;
  for (const auto& name : polylog_problem_names()) {
    auto p = make_polylog_plugin(name);
    for (std::uint64_t seed = 1; seed <= 40; ++seed) {
      const auto kind = all_tree_kinds()[seed % all_tree_kinds().size()];
      Instance in = make_instance(kind, 12, seed);
      auto rng = make_rng({seed, 77});
      const auto cand = non_roots(in);
      if (cand.empty()) continue;
      const auto c = cand[rng() % cand.size()];
      // Optional second unknown leaf below c.
      std::vector<std::uint64_t> below;
      for (auto v : cand)
        if (v != c && is_desc(in, v, c)) below.push_back(v);
      const bool deep = !below.empty() && rng() % 2;
      const auto d = deep ? below[rng() % below.size()] : 0;

      std::set<std::uint64_t> cut_d;
      std::vector<UnknownLeaf> dl;
      if (deep) {
        cut_d.insert(d);
        dl.push_back(leaf(in, d));
      }
      auto top = compress_component(*p, region(in, in.tb.root(), {c}), in.tb.root(), {leaf(in, c)}, in.scale);
      auto bottom = compress_component(*p, region(in, c, cut_d), c, dl, in.scale);
      auto whole = compress_component(*p, region(in, in.tb.root(), cut_d), in.tb.root(), dl, in.scale);
      CHECK(merge_partial(*p, top, bottom) == whole);
      ++cases;
    }
  }
  CHECK(cases > 150);
}

TEST_CASE("merge order of three stacked components") {
  for (const auto& name : polylog_problem_names()) {
    auto p = make_polylog_plugin(name);
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      Instance in = make_instance(TreeKind::RandomRecursive, 14, seed);
      auto rng = make_rng({seed, 5});
      const auto cand = non_roots(in);
      const auto b = cand[rng() % cand.size()];
      std::vector<std::uint64_t> below;
      for (auto v : cand)
        if (v != b && is_desc(in, v, b)) below.push_back(v);
      if (below.empty()) continue;
      const auto c = below[rng() % below.size()];
      auto A = compress_component(*p, region(in, in.tb.root(), {b}), in.tb.root(), {leaf(in, b)}, in.scale);
      auto B = compress_component(*p, region(in, b, {c}), b, {leaf(in, c)}, in.scale);
      auto C = compress_component(*p, region(in, c, {}), c, {}, in.scale);
      const auto ab_c = merge_partial(*p, merge_partial(*p, A, B), C);
      const auto a_bc = merge_partial(*p, A, merge_partial(*p, B, C));
      CHECK(ab_c == a_bc);
      CHECK(ab_c.table == sequential_root_vector(*p, in.tb, in.scale));
    }
  }
}

TEST_CASE("evaluating a partial at concrete leaves") {
  for (const auto& name : polylog_problem_names()) {
    auto p = make_polylog_plugin(name);
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      Instance in = make_instance(TreeKind::Caterpillar, 13, seed);
      const auto cand = non_roots(in);
      const auto c = cand[seed % cand.size()];
      auto top = compress_component(*p, region(in, in.tb.root(), {c}), in.tb.root(), {leaf(in, c)}, in.scale);
      auto sub = compress_component(*p, region(in, c, {}), c, {}, in.scale);
      CHECK(evaluate_partial(*p, top, {sub.table}) == sequential_root_vector(*p, in.tb, in.scale));
    }
  }
}

TEST_CASE("too many unknown leaves") {
  MatchingPlugin mp;
  PolyPartial a{1, {2, 3}, 2, std::vector<Value>(8, 0)};
  PolyPartial b{2, {4, 5}, 2, std::vector<Value>(8, 0)};
  CHECK_THROWS_AS(merge_partial(mp, a, b), Error);
  PolyPartial c{9, {}, 2, {0, 0}};
  CHECK_THROWS_AS(merge_partial(mp, a, c), Error);
}

TEST_CASE("linear singletons and a forced cut") {
  BisectionPlugin bp;
  auto a = singleton_data(bp, 1, false, 1);
  auto b = singleton_data(bp, 2, false, 1);
  CHECK(a.meta.len == 2);
  CHECK(a.meta.configs == 2);
  auto ab = merge_linear(bp, a, b, JoinEdge{1, 2, true, false, 3}, 1);
  CHECK(ab.meta.borders.empty());
  CHECK(ab.meta.len == 3);
  CHECK(ab.values[1] == 3);  // opposite colours
  CHECK(ab.values[0] == 0);
  CHECK(ab.values[2] == 0);
  CHECK(linear_answer(bp, ab, 1) == 3);
  // An auxiliary vertex is never split from its parent.
  auto x = singleton_data(bp, 3, true, 1);
  CHECK(x.meta.len == 1);
  auto ax = merge_linear(bp, a, x, JoinEdge{1, 3, true, true, 0}, 1);
  CHECK(linear_answer(bp, ax, 1) == 0);
  CHECK(ax.meta.len == 2);
}

TEST_CASE("all-identity chunk emits nothing") {
  BisectionPlugin bp;
  auto a = singleton_data(bp, 1, false, 1);
  auto b = singleton_data(bp, 2, false, 1);
  JoinEdge e{1, 2, true, false, 3};
  auto out = merge_meta(bp, a.meta, b.meta, e, 1);
  CHECK(sub_unify(bp, a.meta, b.meta, out, e, {}, {{0, 0}}).empty());
  CHECK(sub_unify(bp, a.meta, b.meta, out, e, {{0, kPosInf}}, {{0, 0}}).empty());
}

TEST_CASE("linear merge equals compress of the union") {
  BisectionPlugin bp;
  KSpanningPlugin kp;
  int cases = 0;
  for (const LinearPlugin* p : {static_cast<const LinearPlugin*>(&bp), static_cast<const LinearPlugin*>(&kp)}) {
    for (std::uint64_t seed = 1; seed <= 250; ++seed) {
      const auto kind = all_tree_kinds()[seed % all_tree_kinds().size()];
      Instance in = make_instance(kind, 14, seed);
      auto rng = make_rng({seed, 3});
      auto vs = connected_set(in, 2 + rng() % 11, rng);
      if (vs.size() < 2) continue;
      auto s = split_set(in, vs, rng);
      const auto up = compress_linear(*p, s.upper, top_of(s.upper), in.scale);
      const auto lo = compress_linear(*p, s.lower, top_of(s.lower), in.scale);
      const auto whole = compress_linear(*p, vs, top_of(vs), in.scale);
      CHECK(merge_linear(*p, up, lo, s.edge, up.meta.id) == whole);
      // Swapped operand order gives the same vector.
      JoinEdge sw{s.edge.y, s.edge.x, false, s.edge.child_aux, s.edge.child_weight};
      CHECK(merge_linear(*p, lo, up, sw, up.meta.id) == whole);
      ++cases;
    }
  }
  CHECK(cases == 500);
}

TEST_CASE("distributed merge is chunking invariant") {
  BisectionPlugin bp;
  KSpanningPlugin kp;
  for (const LinearPlugin* p : {static_cast<const LinearPlugin*>(&bp), static_cast<const LinearPlugin*>(&kp)}) {
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
      Instance in = make_instance(TreeKind::RandomRecursive, 16, seed);
      auto rng = make_rng({seed, 11});
      auto vs = connected_set(in, 4 + rng() % 9, rng);
      if (vs.size() < 2) continue;
      auto s = split_set(in, vs, rng);
      const auto up = compress_linear(*p, s.upper, top_of(s.upper), in.scale);
      const auto lo = compress_linear(*p, s.lower, top_of(s.lower), in.scale);
      const auto expect = merge_linear(*p, up, lo, s.edge, up.meta.id);
      for (std::uint32_t m : {4u, 16u}) {
        auto cl = make_cluster(m);
        CHECK(distributed_merge(*p, up, lo, s.edge, up.meta.id, cl, seed) == expect);
        CHECK(cl.rounds() == 3);
        const std::uint32_t q = m == 4 ? 2 : 4;
        for (int trial = 0; trial < 10; ++trial) {
          auto c2 = make_cluster(m);
          auto ca = random_cuts(up.meta.flat(), q, rng), cb = random_cuts(lo.meta.flat(), q, rng);
          CHECK(distributed_merge(*p, up, lo, s.edge, up.meta.id, c2, seed + trial, ca, cb) == expect);
        }
      }
    }
  }
}

TEST_CASE("bisection vectors of length 6 and 4 over two chunks") {
  // Two paths of 5 and 3 originals joined end to end.
  BisectionPlugin bp;
  Tree t = gen_tree(TreeKind::Path, 8, 1, WeightDist::parse("uniform:1:9"));
  Instance in;
  in.tb = t;
  in.verts = ext_vertices(t);
  for (const auto& v : in.verts) in.by[v.index] = v;
  auto a = compress_linear(bp, region(in, 1, {6}), 1, 1);
  auto b = compress_linear(bp, region(in, 6, {}), 6, 1);
  CHECK(a.meta.len == 6);
  CHECK(b.meta.len == 4);
  JoinEdge e{5, 6, true, false, int_weight(in.by.at(6), 1)};
  auto cl = make_cluster(4);
  auto got = distributed_merge(bp, a, b, e, 1, cl, 3);
  CHECK(got.meta.len == 9);
  CHECK(got == merge_linear(bp, a, b, e, 1));
  CHECK(got == compress_linear(bp, in.verts, 1, 1));
  // Shifting a boundary by one changes nothing.
  auto cuts = even_chunks(a.meta.flat(), 2);
  cuts[1] += 1;
  auto c2 = make_cluster(4);
  CHECK(distributed_merge(bp, a, b, e, 1, c2, 3, cuts, even_chunks(b.meta.flat(), 2)) == got);
}

TEST_CASE("one chunk per side") {
  KSpanningPlugin kp;
  Instance in = make_instance(TreeKind::Star, 6, 2);
  auto rng = make_rng({1});
  auto s = split_set(in, in.verts, rng);
  auto up = compress_linear(kp, s.upper, top_of(s.upper), in.scale);
  auto lo = compress_linear(kp, s.lower, top_of(s.lower), in.scale);
  auto cl = make_cluster(2);  // floor(sqrt 2) = 1 chunk
  CHECK(distributed_merge(kp, up, lo, s.edge, up.meta.id, cl, 1) == merge_linear(kp, up, lo, s.edge, up.meta.id));
}

TEST_CASE("candidate fan-in") {
  BisectionPlugin bp;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Instance in = make_instance(TreeKind::RandomRecursive, 12, seed);
    auto rng = make_rng({seed});
    auto s = split_set(in, in.verts, rng);
    auto up = compress_linear(bp, s.upper, top_of(s.upper), in.scale);
    auto lo = compress_linear(bp, s.lower, top_of(s.lower), in.scale);
    auto out = merge_meta(bp, up.meta, lo.meta, s.edge, up.meta.id);
    std::vector<std::pair<std::uint64_t, Value>> ca, cb;
    for (std::uint64_t i = 0; i < up.meta.flat(); ++i)
      if (up.values[i] != kPosInf) ca.emplace_back(i, up.values[i]);
    for (std::uint64_t i = 0; i < lo.meta.flat(); ++i)
      if (lo.values[i] != kPosInf) cb.emplace_back(i, lo.values[i]);
    auto cand = sub_unify(bp, up.meta, lo.meta, out, s.edge, ca, cb);
    std::set<std::uint64_t> idx;
    for (const auto& [i, v] : cand) {
      CHECK(i < out.flat());
      idx.insert(i);
    }
    CHECK(idx.size() == cand.size());  // one candidate per output element
    CHECK(cand.size() <= ca.size() * cb.size());
  }
}

TEST_CASE("engine ignores foreign messages") {
  BisectionPlugin bp;
  auto cl = make_cluster(4);
  MergeEngine eng(bp, cl, 1, 10, 8);
  cl.round([&](Cluster::Context& ctx) {
    Payload p;
    MergeEngine::put_element(p, 3, 1, 42);
    ctx.send(eng.holder(3, 1), p);
    ctx.send(0, {0x99, 1, 2, 3});
  });
  cl.round([&](Cluster::Context& ctx) { eng.absorb(ctx); });
  CHECK(eng.held()[eng.holder(3, 1)].at({3, 1}) == 42);
  CHECK(eng.resident(eng.holder(3, 1)) == 3);
}
