#include <cmath>

#include "doctest.h"
#include "mpcdp/decomposition.hpp"

using namespace mpcdp;

namespace {

Cluster make_cluster(std::uint32_t m, std::uint64_t n) {
  ClusterConfig cfg;
  cfg.machines = m;
  cfg.words_per_machine = default_words_per_machine(n, m, SpaceClass::Polylog);
  return Cluster(cfg, n);
}

}  // namespace

TEST_CASE("selection rules") {
  CHECK(select_rule({true, 0, false, false}));
  CHECK(select_rule({false, 2, false, false}));
  CHECK(select_rule({false, 0, true, false}));
  CHECK_FALSE(select_rule({false, 0, false, true}));
  CHECK(select_rule({false, 1, false, true}));
  CHECK_FALSE(select_rule({false, 1, false, false}));
}

TEST_CASE("coin is fair-ish") {
  auto h = coin_hash(5, 1, 1 << 14, 16);
  int ones = 0;
  for (int k = 1; k <= 10000; ++k) ones += h.eval(k) == 1;
  CHECK(ones > 4500);
  CHECK(ones < 5500);
}

TEST_CASE("reference merge targets") {
  ComponentTree ct;
  ct.parent = {{1, kRoot}, {2, 1}, {3, 2}};
  auto t = merge_targets(ct, {{1, true}, {2, false}, {3, false}}, {{1, false}, {2, false}, {3, false}});
  CHECK(t.at(2) == 1);
  CHECK(t.at(3) == 1);
  auto none = merge_targets(ct, {{1, true}, {2, true}, {3, true}}, {{1, false}, {2, false}, {3, false}});
  CHECK(none.empty());
}

TEST_CASE("trivial inputs") {
  Tree one = gen_tree(TreeKind::Path, 1, 1);
  auto c = make_cluster(2, 1);
  auto d = decompose(one, c, 1);
  CHECK(d.components.size() == 1);
  CHECK(d.iterations.empty());
  Tree small = gen_tree(TreeKind::FullBinary, 50, 1);
  auto c2 = make_cluster(4, 50);
  auto d2 = decompose(small, c2, 1);
  CHECK(d2.iterations.empty());
  CHECK(d2.components.size() == 50);
}

TEST_CASE("exact invariants every iteration and statistical bounds") {
  for (auto kind : all_tree_kinds()) {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      Tree t0 = gen_tree(kind, 4096, seed);
      auto cb = make_cluster(16, 4096);
      Tree tb = build_binary_extension(t0, cb, seed).tb;
      const std::uint32_t m = 16;
      auto c = make_cluster(m, tb.size());
      std::string why;
      bool ok = true;
      auto d = decompose(tb, c, seed, [&](std::uint64_t, const std::vector<Component>& comps) {
        if (ok && !check_decomposition(tb, comps, &why)) ok = false;
      });
      CHECK_MESSAGE(ok, tree_kind_name(kind) << ": " << why);
      CHECK(check_decomposition(tb, d.components, &why));
      CHECK(d.components.size() <= 14 * m);
      const double n = static_cast<double>(tb.size());
      const double lg = std::log2(n);
      CHECK(d.iterations.size() <= 6 * lg);
      for (const auto& it : d.iterations) {
        CHECK(it.max_size <= 4 * (n / m) * lg);
        CHECK(it.max_path <= 2 * lg);
        CHECK(6 * it.selected <= 5 * (it.components - it.completed));
      }
      auto ct = contract(d);
      CHECK(ct.size() == d.components.size());
      for (auto& [id, ch] : ct.children) CHECK(ch.size() <= 2);
    }
  }
}

TEST_CASE("deterministic per seed") {
  Tree tb = binary_extension_sequential(gen_tree(TreeKind::RandomRecursive, 3000, 2)).tb;
  auto c1 = make_cluster(8, tb.size()), c2 = make_cluster(8, tb.size());
  auto d1 = decompose(tb, c1, 4), d2 = decompose(tb, c2, 4);
  CHECK(dump_decomposition(d1) == dump_decomposition(d2));
  CHECK(c1.metrics() == c2.metrics());
}
