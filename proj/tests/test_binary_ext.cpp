#include "doctest.h"
#include "mpcdp/binary_ext.hpp"

using namespace mpcdp;

namespace {

Cluster make_cluster(std::uint32_t m, std::uint64_t n) {
  ClusterConfig cfg;
  cfg.machines = m;
  cfg.words_per_machine = default_words_per_machine(n, m, SpaceClass::Polylog);
  return Cluster(cfg, n);
}

std::size_t max_children(const Tree& t) {
  std::size_t best = 0;
  for (const auto& v : t.vertices()) best = std::max(best, t.children(v.index).size());
  return best;
}

}  // namespace

TEST_CASE("child counts on small shapes") {
  for (auto [kind, expect_root] : {std::pair{TreeKind::Path, 1u}, {TreeKind::Star, 4u}}) {
    Tree t = gen_tree(kind, 5, 1);
    auto c = make_cluster(4, 5);
    auto sh = shard(t, sample_hash(3, 2, t.max_index() + 1, 4));
    auto d = compute_degrees(t, sh, c);
    CHECK(d.children.at(t.root()) == expect_root);
    std::uint64_t total = 0;
    for (auto& [k, v] : d.children) total += v;
    CHECK(total == 4);
  }
  Tree fb = gen_tree(TreeKind::FullBinary, 7, 1);
  auto c = make_cluster(4, 7);
  auto d = compute_degrees(fb, shard(fb, sample_hash(3, 2, 8, 4)), c);
  for (std::uint64_t v = 1; v <= 7; ++v) CHECK(d.children.at(v) == (v <= 3 ? 2u : 0u));
}

TEST_CASE("bounding a star") {
  Tree t = gen_tree(TreeKind::Star, 9, 1);
  auto c = make_cluster(4, 9);
  auto r = bound_degrees(t, 2, c, 7);
  CHECK(r.tree.children(t.root()).size() == 4);
  CHECK(r.map.auxiliary.size() == 4);
  for (auto a : r.map.auxiliary) CHECK(r.tree.children(a).size() <= 8);
  std::string why;
  CHECK_MESSAGE(verify_extension(t, r.tree, r.map, &why), why);
}

TEST_CASE("bounding leaves low-degree trees alone") {
  Tree t = gen_tree(TreeKind::Path, 20, 1);
  auto c = make_cluster(4, 20);
  auto r = bound_degrees(t, 1, c, 7);
  CHECK(r.tree == t);
  Tree s = gen_tree(TreeKind::Star, 20, 1);
  auto c2 = make_cluster(4, 20);
  auto r2 = bound_degrees(s, 19, c2, 7);
  CHECK(r2.tree == s);
}

TEST_CASE("gadget sizes") {
  std::vector<TreeVertex> vs{{1, 0, {}, {}}, {2, 1, {}, {}}, {3, 1, {}, {}}, {4, 1, {}, {}}};
  Tree t(vs);
  auto c = make_cluster(2, 4);
  auto r = binarize(t, c, 1);
  CHECK(r.tree.size() == 5);
  CHECK(r.map.auxiliary.size() == 1);
  Tree star = gen_tree(TreeKind::Star, 5, 1);
  auto c2 = make_cluster(2, 5);
  auto r2 = binarize(star, c2, 1);
  CHECK(r2.tree.children(star.root()).size() == 2);
  CHECK(r2.map.auxiliary.size() == 2);
  std::string why;
  CHECK_MESSAGE(verify_extension(star, r2.tree, r2.map, &why), why);
  Tree path = gen_tree(TreeKind::Path, 6, 1);
  auto c3 = make_cluster(2, 6);
  CHECK(binarize(path, c3, 1).tree == path);
}

TEST_CASE("full pipeline on every generator") {
  for (auto kind : all_tree_kinds()) {
    for (std::size_t n : {1u, 2u, 50u, 2000u}) {
      Tree t = gen_tree(kind, n, 11);
      for (std::uint32_t m : {2u, 8u}) {
        auto c = make_cluster(m, n);
        auto ext = build_binary_extension(t, c, 5);
        CHECK(max_children(ext.tb) <= 2);
        CHECK(ext.tb.size() <= 4 * n);
        CHECK(ext.rounds <= 7);
        std::string why;
        CHECK_MESSAGE(verify_extension(t, ext.tb, ext.map, &why), why);
      }
    }
  }
}

TEST_CASE("pipeline is deterministic and sequential form agrees on shape") {
  Tree t = gen_tree(TreeKind::RandomRecursive, 300, 4);
  auto c1 = make_cluster(4, 300), c2 = make_cluster(4, 300);
  CHECK(build_binary_extension(t, c1, 9).tb == build_binary_extension(t, c2, 9).tb);
  CHECK(c1.metrics() == c2.metrics());
  auto seq = binary_extension_sequential(t);
  CHECK(max_children(seq.tb) <= 2);
  std::string why;
  CHECK_MESSAGE(verify_extension(t, seq.tb, seq.map, &why), why);
}
