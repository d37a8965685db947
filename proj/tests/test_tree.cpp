#include "doctest.h"
#include "mpcdp/tree.hpp"

using namespace mpcdp;

namespace {

ErrorKind kind_of(const std::string& text) {
  try {
    parse_tree(text);
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected a parse failure");
  return ErrorKind::InvalidArgument;
}

std::size_t depth(const Tree& t) {
  std::size_t best = 0;
  for (const auto& v : t.vertices()) {
    std::size_t d = 0;
    for (auto u = v.index; t.at(u).parent != kRoot; u = t.at(u).parent) ++d;
    best = std::max(best, d);
  }
  return best;
}

}  // namespace

TEST_CASE("parse examples") {
  Tree one = parse_tree("1\n1 0");
  CHECK(one.size() == 1);
  CHECK(one.root() == 1);
  Tree two = parse_tree("2\n1 0\n2 1 3.5");
  REQUIRE(two.at(2).weight.has_value());
  CHECK(*two.at(2).weight == Rational(7, 2));
  CHECK(kind_of("2\n1 2\n2 1") == ErrorKind::CycleDetected);
  CHECK(kind_of("2\n1 0\n1 0") == ErrorKind::DuplicateIndex);
  CHECK(kind_of("2\n1 0\n2 5") == ErrorKind::MissingParent);
  CHECK(kind_of("2\n1 0\n2 0") == ErrorKind::MultipleRoots);
  CHECK(kind_of("3\n1 0\n2 1") == ErrorKind::ParseError);
  CHECK(kind_of("1\n1 0 x") == ErrorKind::ParseError);
  // A cycle hanging off a valid root.
  CHECK(kind_of("3\n1 0\n2 3\n3 2") == ErrorKind::CycleDetected);
}

TEST_CASE("rationals") {
  CHECK(Rational::parse("3.5") == Rational(7, 2));
  CHECK(Rational::parse("6/4") == Rational(3, 2));
  CHECK(Rational::parse("-0.25") == Rational(-1, 4));
  CHECK(Rational::parse("12").str() == "12");
  CHECK(Rational(3, 2).str() == "3/2");
  CHECK_THROWS_AS(Rational::parse(""), Error);
}

TEST_CASE("generator shapes") {
  Tree p = gen_tree(TreeKind::Path, 3, 1);
  CHECK(p.at(1).parent == 0);
  CHECK(p.at(2).parent == 1);
  CHECK(p.at(3).parent == 2);
  CHECK(gen_tree(TreeKind::Star, 4, 1).children(1).size() == 3);
  Tree fb = gen_tree(TreeKind::FullBinary, 7, 1);
  CHECK(depth(fb) == 2);
  for (std::uint64_t v = 1; v <= 3; ++v) CHECK(fb.children(v).size() == 2);
  CHECK(depth(gen_tree(TreeKind::Path, 50, 1)) == 49);
  CHECK(gen_tree(TreeKind::Star, 50, 1).children(1).size() == 49);
  Tree rr = gen_tree(TreeKind::RandomRecursive, 200, 3);
  for (const auto& v : rr.vertices())
    if (v.parent != kRoot) CHECK(v.parent < v.index);
  CHECK_THROWS_AS(gen_tree(TreeKind::Path, 0, 1), Error);
}

TEST_CASE("generators are deterministic and round-trip") {
  for (auto kind : all_tree_kinds()) {
    CHECK(parse_tree_kind(tree_kind_name(kind)) == kind);
    for (std::size_t n : {1u, 2u, 17u, 1000u, 10000u}) {
      Tree a = gen_tree(kind, n, 8, WeightDist::parse("uniform:1:50"));
      Tree b = gen_tree(kind, n, 8, WeightDist::parse("uniform:1:50"));
      CHECK(a == b);
      CHECK(a.size() == n);
      CHECK(parse_tree(emit_tree(a)) == a);
    }
  }
  CHECK_THROWS_AS(parse_tree_kind("blob"), Error);
}

TEST_CASE("weight distributions") {
  CHECK(WeightDist::parse("none").kind == WeightDist::Kind::None);
  CHECK(WeightDist::parse("unit").kind == WeightDist::Kind::Unit);
  auto u = WeightDist::parse("uniform:2:5");
  CHECK(u.lo == 2);
  CHECK(u.hi == 5);
  CHECK_THROWS_AS(WeightDist::parse("uniform:5:2"), Error);
  CHECK_THROWS_AS(WeightDist::parse("gauss"), Error);
  Tree t = gen_tree(TreeKind::RandomRecursive, 300, 2, u);
  for (const auto& v : t.vertices()) {
    if (v.parent == kRoot) continue;
    CHECK(v.weight->num >= 2);
    CHECK(v.weight->num <= 5);
  }
}

TEST_CASE("integer weights") {
  Tree t = parse_tree("3\n1 0\n2 1 1/2\n3 1 2/3");
  auto w = integer_weights(t);
  CHECK(w.scale == 6);
  CHECK(w.of(2) == 3);
  CHECK(w.of(3) == 4);
  auto plain = integer_weights(gen_tree(TreeKind::Path, 4, 1));
  CHECK(plain.scale == 1);
  CHECK(plain.of(4) == 1);
}

TEST_CASE("compact indexes") {
  Tree t = parse_tree("3\n10 0\n20 10\n30 20");
  std::unordered_map<std::uint64_t, std::uint64_t> map;
  Tree c = compact_indexes(t, &map);
  CHECK(map.at(10) == 1);
  CHECK(map.at(30) == 3);
  CHECK(c.at(3).parent == 2);
}

TEST_CASE("sharding") {
  Tree t = gen_tree(TreeKind::RandomRecursive, 1000, 4);
  auto h = sample_hash(7, default_hash_order(16), t.max_index() + 1, 16);
  auto s = shard(t, h);
  std::size_t total = 0;
  for (std::uint32_t m = 0; m < 16; ++m) {
    total += s.local[m].size();
    for (auto v : s.local[m]) CHECK(s.machine_of(v) == m);
  }
  CHECK(total == 1000);
  CHECK(s.max_load >= 1000 / 16);
  CHECK(s.max_load <= 4 * (1000 / 16) * 10 * 10);
}
