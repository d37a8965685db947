#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "mpcdp/common.hpp"
#include "mpcdp/khash.hpp"

namespace mpcdp {

struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  Rational() = default;
  Rational(std::int64_t n, std::int64_t d = 1);
  static Rational parse(const std::string& text);
  std::string str() const;
  bool is_integer() const { return den == 1; }
  bool operator==(const Rational&) const = default;
};

inline constexpr std::uint64_t kRoot = 0;

struct TreeVertex {
  std::uint64_t index = 0;
  std::uint64_t parent = kRoot;
  std::optional<Rational> weight;  // edge to parent
  bool aux = false;
  Payload payload;

  bool operator==(const TreeVertex&) const = default;
};

class Tree {
 public:
  static constexpr std::uint32_t npos = 0xffffffffu;

  Tree() = default;
  // Validates: distinct indexes, parents exist, one root, acyclic.
  explicit Tree(std::vector<TreeVertex> vertices);

  std::size_t size() const { return vertices_.size(); }
  const std::vector<TreeVertex>& vertices() const { return vertices_; }
  std::uint64_t root() const { return root_; }
  std::uint32_t pos(std::uint64_t index) const;
  bool contains(std::uint64_t index) const { return pos(index) != npos; }
  const TreeVertex& at(std::uint64_t index) const;
  // Children sorted by index.
  const std::vector<std::uint64_t>& children(std::uint64_t index) const;
  std::uint64_t max_index() const { return max_index_; }
  std::size_t original_count() const;
  // Pre-order from the root (parents before children).
  const std::vector<std::uint64_t>& preorder() const { return preorder_; }
  bool has_weights() const;

  bool operator==(const Tree& other) const { return vertices_ == other.vertices_; }

 private:
  std::vector<TreeVertex> vertices_;
  std::unordered_map<std::uint64_t, std::uint32_t> pos_;
  std::vector<std::vector<std::uint64_t>> children_;
  std::vector<std::uint64_t> preorder_;
  std::uint64_t root_ = 0;
  std::uint64_t max_index_ = 0;
};

Tree parse_tree(const std::string& text);
std::string emit_tree(const Tree& t);

enum class TreeKind { Path, FullBinary, Star, Caterpillar, RandomRecursive, Broom };
const std::vector<TreeKind>& all_tree_kinds();
std::string tree_kind_name(TreeKind k);
TreeKind parse_tree_kind(const std::string& name);

struct WeightDist {
  enum class Kind { None, Unit, Uniform } kind = Kind::None;
  std::int64_t lo = 1;
  std::int64_t hi = 1;
  // "none", "unit" or "uniform:lo:hi".
  static WeightDist parse(const std::string& text);
};

Tree gen_tree(TreeKind kind, std::size_t n, std::uint64_t seed, WeightDist weights = {});

// Integer edge weights for the solvers: missing weights become 1 and all
// rationals are multiplied by the lcm of their denominators.
struct IntegerWeights {
  std::int64_t scale = 1;
  std::unordered_map<std::uint64_t, std::int64_t> weight;  // keyed by vertex index
  std::int64_t of(std::uint64_t index) const;
};
IntegerWeights integer_weights(const Tree& t);

// Relabels vertices to 1..n in pre-order; returns the tree and old->new map.
Tree compact_indexes(const Tree& t, std::unordered_map<std::uint64_t, std::uint64_t>* mapping = nullptr);

struct ShardedTree {
  HashFn hash;
  std::vector<std::vector<std::uint64_t>> local;  // vertex indexes per machine
  std::uint64_t max_load = 0;                      // words (1 + payload) per machine
  std::uint32_t machine_of(std::uint64_t index) const { return hash.machine(index); }
};

ShardedTree shard(const Tree& t, const HashFn& h);

}  // namespace mpcdp
