#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "mpcdp/binary_ext.hpp"
#include "mpcdp/khash.hpp"
#include "mpcdp/sim.hpp"
#include "mpcdp/tree.hpp"

namespace mpcdp {

struct OuterEdge {
  std::uint64_t inner = 0;
  std::uint64_t outer = 0;
  bool up = false;  // true when `outer` is the parent of `inner`
  bool operator==(const OuterEdge&) const = default;
};

struct Component {
  std::uint64_t id = 0;  // index of the root vertex
  std::uint64_t parent = kRoot;
  std::vector<std::uint64_t> children;
  std::vector<std::uint64_t> vertices;  // sorted
  std::vector<OuterEdge> outer;
  bool completed = false;
  std::size_t size() const { return vertices.size(); }
};

struct ComponentTree {
  std::uint64_t root = kRoot;
  std::map<std::uint64_t, std::uint64_t> parent;                 // id -> parent id (kRoot at root)
  std::map<std::uint64_t, std::vector<std::uint64_t>> children;  // sorted
  std::size_t size() const { return parent.size(); }
};

struct IterationStats {
  std::uint64_t components = 0;  // |C_i|
  std::uint64_t completed = 0;   // |F_i|
  std::uint64_t selected = 0;    // |S_i|
  std::uint64_t max_path = 0;    // longest unselected-to-target distance
  std::uint64_t max_size = 0;    // after the merge
  std::uint64_t doubling_rounds = 0;
};

struct Decomposition {
  std::vector<Component> components;  // sorted by id
  std::vector<IterationStats> iterations;
  std::uint64_t rounds = 0;
  std::uint64_t threshold = 0;  // ceil(n/m)
  const Component& find(std::uint64_t id) const;
};

// Selection rule applied to a component at the start of an iteration.
struct SelectInput {
  bool is_root = false;
  std::size_t child_count = 0;
  bool parent_completed = false;
  bool coin = false;
};
bool select_rule(const SelectInput& in);

// Coin for component `id` in `iteration`; every machine derives the same
// k-wise independent hash from the run seed.
HashFn coin_hash(std::uint64_t seed, std::uint64_t iteration, std::uint64_t domain,
                 std::uint32_t machines);

// Reference merge used by tests: each unselected incomplete component joins
// its closest selected ancestor.
std::map<std::uint64_t, std::uint64_t> merge_targets(const ComponentTree& ct,
                                                     const std::map<std::uint64_t, bool>& selected,
                                                     const std::map<std::uint64_t, bool>& completed);

ComponentTree contract(const Decomposition& d);

// Checks partition, connectivity, root uniqueness and binarity against `tb`.
bool check_decomposition(const Tree& tb, const std::vector<Component>& comps, std::string* why);

std::string dump_decomposition(const Decomposition& d);

// Per-machine component state inside the simulation.
struct LiveComponent {
  std::uint64_t id = 0;
  std::uint64_t parent = kRoot;
  std::vector<std::uint64_t> children;
  std::vector<ExtVertex> vertices;
  bool completed = false;

  // Iteration scratch.
  bool parent_completed = false;
  std::map<std::uint64_t, std::pair<bool, std::uint64_t>> child_info;  // id -> (completed, #children)
  bool selected = false;
  bool found = false;
  std::uint64_t anc = kRoot;
  std::uint64_t dist = 0;
  std::uint64_t target = kRoot;
  std::vector<std::uint64_t> slots;
  bool merge_sent = false;
};

using Snapshot = std::function<void(std::uint64_t iteration, const std::vector<Component>&)>;

class Decomposer {
 public:
  // `initial(ctx)` yields the T^b vertices machine ctx.id() holds; it runs
  // inside the first round. Vertices must sit at h(index).
  using Initial = std::function<std::vector<ExtVertex>(Cluster::Context&)>;

  Decomposer(Cluster& cluster, const HashFn& h, std::uint64_t n, std::uint64_t seed);

  void set_snapshot(Snapshot s) { snapshot_ = std::move(s); }
  Decomposition run(const Initial& initial);

  const HashFn& hash() const { return h_; }
  // Components living on each machine after run().
  std::vector<std::map<std::uint64_t, LiveComponent>>& live() { return live_; }
  std::uint64_t threshold() const { return threshold_; }

 private:
  std::vector<Component> gather() const;
  Cluster& cluster_;
  HashFn h_;
  std::uint64_t n_;
  std::uint64_t seed_;
  std::uint32_t m_;
  std::uint64_t threshold_;
  Snapshot snapshot_;
  std::vector<std::map<std::uint64_t, LiveComponent>> live_;
};

// Places `tb` at h(index) (the input distribution) and decomposes it.
Decomposition decompose(const Tree& tb, Cluster& cluster, std::uint64_t seed,
                        Snapshot snapshot = {});

// Standalone binary T^b vertex records (children from the tree).
std::vector<ExtVertex> ext_vertices(const Tree& tb);

}  // namespace mpcdp
