#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mpcdp/binary_ext.hpp"
#include "mpcdp/common.hpp"
#include "mpcdp/khash.hpp"
#include "mpcdp/sim.hpp"

namespace mpcdp {

// Integer weight of the edge to the parent: auxiliary vertices carry 0,
// unweighted originals carry one unit (`scale`).
std::int64_t int_weight(const ExtVertex& v, std::int64_t scale);

// ---------------------------------------------------------------------------
// Small-state (polylog) problems: every vertex holds a K-vector and the node
// rule is a (pick, +) bilinear form over the children's vectors.

struct NodeView {
  bool aux = false;
  int nchild = 0;
  bool child_aux[2] = {false, false};
  Value w[2] = {0, 0};  // weights of the edges to the children
};

class PolylogPlugin {
 public:
  virtual ~PolylogPlugin() = default;
  virtual std::string name() const = 0;
  virtual int states() const = 0;
  virtual Sense sense() const = 0;
  // Contribution of v in state s given child states s1, s2 (ignored beyond
  // nchild). identity_of(sense()) marks an impossible combination.
  virtual Value terms(const NodeView& v, int s, int s1, int s2) const = 0;
  virtual Value finalize(const std::vector<Value>& root) const = 0;
};

struct UnknownLeaf {
  std::uint64_t id = 0;
  bool aux = false;
  Value weight = 0;
};

// Table over (root state, unknown-leaf states), row-major with the root
// state outermost.
struct PolyPartial {
  std::uint64_t id = 0;
  std::vector<std::uint64_t> unknowns;
  int k = 0;
  std::vector<Value> table;

  std::size_t words() const { return 3 + unknowns.size() + table.size(); }
  Payload encode() const;
  static PolyPartial decode(const Payload& p, std::size_t& i);
  bool operator==(const PolyPartial&) const = default;
};

inline constexpr std::size_t kMaxUnknownLeaves = 2;

// Sweeps one component bottom-up. `vertices` must be connected with root
// `root`; children outside the component are the unknown leaves.
PolyPartial compress_component(const PolylogPlugin& plugin, const std::vector<ExtVertex>& vertices,
                               std::uint64_t root, const std::vector<UnknownLeaf>& leaves,
                               std::int64_t scale);

// Substitutes `child` for its unknown leaf in `parent`.
PolyPartial merge_partial(const PolylogPlugin& plugin, const PolyPartial& parent,
                          const PolyPartial& child);

// Root vector once every unknown leaf has a concrete vector.
std::vector<Value> evaluate_partial(const PolylogPlugin& plugin, const PolyPartial& pd,
                                    const std::vector<std::vector<Value>>& leaf_values);

// Whole-tree sweep on one machine; `tb` must be binary.
std::vector<Value> sequential_root_vector(const PolylogPlugin& plugin, const Tree& tb,
                                          std::int64_t scale);

// ---------------------------------------------------------------------------
// Splittable (linear) problems: a partition keeps one vector per border
// configuration, indexed by a count of original vertices.

struct BorderSlot {
  std::uint64_t vertex = 0;
  bool aux = false;
  std::uint32_t outside = 0;  // neighbours outside the partition
  bool operator==(const BorderSlot&) const = default;
};

struct JoinEdge {
  std::uint64_t x = 0;  // endpoint in the first partition
  std::uint64_t y = 0;  // endpoint in the second partition
  bool x_is_parent = true;
  bool child_aux = false;
  Value child_weight = 0;
};

struct LinearMeta {
  std::uint64_t id = 0;
  std::vector<BorderSlot> borders;  // sorted by vertex
  std::uint64_t configs = 1;
  std::uint64_t len = 1;  // original-vertex count + 1
  std::uint64_t flat() const { return configs * len; }
  bool operator==(const LinearMeta&) const = default;
};

struct LinearData {
  LinearMeta meta;
  std::vector<Value> values;  // configs x len
  bool operator==(const LinearData&) const = default;
};

class LinearPlugin {
 public:
  virtual ~LinearPlugin() = default;
  virtual std::string name() const = 0;
  virtual Sense sense() const = 0;
  virtual std::uint32_t vertex_states() const = 0;
  virtual std::uint32_t extra_states() const = 0;

  struct Entry {
    std::uint32_t state = 0;
    std::uint32_t extra = 0;
    std::uint64_t count = 0;
    Value value = 0;
  };
  virtual std::vector<Entry> singleton(bool aux) const = 0;

  struct Joined {
    Value cost = 0;
    std::uint32_t extra = 0;
  };
  // Crossing edge between states qx (first side) and qy (second side).
  virtual std::optional<Joined> join(std::uint32_t qx, std::uint32_t qy, std::uint32_t ea,
                                     std::uint32_t eb, const JoinEdge& e) const = 0;
  // Whether entry (extra, count) of a border-free partition is an answer.
  virtual bool is_answer(std::uint32_t extra, std::uint64_t count, std::uint64_t target) const = 0;
};

std::uint64_t config_count(const LinearPlugin& p, std::size_t borders);
LinearData singleton_data(const LinearPlugin& p, std::uint64_t vertex, bool aux,
                          std::uint32_t degree);
LinearMeta merge_meta(const LinearPlugin& p, const LinearMeta& a, const LinearMeta& b,
                      const JoinEdge& e, std::uint64_t out_id);

// Emits reduced (output flat index, value) candidates for one chunk pair.
// Chunks are [a0, a1) of a's flat values and [b0, b1) of b's.
std::vector<std::pair<std::uint64_t, Value>> sub_unify(
    const LinearPlugin& p, const LinearMeta& a, const LinearMeta& b, const LinearMeta& out,
    const JoinEdge& e, const std::vector<std::pair<std::uint64_t, Value>>& chunk_a,
    const std::vector<std::pair<std::uint64_t, Value>>& chunk_b);

// Reduces candidates into `values` (pick by sense).
void unify(const LinearPlugin& p, std::vector<Value>& values,
           const std::vector<std::pair<std::uint64_t, Value>>& candidates);

// Single-machine merge.
LinearData merge_linear(const LinearPlugin& p, const LinearData& a, const LinearData& b,
                        const JoinEdge& e, std::uint64_t out_id);

// Folds a connected vertex set bottom-up, starting from singletons.
LinearData compress_linear(const LinearPlugin& p, const std::vector<ExtVertex>& vertices,
                           std::uint64_t root, std::int64_t scale);

Value linear_answer(const LinearPlugin& p, const LinearData& d, std::uint64_t target);

// Consecutive chunk boundaries, q+1 entries from 0 to flat.
std::vector<std::uint64_t> even_chunks(std::uint64_t flat, std::uint32_t q);

// One merge scheduled on the cluster.
struct MergeTask {
  LinearMeta a, b, out;
  JoinEdge edge;
  std::vector<std::uint64_t> cuts_a, cuts_b;  // q+1 boundaries each
};

// Element-level storage of partition vectors spread over the machines.
// Elements equal to the sense identity are implicit.
class MergeEngine {
 public:
  // Element (partition, idx) lives at h(partition * stride + idx).
  MergeEngine(const LinearPlugin& plugin, Cluster& cluster, std::uint64_t seed,
              std::uint64_t max_partition, std::uint64_t stride);

  std::uint32_t q() const { return q_; }
  std::uint32_t holder(std::uint64_t partition, std::uint64_t idx) const;
  std::uint64_t key_domain() const { return domain_; }

  // Elements resident on each machine, keyed by (partition, flat index).
  std::vector<std::map<std::pair<std::uint64_t, std::uint64_t>, Value>>& held() { return held_; }

  // Round body: absorb candidates from the inbox, then ship elements of
  // every task operand to its chunk-pair machines.
  void absorb_and_scatter(Cluster::Context& ctx, const std::vector<MergeTask>& tasks,
                          std::uint64_t extra_resident = 0);
  // Round body: evaluate chunk pairs and ship candidates to the holders.
  void combine(Cluster::Context& ctx, const std::vector<MergeTask>& tasks,
               std::uint64_t extra_resident = 0);
  // Round body: absorb candidates only.
  void absorb(Cluster::Context& ctx, std::uint64_t extra_resident = 0);

  std::uint64_t resident(MachineId id) const;

  // Wire record that lands element (partition, idx) at its holder; other
  // round bodies may send these ahead of the first absorb. Messages whose
  // first word is not an engine tag are ignored by the engine.
  static void put_element(Payload& out, std::uint64_t partition, std::uint64_t idx, Value v);

 private:
  const LinearPlugin& plugin_;
  Cluster& cluster_;
  std::uint32_t m_;
  std::uint32_t q_;
  std::uint64_t stride_;
  std::uint64_t domain_;
  HashFn h_;
  std::vector<std::map<std::pair<std::uint64_t, std::uint64_t>, Value>> held_;
};

// Runs one merge end to end on the cluster (scatter, combine, absorb) with
// the given chunk boundaries and gathers the output.
LinearData distributed_merge(const LinearPlugin& p, const LinearData& a, const LinearData& b,
                             const JoinEdge& e, std::uint64_t out_id, Cluster& cluster,
                             std::uint64_t seed, const std::vector<std::uint64_t>& cuts_a = {},
                             const std::vector<std::uint64_t>& cuts_b = {});

}  // namespace mpcdp
