#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mpcdp/decomposition.hpp"
#include "mpcdp/dp_framework.hpp"
#include "mpcdp/sim.hpp"
#include "mpcdp/tree.hpp"

namespace mpcdp {

// Minimum bisection: two colours per border, one vector indexed by the
// number of original vertices coloured 1.
class BisectionPlugin : public LinearPlugin {
 public:
  std::string name() const override { return "bisection"; }
  Sense sense() const override { return Sense::Min; }
  std::uint32_t vertex_states() const override { return 2; }
  std::uint32_t extra_states() const override { return 1; }
  std::vector<Entry> singleton(bool aux) const override;
  std::optional<Joined> join(std::uint32_t qx, std::uint32_t qy, std::uint32_t ea, std::uint32_t eb,
                             const JoinEdge& e) const override;
  bool is_answer(std::uint32_t extra, std::uint64_t count, std::uint64_t target) const override;
};

// Maximum-weight connected subtree with exactly k original vertices. Border
// state 1 = in the subtree; extra = whether the partition's part is
// nonempty (it is always connected).
class KSpanningPlugin : public LinearPlugin {
 public:
  std::string name() const override { return "kst"; }
  Sense sense() const override { return Sense::Max; }
  std::uint32_t vertex_states() const override { return 2; }
  std::uint32_t extra_states() const override { return 2; }
  std::vector<Entry> singleton(bool aux) const override;
  std::optional<Joined> join(std::uint32_t qx, std::uint32_t qy, std::uint32_t ea, std::uint32_t eb,
                             const JoinEdge& e) const override;
  bool is_answer(std::uint32_t extra, std::uint64_t count, std::uint64_t target) const override;
};

// ---------------------------------------------------------------------------
// Partitioning of the component tree.

// Rooted tree over node ids 0..n-1 with the T^b vertices on each edge.
struct CutTree {
  std::vector<std::int64_t> parent;  // -1 at the root
  std::vector<std::vector<std::uint32_t>> children;
  std::uint32_t root = 0;
  // For node c != root: the T^b edge (upper vertex, lower vertex) joining
  // it to its parent.
  std::vector<std::pair<std::uint64_t, std::uint64_t>> link;
  std::size_t size() const { return parent.size(); }

  static CutTree from_parents(const std::vector<std::int64_t>& parent,
                              std::vector<std::pair<std::uint64_t, std::uint64_t>> link = {});
};

struct CutEdge {
  std::uint32_t upper = 0;  // parent node
  std::uint32_t lower = 0;  // child node
  bool operator==(const CutEdge&) const = default;
};

// Greedy descent into the heaviest child while its subtree exceeds 2n/3 of
// the node set `nodes` (connected, first entry need not be the top).
CutEdge first_cut(const CutTree& t, const std::vector<std::uint32_t>& nodes);
// Descends into the child with most borders while that count exceeds 2;
// falls back to scanning every edge. Borders are T^b vertices.
CutEdge second_cut(const CutTree& t, const std::vector<std::uint32_t>& nodes);

// T^b vertices of `nodes` adjacent to a vertex outside it.
std::vector<std::uint64_t> partition_borders(const CutTree& t, const std::vector<std::uint32_t>& nodes);

struct ScheduledEdge {
  CutEdge edge;
  std::uint32_t depth = 0;  // recursion depth, 1 at the top
  bool second = false;      // produced by second_cut
};

struct MergeSchedule {
  std::uint32_t depth = 0;                        // S
  std::vector<std::vector<CutEdge>> steps;        // E_1..E_2S (possibly empty)
  std::vector<ScheduledEdge> edges;               // in discovery order
  std::size_t max_borders = 0;                    // over every scheduled partition
  std::size_t four_border_parts = 0;              // partitions that kept 4 borders
  std::size_t second_cut_fallbacks = 0;
  // (lower side size, partition size) of every first cut.
  std::vector<std::pair<std::size_t, std::size_t>> first_splits;
};

MergeSchedule build_merge_schedule(const CutTree& t);

// Replays the schedule with union-find; returns false (with a reason) when a
// step merges non-adjacent or already-merged partitions or leaves more than
// one partition at the end.
bool replay_schedule(const CutTree& t, const MergeSchedule& s, std::string* why = nullptr);

// ---------------------------------------------------------------------------
// Distributed solver.

struct LinearReport {
  Value answer = 0;
  std::int64_t scale = 1;
  std::uint64_t n = 0;
  std::uint64_t tb_size = 0;
  std::uint64_t rounds = 0;
  std::uint64_t extension_rounds = 0;
  std::uint64_t decomposition_rounds = 0;
  std::uint64_t merge_rounds = 0;
  std::uint64_t components = 0;
  std::uint32_t schedule_depth = 0;
  std::size_t max_borders = 0;
  std::uint64_t max_resident = 0;
  MergeSchedule schedule;
};

// `target` selects the answer entry (count of original vertices).
LinearReport solve_linear(const LinearPlugin& plugin, const Tree& t, Cluster& cluster,
                          std::uint64_t seed, std::uint64_t target);
LinearReport solve_bisection(const Tree& t, Cluster& cluster, std::uint64_t seed);
LinearReport solve_kspanning(const Tree& t, std::uint64_t k, Cluster& cluster, std::uint64_t seed);

// Whole binary extension folded on one machine.
Value solve_linear_sequential(const LinearPlugin& plugin, const Tree& t, std::uint64_t target);

// ---------------------------------------------------------------------------
// k-median / k-center on the binary extension, one machine.

// A piece of F. Median: the line a*x + b. Center: max(x + a, b).
struct Piece {
  Value a = 0;
  Value b = 0;
  bool operator==(const Piece&) const = default;
};

struct NodeFunctions {
  bool center = false;
  std::vector<Value> dist;                 // distances to all descendants, sorted (first is 0)
  std::vector<std::vector<Value>> G;       // per p, aligned with dist; nonincreasing
  std::vector<std::vector<Piece>> F;       // per p, envelope pieces

  // x < 0 gives infinity; kPosInf means x = infinity.
  Value eval_G(std::size_t p, Value x) const;
  Value eval_F(std::size_t p, Value x) const;
};

using NodeVisitor = std::function<void(std::uint64_t vertex, const NodeFunctions&)>;

struct KClusterResult {
  Value value = 0;         // G^k_r(inf)
  Value f_at_infinity = 0; // F^k_r(inf)
  std::int64_t scale = 1;
};

// `visit` sees every node's functions right after they are built.
KClusterResult kcluster_dp(const Tree& t, std::uint64_t k, bool center, const NodeVisitor& visit = {});
Value solve_kmedian(const Tree& t, std::uint64_t k);
Value solve_kcenter(const Tree& t, std::uint64_t k);

}  // namespace mpcdp
