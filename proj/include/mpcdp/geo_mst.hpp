#pragma once

#include <cstdint>
#include <optional>
#include <unordered_map>
#include <string>
#include <vector>

#include "mpcdp/common.hpp"
#include "mpcdp/sim.hpp"

namespace mpcdp {

struct PointSet {
  std::size_t dim = 0;
  std::vector<std::vector<std::int64_t>> points;
  std::size_t size() const { return points.size(); }
};

// Distances are compared through an exact integer key; the Euclidean key
// is the squared length, so the reported length is sqrt(key).
enum class Metric { Euclidean, Manhattan, Chebyshev };
Metric parse_metric(const std::string& name);
std::string metric_name(Metric m);
Value distance_key(const PointSet& ps, std::size_t a, std::size_t b, Metric metric);
double key_length(Value key, Metric metric);

// "n d" header, then n rows of d integers.
PointSet parse_points(const std::string& text);
std::string emit_points(const PointSet& ps);
// Uniform integer coordinates in [0, range).
PointSet gen_points(std::size_t n, std::size_t dim, std::uint64_t seed, std::int64_t range = 1 << 20);

struct Edge {
  std::uint64_t u = 0;
  std::uint64_t v = 0;
  Value weight = 0;
  std::uint64_t id = 0;
  bool operator==(const Edge&) const = default;
};
// Total order making all weights distinct.
inline bool edge_less(const Edge& a, const Edge& b) {
  return a.weight != b.weight ? a.weight < b.weight : a.id < b.id;
}

struct Graph {
  std::uint64_t n = 0;
  std::vector<Edge> edges;  // id = position in the file
};
// "n m" header, then m rows "u v weight" with 0-based vertices.
Graph parse_graph(const std::string& text);
std::string emit_graph(const Graph& g);
Graph gen_sparse_graph(std::uint64_t n, std::uint64_t edges, std::uint64_t seed, Value max_weight = 1000);

// Random group of point/vertex `index` among `groups`.
std::uint32_t group_of(std::uint64_t seed, std::uint64_t index, std::uint32_t groups);
// Groups used by the pair layout on m machines: floor(sqrt(m)).
std::uint32_t pair_groups(std::uint32_t machines);

struct ClosestPair {
  std::uint64_t u = 0;
  std::uint64_t v = 0;
  Value key = 0;
  double distance = 0;
  std::uint64_t rounds = 0;
};
// Three rounds: scatter to group-pair machines, local minima to machine 0,
// global minimum.
ClosestPair closest_pair(const PointSet& ps, Metric metric, Cluster& cluster, std::uint64_t seed);

// Spanning forest under streaming insertion; a cycle-closing edge evicts
// the heaviest edge on the cycle.
class LocalMstFilter {
 public:
  explicit LocalMstFilter(std::uint64_t capacity);
  // Returns the evicted edge, if any (possibly `e` itself).
  std::optional<Edge> insert(const Edge& e);
  std::vector<Edge> edges() const;  // sorted by id
  std::size_t size() const;

 private:
  std::uint64_t local(std::uint64_t v);
  void unlink(const Edge& e);
  std::unordered_map<std::uint64_t, std::uint64_t> ids_;
  std::vector<std::vector<Edge>> adj_;
};

struct MstResult {
  std::vector<Edge> edges;  // sorted by id
  Value total_key = 0;
  double length = 0;
  std::uint64_t rounds = 0;
  std::uint64_t super_rounds = 0;
  std::uint64_t filtered_edges = 0;  // metric only: survivors of the local filters
};

// Boruvka with pointer jumping; edges start at h(id).
MstResult sparse_mst(const Graph& g, Cluster& cluster, std::uint64_t seed);
MstResult metric_mst(const PointSet& ps, Metric metric, Cluster& cluster, std::uint64_t seed);

}  // namespace mpcdp
