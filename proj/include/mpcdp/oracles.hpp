#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mpcdp/common.hpp"
#include "mpcdp/geo_mst.hpp"
#include "mpcdp/tree.hpp"

namespace mpcdp {

// Reference answers on the input tree T itself (any degree, no auxiliary
// vertices). Edge weights are scaled by integer_weights(t).scale; vertex
// problems (mis, vc, dominating-set) count vertices.

Value oracle_matching(const Tree& t);
Value oracle_mis(const Tree& t);
Value oracle_vc(const Tree& t);
Value oracle_longest_path(const Tree& t);
Value oracle_dominating_set(const Tree& t);
// Minimum cut weight with floor(n/2) vertices on one side.
Value oracle_bisection(const Tree& t);
// Heaviest connected subgraph with exactly k vertices.
Value oracle_kspanning(const Tree& t, std::uint64_t k);
// Sum (median) or max (center) of client-to-nearest-center distances with
// at most k centers: enumeration for n <= 12, the node-function DP above.
Value oracle_kmedian(const Tree& t, std::uint64_t k);
Value oracle_kcenter(const Tree& t, std::uint64_t k);

// Exponential search over edge or vertex subsets; TooLarge above 16 vertices.
inline constexpr std::size_t kBruteForceLimit = 16;
Value brute_force(const std::string& problem, const Tree& t, std::uint64_t k = 0);

const std::vector<std::string>& tree_problem_names();
// Dispatch by CLI problem name; `k` for kst, kmedian and kcenter.
Value oracle_tree(const std::string& problem, const Tree& t, std::uint64_t k = 0);

struct OracleResult {
  std::string problem;
  std::string digest;  // FNV-1a of the serialized instance
  Value value = 0;
  double elapsed_ms = 0;
};
OracleResult oracle_solve(const std::string& problem, const Tree& t, std::uint64_t k = 0);

std::string fnv_digest(const std::string& text);

// Sort-and-union-find MST; ties broken by edge id.
std::vector<Edge> oracle_mst(const Graph& g);
// MST of the complete graph on the points, edge id u*n+v (u < v).
std::vector<Edge> oracle_metric_mst(const PointSet& ps, Metric metric);
Value total_weight(const std::vector<Edge>& edges);

struct PairKey {
  std::uint64_t u = 0;
  std::uint64_t v = 0;
  Value key = 0;
};
// Smallest key, ties by (u, v).
PairKey oracle_closest_pair(const PointSet& ps, Metric metric);

}  // namespace mpcdp
