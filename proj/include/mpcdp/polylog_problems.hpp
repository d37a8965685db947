#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "mpcdp/decomposition.hpp"
#include "mpcdp/dp_framework.hpp"
#include "mpcdp/sim.hpp"
#include "mpcdp/tree.hpp"

namespace mpcdp {

// Maximum weighted matching. State 0 = C (matched to a child), 1 = C'.
class MatchingPlugin : public PolylogPlugin {
 public:
  enum State { kC = 0, kCp = 1 };
  std::string name() const override { return "matching"; }
  int states() const override { return 2; }
  Sense sense() const override { return Sense::Max; }
  Value terms(const NodeView& v, int s, int s1, int s2) const override;
  Value finalize(const std::vector<Value>& root) const override;
};

// Maximum independent set (Max) and minimum vertex cover (Min), unit vertex
// weights. State 0 = in, 1 = out; auxiliary vertices relay the status of
// their closest original ancestor.
class InOutPlugin : public PolylogPlugin {
 public:
  enum State { kIn = 0, kOut = 1 };
  explicit InOutPlugin(bool cover) : cover_(cover) {}
  std::string name() const override { return cover_ ? "vc" : "mis"; }
  int states() const override { return 2; }
  Sense sense() const override { return cover_ ? Sense::Min : Sense::Max; }
  Value terms(const NodeView& v, int s, int s1, int s2) const override;
  Value finalize(const std::vector<Value>& root) const override;

 private:
  bool cover_;
};

// Longest (heaviest) path. ZERO is the empty choice, DOWN the best path
// hanging down from v, BEST the best path inside the subtree.
class LongestPathPlugin : public PolylogPlugin {
 public:
  enum State { kZero = 0, kDown = 1, kBest = 2 };
  std::string name() const override { return "longest-path"; }
  int states() const override { return 3; }
  Sense sense() const override { return Sense::Max; }
  Value terms(const NodeView& v, int s, int s1, int s2) const override;
  Value finalize(const std::vector<Value>& root) const override;
};

// Minimum dominating set. Originals use IN, DOM (dominated by a child) and
// NEED (must be dominated by the parent). An auxiliary vertex carries
// 2*anyIn + anyNeed over the original children it relays.
class DominatingSetPlugin : public PolylogPlugin {
 public:
  enum State { kIn = 0, kDom = 1, kNeed = 2 };
  std::string name() const override { return "dominating-set"; }
  int states() const override { return 4; }
  Sense sense() const override { return Sense::Min; }
  Value terms(const NodeView& v, int s, int s1, int s2) const override;
  Value finalize(const std::vector<Value>& root) const override;
};

const std::vector<std::string>& polylog_problem_names();
// Throws InvalidArgument for unknown names.
std::unique_ptr<PolylogPlugin> make_polylog_plugin(const std::string& name);

// One node step of a plugin given concrete child vectors.
std::vector<Value> node_vector(const PolylogPlugin& plugin, const NodeView& v,
                               const std::vector<Value>* c1, const std::vector<Value>* c2);

// (C, C') at v from its children's (C, C') pairs.
std::pair<Value, Value> matching_node_update(const NodeView& v,
                                             const std::array<std::pair<Value, Value>, 2>& kids);

// Matching partial data as a pair of functions over {0,1}^4: bits
// (a0, a1) select C or C' of the first unknown leaf, (a2, a3) of the second.
struct MatchingTable {
  std::uint64_t id = 0;
  std::vector<std::uint64_t> unknowns;
  std::array<Value, 16> f{};   // for C(r)
  std::array<Value, 16> fp{};  // for C'(r)

  static MatchingTable from_partial(const PolyPartial& pd);
  // (C(r), C'(r)) given (C, C') of each unknown leaf.
  std::pair<Value, Value> evaluate(const std::vector<std::pair<Value, Value>>& leaves) const;
};

struct PolylogReport {
  Value answer = 0;  // in units of 1/scale
  std::int64_t scale = 1;
  std::uint64_t n = 0;
  std::uint64_t tb_size = 0;
  std::uint64_t rounds = 0;
  std::uint64_t extension_rounds = 0;
  std::uint64_t decomposition_rounds = 0;
  std::uint64_t iterations = 0;
  std::uint64_t components = 0;
  std::uint64_t max_resident = 0;
};

// Binarize, decompose, compress every component where it lives, ship the
// tables to machine 0 and combine them there.
PolylogReport solve_polylog(const PolylogPlugin& plugin, const Tree& t, Cluster& cluster,
                            std::uint64_t seed);

// Same answer on one machine via the sequential binary extension.
Value solve_polylog_sequential(const PolylogPlugin& plugin, const Tree& t);

}  // namespace mpcdp
