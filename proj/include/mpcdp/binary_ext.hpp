#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "mpcdp/khash.hpp"
#include "mpcdp/sim.hpp"
#include "mpcdp/tree.hpp"

namespace mpcdp {

struct ExtensionMap {
  std::unordered_map<std::uint64_t, std::uint64_t> forward;  // original -> extension index
  std::vector<std::uint64_t> auxiliary;                       // sorted

  // (g after f): maps through f then g.
  ExtensionMap then(const ExtensionMap& g) const;
};

// Checks injectivity, index preservation and ancestry preservation by
// enumerating every ancestor pair of `original`.
bool verify_extension(const Tree& original, const Tree& extension, const ExtensionMap& map,
                      std::string* why = nullptr);

// Vertex record as it lives on a machine once the extension is built.
struct ExtVertex {
  std::uint64_t index = 0;
  std::uint64_t parent = kRoot;
  Rational weight;
  bool has_weight = false;
  bool aux = false;
  std::uint8_t nchild = 0;
  std::uint64_t child[2] = {0, 0};

  static constexpr std::uint64_t kWords = 7;
};

struct DegreeResult {
  std::unordered_map<std::uint64_t, std::uint64_t> children;
  std::uint64_t rounds = 0;
};

// Child counts via per-machine partial counts sent to h(v).
DegreeResult compute_degrees(const Tree& t, const ShardedTree& sharded, Cluster& cluster);

struct ExtensionResult {
  Tree tree;
  ExtensionMap map;
  std::uint64_t rounds = 0;
};

ExtensionResult bound_degrees(const Tree& t, std::uint64_t delta, Cluster& cluster,
                              std::uint64_t seed);
ExtensionResult binarize(const Tree& td, Cluster& cluster, std::uint64_t seed);

struct BinaryExtension {
  Tree td;
  Tree tb;
  ExtensionMap map;  // T -> T^b
  std::uint64_t rounds = 0;
};

// Full bounded-degree + binarization pipeline, seven rounds.
BinaryExtension build_binary_extension(const Tree& t, Cluster& cluster, std::uint64_t seed);

// Single-machine binarization with the same gadget shape (no degree bounding).
BinaryExtension binary_extension_sequential(const Tree& t);

// Staged form so later pipelines can fuse the assembly round with their own
// first round.
class ExtensionPipeline {
 public:
  ExtensionPipeline(const Tree& t, Cluster& cluster, std::uint64_t seed, std::uint64_t delta);

  // Rounds 1-4: share hash, shard + count, dictionary, reparent.
  void run_bounding(bool route_for_binarize);
  // Rounds 5-6: prefix counts and gadgets.
  void run_gadgets();
  // Round-7 body: builds the local vertex list of T^b on ctx.id().
  std::vector<ExtVertex> assemble(Cluster::Context& ctx);

  const HashFn& hash() const { return hash_; }
  std::uint64_t domain() const { return domain_; }
  std::uint64_t delta() const { return delta_; }
  // T^d vertices per machine after round 4 (for inspection).
  const std::vector<std::vector<ExtVertex>>& td_local() const { return td_local_; }
  std::uint64_t max_index() const { return max_index_; }
  // |V(T^b)|, tallied on the host after run_gadgets().
  std::uint64_t tb_size() const { return tb_size_; }

 private:
  Cluster& cluster_;
  std::uint64_t seed_;
  std::uint64_t delta_;
  std::uint64_t max_index_;
  std::uint64_t domain_;
  HashFn hash_;
  std::uint32_t m_;
  std::vector<std::vector<ExtVertex>> input_;
  std::vector<std::vector<ExtVertex>> local_;
  std::vector<std::vector<ExtVertex>> td_local_;
  std::vector<std::unordered_map<std::uint64_t, std::uint64_t>> degree_;
  std::uint64_t td_max_index_ = 0;
  std::uint64_t tb_size_ = 0;
  // Per machine: children lists gathered at h(parent).
  std::vector<std::vector<std::pair<std::uint64_t, std::vector<ExtVertex>>>> groups_;
  // Per machine: T^b children of vertices whose gadgets were built here.
  std::vector<std::unordered_map<std::uint64_t, std::vector<std::uint64_t>>> gadget_children_;
};

}  // namespace mpcdp
