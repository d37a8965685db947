#include "mpcdp/binary_ext.hpp"

#include <algorithm>
#include <map>

namespace mpcdp {

namespace {

enum Tag : Word { kTagVertex = 1, kTagCount = 2, kTagDict = 3, kTagChild = 4, kTagPrefix = 5 };

void put_vertex(Payload& out, const ExtVertex& v) {
  out.push_back(v.index);
  out.push_back(v.parent);
  out.push_back(static_cast<Word>(v.weight.num));
  out.push_back(static_cast<Word>(v.weight.den));
  out.push_back(Word{v.has_weight} | (Word{v.aux} << 1) | (Word{v.nchild} << 2));
  out.push_back(v.child[0]);
  out.push_back(v.child[1]);
}

ExtVertex get_vertex(const Payload& in, std::size_t& i) {
  ExtVertex v;
  v.index = in[i++];
  v.parent = in[i++];
  const auto num = static_cast<std::int64_t>(in[i++]);
  const auto den = static_cast<std::int64_t>(in[i++]);
  v.weight.num = num;
  v.weight.den = den;
  const Word flags = in[i++];
  v.has_weight = flags & 1;
  v.aux = (flags >> 1) & 1;
  v.nchild = static_cast<std::uint8_t>(flags >> 2);
  v.child[0] = in[i++];
  v.child[1] = in[i++];
  return v;
}

ExtVertex from_tree(const TreeVertex& tv) {
  ExtVertex v;
  v.index = tv.index;
  v.parent = tv.parent;
  v.aux = tv.aux;
  if (tv.weight) {
    v.weight = *tv.weight;
    v.has_weight = true;
  }
  return v;
}

TreeVertex to_tree(const ExtVertex& v) {
  TreeVertex tv;
  tv.index = v.index;
  tv.parent = v.parent;
  tv.aux = v.aux;
  if (v.has_weight) tv.weight = v.weight;
  return tv;
}

Tree tree_from(std::vector<ExtVertex> all) {
  std::sort(all.begin(), all.end(),
            [](const ExtVertex& a, const ExtVertex& b) { return a.index < b.index; });
  std::vector<TreeVertex> vs;
  vs.reserve(all.size());
  for (const auto& v : all) vs.push_back(to_tree(v));
  return Tree(std::move(vs));
}

ExtensionMap identity_map(const Tree& original, const Tree& ext) {
  ExtensionMap map;
  map.forward.reserve(original.size() * 2);
  for (const auto& v : original.vertices()) map.forward[v.index] = v.index;
  for (const auto& v : ext.vertices())
    if (!original.contains(v.index)) map.auxiliary.push_back(v.index);
  std::sort(map.auxiliary.begin(), map.auxiliary.end());
  return map;
}

// Left-leaning balanced gadget over `kids` hanging from `top`.
void build_gadget(std::uint64_t top, const std::vector<ExtVertex>& kids, std::uint64_t& next_aux,
                  std::vector<ExtVertex>& out_records,
                  std::vector<std::uint64_t>& top_children) {
  struct Frame {
    std::size_t lo, hi;
    std::uint64_t parent;
  };
  auto node_for = [&](std::size_t lo, std::size_t hi, std::uint64_t parent,
                      std::vector<Frame>& stack) -> std::uint64_t {
    if (hi - lo == 1) {
      ExtVertex leaf = kids[lo];
      leaf.parent = parent;
      out_records.push_back(leaf);
      return leaf.index;
    }
    ExtVertex inner;
    inner.index = next_aux++;
    inner.parent = parent;
    inner.aux = true;
    out_records.push_back(inner);
    stack.push_back({lo, hi, inner.index});
    return inner.index;
  };
  std::vector<Frame> stack;
  const std::size_t k = kids.size();
  const std::size_t mid = (k + 1) / 2;
  top_children.push_back(node_for(0, mid, top, stack));
  top_children.push_back(node_for(mid, k, top, stack));
  while (!stack.empty()) {
    Frame f = stack.back();
    stack.pop_back();
    const std::size_t half = f.lo + (f.hi - f.lo + 1) / 2;
    // Locate the inner record to fill in its children.
    std::size_t rec = out_records.size();
    while (rec-- > 0)
      if (out_records[rec].index == f.parent) break;
    const std::uint64_t a = node_for(f.lo, half, f.parent, stack);
    const std::uint64_t b = node_for(half, f.hi, f.parent, stack);
    out_records[rec].nchild = 2;
    out_records[rec].child[0] = a;
    out_records[rec].child[1] = b;
  }
}

std::uint64_t local_words(const std::vector<ExtVertex>& vs) { return vs.size() * ExtVertex::kWords; }

}  // namespace

ExtensionMap ExtensionMap::then(const ExtensionMap& g) const {
  ExtensionMap out;
  out.forward.reserve(forward.size() * 2);
  for (const auto& [k, v] : forward) out.forward[k] = g.forward.at(v);
  std::vector<std::uint64_t> aux = g.auxiliary;
  for (auto a : auxiliary) aux.push_back(g.forward.at(a));
  std::sort(aux.begin(), aux.end());
  aux.erase(std::unique(aux.begin(), aux.end()), aux.end());
  out.auxiliary = std::move(aux);
  return out;
}

bool verify_extension(const Tree& original, const Tree& extension, const ExtensionMap& map,
                      std::string* why) {
  auto fail = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  std::unordered_map<std::uint64_t, std::uint64_t> seen;
  for (const auto& v : original.vertices()) {
    auto it = map.forward.find(v.index);
    if (it == map.forward.end()) return fail("vertex " + std::to_string(v.index) + " unmapped");
    if (it->second != v.index) return fail("index not preserved for " + std::to_string(v.index));
    if (!extension.contains(it->second)) return fail("image missing for " + std::to_string(v.index));
    if (!seen.emplace(it->second, v.index).second) return fail("not injective");
  }
  // Every ancestor of v in T must map to an ancestor of f(v).
  for (const auto& v : original.vertices()) {
    std::vector<std::uint64_t> ext_anc;
    for (auto a = extension.at(map.forward.at(v.index)).parent; a != kRoot;
         a = extension.at(a).parent)
      ext_anc.push_back(a);
    std::sort(ext_anc.begin(), ext_anc.end());
    for (auto a = v.parent; a != kRoot; a = original.at(a).parent) {
      if (!std::binary_search(ext_anc.begin(), ext_anc.end(), map.forward.at(a)))
        return fail("ancestry lost between " + std::to_string(a) + " and " +
                    std::to_string(v.index));
    }
  }
  for (auto a : map.auxiliary) {
    if (!extension.contains(a)) return fail("aux " + std::to_string(a) + " missing");
    if (!extension.at(a).aux) return fail("aux flag missing on " + std::to_string(a));
  }
  if (extension.size() != original.size() + map.auxiliary.size())
    return fail("vertex count mismatch");
  return true;
}

ExtensionPipeline::ExtensionPipeline(const Tree& t, Cluster& cluster, std::uint64_t seed,
                                     std::uint64_t delta)
    : cluster_(cluster), seed_(seed), delta_(std::max<std::uint64_t>(delta, 1)),
      m_(cluster.machines()) {
  max_index_ = t.max_index();
  domain_ = 4 * (max_index_ + 1) + 64;
  input_.assign(m_, {});
  const auto& pre = t.preorder();
  for (std::size_t i = 0; i < pre.size(); ++i)
    input_[i * m_ / pre.size()].push_back(from_tree(t.at(pre[i])));
  local_.assign(m_, {});
  td_local_.assign(m_, {});
  degree_.assign(m_, {});
  groups_.assign(m_, {});
  gadget_children_.assign(m_, {});
}

void ExtensionPipeline::run_bounding(bool route_for_binarize) {
  // Round 1: machine 0 draws the hash and shares the coefficients.
  const HashFn h0 = sample_hash(seed_, default_hash_order(m_), domain_, m_);
  cluster_.round([&](Cluster::Context& ctx) {
    ctx.set_resident(local_words(input_[ctx.id()]));
    if (ctx.id() == 0) ctx.broadcast(h0.encode());
  });
  // Round 2: shard by h and send partial child counts to h(parent).
  cluster_.round([&](Cluster::Context& ctx) {
    const auto id = ctx.id();
    hash_ = HashFn::decode(ctx.inbox().at(0).payload);
    Outbox out(m_);
    std::map<std::uint64_t, std::uint64_t> counts;
    for (const auto& v : input_[id]) {
      auto& buf = out.to(hash_.machine(v.index));
      buf.push_back(kTagVertex);
      put_vertex(buf, v);
      if (v.parent != kRoot) ++counts[v.parent];
    }
    for (const auto& [p, c] : counts) {
      auto& buf = out.to(hash_.machine(p));
      buf.insert(buf.end(), {kTagCount, p, c});
    }
    ctx.set_resident(local_words(input_[id]) + hash_.k() + 4);
    out.flush(ctx);
    input_[id].clear();
  });
  // Round 3: sum counts; broadcast the high-degree dictionary.
  cluster_.round([&](Cluster::Context& ctx) {
    const auto id = ctx.id();
    auto& deg = degree_[id];
    for (const auto& msg : ctx.inbox()) {
      const auto& p = msg.payload;
      for (std::size_t i = 0; i < p.size();) {
        if (p[i] == kTagVertex) {
          ++i;
          local_[id].push_back(get_vertex(p, i));
        } else {
          deg[p[i + 1]] += p[i + 2];
          i += 3;
        }
      }
    }
    std::sort(local_[id].begin(), local_[id].end(),
              [](const ExtVertex& a, const ExtVertex& b) { return a.index < b.index; });
    Payload dict;
    for (const auto& v : local_[id]) {
      auto it = deg.find(v.index);
      const std::uint64_t d = it == deg.end() ? 0 : it->second;
      if (d > delta_) dict.insert(dict.end(), {kTagDict, v.index, (d + delta_ - 1) / delta_});
    }
    ctx.set_resident(local_words(local_[id]) + 2 * deg.size() + hash_.k() + 4);
    if (!dict.empty()) ctx.broadcast(dict);
  });
  // Round 4: build D, re-parent children of high-degree vertices, add
  // auxiliaries, and (optionally) route every vertex to h(parent).
  cluster_.round([&](Cluster::Context& ctx) {
    const auto id = ctx.id();
    std::vector<std::pair<std::uint64_t, std::uint64_t>> dict;
    for (const auto& msg : ctx.inbox())
      for (std::size_t i = 0; i < msg.payload.size(); i += 3)
        dict.emplace_back(msg.payload[i + 1], msg.payload[i + 2]);
    std::sort(dict.begin(), dict.end());
    std::unordered_map<std::uint64_t, std::pair<std::uint64_t, std::uint64_t>> base;  // v -> (D, S)
    std::uint64_t acc = max_index_;
    for (const auto& [v, s] : dict) {
      base[v] = {acc, s};
      acc += s;
    }
    td_max_index_ = acc;
    auto rng = make_rng({seed_, 0x7265706172ULL, id});
    std::vector<ExtVertex> next;
    next.reserve(local_[id].size());
    for (auto v : local_[id]) {
      if (v.parent != kRoot) {
        auto it = base.find(v.parent);
        if (it != base.end()) v.parent = it->second.first + 1 + rng() % it->second.second;
      }
      next.push_back(v);
      auto self = base.find(v.index);
      if (self != base.end()) {
        for (std::uint64_t j = 1; j <= self->second.second; ++j) {
          ExtVertex a;
          a.index = self->second.first + j;
          a.parent = v.index;
          a.aux = true;
          next.push_back(a);
        }
      }
    }
    local_[id] = std::move(next);
    td_local_[id] = local_[id];
    degree_[id].clear();
    ctx.set_resident(local_words(local_[id]) + 3 * dict.size() + hash_.k() + 4);
    if (!route_for_binarize) return;
    Outbox out(m_);
    std::vector<ExtVertex> keep;
    for (const auto& v : local_[id]) {
      if (v.parent == kRoot) {
        keep.push_back(v);
        continue;
      }
      auto& buf = out.to(hash_.machine(v.parent));
      buf.push_back(kTagChild);
      put_vertex(buf, v);
    }
    out.flush(ctx);
    local_[id] = std::move(keep);
  });
}

void ExtensionPipeline::run_gadgets() {
  // Round 5: group children by parent; send surplus counts to higher machines.
  std::vector<std::uint64_t> surplus(m_, 0);
  cluster_.round([&](Cluster::Context& ctx) {
    const auto id = ctx.id();
    std::map<std::uint64_t, std::vector<ExtVertex>> by_parent;
    std::uint64_t words = local_words(local_[id]);
    for (const auto& msg : ctx.inbox()) {
      const auto& p = msg.payload;
      for (std::size_t i = 0; i < p.size();) {
        ++i;
        auto v = get_vertex(p, i);
        by_parent[v.parent].push_back(v);
        words += ExtVertex::kWords;
      }
    }
    auto& groups = groups_[id];
    groups.clear();
    for (auto& [par, kids] : by_parent) {
      std::sort(kids.begin(), kids.end(),
                [](const ExtVertex& a, const ExtVertex& b) { return a.index < b.index; });
      if (kids.size() > 2) surplus[id] += kids.size() - 2;
      groups.emplace_back(par, std::move(kids));
    }
    ctx.set_resident(words + hash_.k() + 4);
    for (MachineId to = id + 1; to < m_; ++to) ctx.send(to, Payload{kTagPrefix, surplus[id]});
  });
  // Round 6: gadgets; ship each T^b record to h(index).
  std::vector<std::uint64_t> emitted(m_, 0);
  cluster_.round([&](Cluster::Context& ctx) {
    const auto id = ctx.id();
    std::uint64_t offset = 0;
    for (const auto& msg : ctx.inbox()) offset += msg.payload[1];
    std::uint64_t next_aux = td_max_index_ + offset + 1;
    Outbox out(m_);
    auto& gc = gadget_children_[id];
    gc.clear();
    std::uint64_t words = local_words(local_[id]);
    for (auto& [par, kids] : groups_[id]) {
      std::vector<ExtVertex> records;
      std::vector<std::uint64_t> top;
      if (kids.size() <= 2) {
        for (const auto& k : kids) {
          records.push_back(k);
          top.push_back(k.index);
        }
      } else {
        build_gadget(par, kids, next_aux, records, top);
      }
      gc[par] = top;
      emitted[id] += records.size();
      words += ExtVertex::kWords * records.size() + top.size() + 1;
      for (const auto& r : records) {
        auto& buf = out.to(hash_.machine(r.index));
        buf.push_back(kTagVertex);
        put_vertex(buf, r);
      }
    }
    groups_[id].clear();
    emitted[id] += local_[id].size();
    ctx.set_resident(words + hash_.k() + 4);
    out.flush(ctx);
  });
  tb_size_ = 0;
  for (auto e : emitted) tb_size_ += e;
}

std::vector<ExtVertex> ExtensionPipeline::assemble(Cluster::Context& ctx) {
  const auto id = ctx.id();
  std::vector<ExtVertex> out = std::move(local_[id]);  // the root, if it lives here
  local_[id].clear();
  for (const auto& msg : ctx.inbox()) {
    const auto& p = msg.payload;
    for (std::size_t i = 0; i < p.size();) {
      ++i;
      out.push_back(get_vertex(p, i));
    }
  }
  auto& gc = gadget_children_[id];
  for (auto& v : out) {
    if (v.nchild != 0) continue;  // gadget inner vertex, children already set
    auto it = gc.find(v.index);
    if (it == gc.end()) continue;
    v.nchild = static_cast<std::uint8_t>(it->second.size());
    for (std::size_t j = 0; j < it->second.size(); ++j) v.child[j] = it->second[j];
  }
  gc.clear();
  std::sort(out.begin(), out.end(),
            [](const ExtVertex& a, const ExtVertex& b) { return a.index < b.index; });
  return out;
}

DegreeResult compute_degrees(const Tree& t, const ShardedTree& sharded, Cluster& cluster) {
  const auto m = cluster.machines();
  const auto start = cluster.rounds();
  std::vector<std::unordered_map<std::uint64_t, std::uint64_t>> partial(m);
  cluster.round([&](Cluster::Context& ctx) {
    std::map<std::uint64_t, std::uint64_t> counts;
    for (auto v : sharded.local[ctx.id()]) {
      const auto p = t.at(v).parent;
      if (p != kRoot) ++counts[p];
    }
    Outbox out(m);
    for (const auto& [p, c] : counts) {
      auto& buf = out.to(sharded.machine_of(p));
      buf.insert(buf.end(), {p, c});
    }
    ctx.set_resident(sharded.local[ctx.id()].size() * 2);
    out.flush(ctx);
  });
  DegreeResult res;
  cluster.round([&](Cluster::Context& ctx) {
    auto& mine = partial[ctx.id()];
    for (auto v : sharded.local[ctx.id()]) mine[v] = 0;
    for (const auto& msg : ctx.inbox())
      for (std::size_t i = 0; i < msg.payload.size(); i += 2) mine[msg.payload[i]] += msg.payload[i + 1];
    ctx.set_resident(sharded.local[ctx.id()].size() * 3);
  });
  for (auto& mp : partial)
    for (auto& [k, v] : mp) res.children[k] = v;
  res.rounds = cluster.rounds() - start;
  return res;
}

ExtensionResult bound_degrees(const Tree& t, std::uint64_t delta, Cluster& cluster,
                              std::uint64_t seed) {
  const auto start = cluster.rounds();
  ExtensionPipeline pipe(t, cluster, seed, delta);
  pipe.run_bounding(false);
  std::vector<ExtVertex> all;
  for (const auto& loc : pipe.td_local()) all.insert(all.end(), loc.begin(), loc.end());
  ExtensionResult r;
  r.tree = tree_from(std::move(all));
  r.map = identity_map(t, r.tree);
  r.rounds = cluster.rounds() - start;
  return r;
}

ExtensionResult binarize(const Tree& td, Cluster& cluster, std::uint64_t seed) {
  const auto start = cluster.rounds();
  ExtensionPipeline pipe(td, cluster, seed, ~std::uint64_t{0});
  pipe.run_bounding(true);
  pipe.run_gadgets();
  std::vector<ExtVertex> all;
  cluster.round([&](Cluster::Context& ctx) {
    auto local = pipe.assemble(ctx);
    ctx.set_resident(local.size() * ExtVertex::kWords);
    all.insert(all.end(), local.begin(), local.end());
  });
  ExtensionResult r;
  r.tree = tree_from(std::move(all));
  r.map = identity_map(td, r.tree);
  r.rounds = cluster.rounds() - start;
  return r;
}

BinaryExtension build_binary_extension(const Tree& t, Cluster& cluster, std::uint64_t seed) {
  const auto start = cluster.rounds();
  const std::uint64_t n = t.size();
  const std::uint64_t delta = (n + cluster.machines() - 1) / cluster.machines();
  ExtensionPipeline pipe(t, cluster, seed, delta);
  pipe.run_bounding(true);
  std::vector<ExtVertex> td_all;
  for (const auto& loc : pipe.td_local()) td_all.insert(td_all.end(), loc.begin(), loc.end());
  pipe.run_gadgets();
  std::vector<ExtVertex> all;
  cluster.round([&](Cluster::Context& ctx) {
    auto local = pipe.assemble(ctx);
    ctx.set_resident(local.size() * ExtVertex::kWords);
    all.insert(all.end(), local.begin(), local.end());
  });
  BinaryExtension ext;
  ext.td = tree_from(std::move(td_all));
  ext.tb = tree_from(std::move(all));
  ext.map = identity_map(t, ext.tb);
  ext.rounds = cluster.rounds() - start;
  return ext;
}

BinaryExtension binary_extension_sequential(const Tree& t) {
  std::vector<ExtVertex> all;
  std::uint64_t next_aux = t.max_index() + 1;
  for (auto vi : t.preorder()) {
    const auto& tv = t.at(vi);
    if (tv.parent == kRoot) all.push_back(from_tree(tv));
    const auto& ch = t.children(vi);
    if (ch.size() <= 2) {
      for (auto c : ch) {
        // Parent pointer may already have been rewritten by a gadget above.
        (void)c;
      }
    }
  }
  // Second pass: emit records with gadget parents.
  all.clear();
  std::unordered_map<std::uint64_t, std::uint64_t> parent_of;
  for (auto vi : t.preorder()) {
    const auto& ch = t.children(vi);
    std::vector<ExtVertex> kids;
    for (auto c : ch) kids.push_back(from_tree(t.at(c)));
    if (kids.size() > 2) {
      std::vector<ExtVertex> records;
      std::vector<std::uint64_t> top;
      build_gadget(vi, kids, next_aux, records, top);
      for (const auto& r : records) {
        if (r.aux && !t.contains(r.index)) all.push_back(r);
        else parent_of[r.index] = r.parent;
      }
    }
  }
  for (const auto& tv : t.vertices()) {
    auto v = from_tree(tv);
    auto it = parent_of.find(v.index);
    if (it != parent_of.end()) v.parent = it->second;
    all.push_back(v);
  }
  BinaryExtension ext;
  ext.td = t;
  ext.tb = tree_from(std::move(all));
  ext.map = identity_map(t, ext.tb);
  return ext;
}

}  // namespace mpcdp
