#include "mpcdp/polylog_problems.hpp"

#include <algorithm>
#include <unordered_map>

namespace mpcdp {

namespace {

constexpr Value kNo = kNegInf;  // impossible, max sense
constexpr Value kNoMin = kPosInf;

}  // namespace

// ---------------------------------------------------------------------------
// Matching.

Value MatchingPlugin::terms(const NodeView& v, int s, int s1, int s2) const {
  const int st[2] = {s1, s2};
  // Aux children must be used exactly when in state C; original children
  // in state C' may be matched to v or not.
  Value best = kNo;
  const int n = v.nchild;
  for (int mask = 0; mask < (1 << n); ++mask) {
    int cnt = 0;
    Value w = 0;
    bool ok = true;
    for (int j = 0; j < n && ok; ++j) {
      const bool use = (mask >> j) & 1;
      if (use) {
        ok = v.child_aux[j] ? st[j] == kC : st[j] == kCp;
        ++cnt;
        w += v.w[j];
      } else {
        ok = v.child_aux[j] ? st[j] == kCp : true;
      }
    }
    if (!ok) continue;
    if ((s == kC && cnt == 1) || (s == kCp && cnt == 0)) best = std::max(best, w);
  }
  return best;
}

Value MatchingPlugin::finalize(const std::vector<Value>& root) const {
  return std::max(root[kC], root[kCp]);
}

// ---------------------------------------------------------------------------
// Independent set / vertex cover.

Value InOutPlugin::terms(const NodeView& v, int s, int s1, int s2) const {
  const Value no = cover_ ? kNoMin : kNo;
  const int st[2] = {s1, s2};
  for (int j = 0; j < v.nchild; ++j) {
    if (v.child_aux[j]) {
      if (st[j] != s) return no;
    } else if (!cover_ && s == kIn && st[j] == kIn) {
      return no;
    } else if (cover_ && s == kOut && st[j] == kOut) {
      return no;
    }
  }
  return (!v.aux && s == kIn) ? 1 : 0;
}

Value InOutPlugin::finalize(const std::vector<Value>& root) const {
  return pick(sense(), root[kIn], root[kOut]);
}

// ---------------------------------------------------------------------------
// Longest path.

Value LongestPathPlugin::terms(const NodeView& v, int s, int s1, int s2) const {
  const int st[2] = {v.nchild >= 1 ? s1 : kZero, v.nchild >= 2 ? s2 : kZero};
  int down = 0, best = 0;
  Value w = 0;
  for (int j = 0; j < 2; ++j) {
    if (st[j] == kDown) {
      ++down;
      w += v.w[j];
    } else if (st[j] == kBest) {
      ++best;
    }
  }
  switch (s) {
    case kZero:
      return (down == 0 && best == 0) ? 0 : kNo;
    case kDown:
      return (best == 0 && down <= 1) ? w : kNo;
    default:
      if (best == 1 && down == 0) return 0;
      if (best == 0) return w;
      return kNo;
  }
}

Value LongestPathPlugin::finalize(const std::vector<Value>& root) const { return root[kBest]; }

// ---------------------------------------------------------------------------
// Dominating set.

Value DominatingSetPlugin::terms(const NodeView& v, int s, int s1, int s2) const {
  const int st[2] = {s1, s2};
  bool any_in = false, any_need = false;
  for (int j = 0; j < v.nchild; ++j) {
    if (v.child_aux[j]) {
      any_in |= (st[j] >> 1) & 1;
      any_need |= st[j] & 1;
    } else {
      if (st[j] == 3) return kNoMin;
      any_in |= st[j] == kIn;
      any_need |= st[j] == kNeed;
    }
  }
  if (v.aux) return s == (int{any_in} << 1 | int{any_need}) ? 0 : kNoMin;
  switch (s) {
    case kIn:
      return 1;
    case kDom:
      return (any_in && !any_need) ? 0 : kNoMin;
    case kNeed:
      return (!any_in && !any_need) ? 0 : kNoMin;
    default:
      return kNoMin;
  }
}

Value DominatingSetPlugin::finalize(const std::vector<Value>& root) const {
  return std::min(root[kIn], root[kDom]);
}

// ---------------------------------------------------------------------------

const std::vector<std::string>& polylog_problem_names() {
  static const std::vector<std::string> names{"matching", "mis", "vc", "longest-path",
                                              "dominating-set"};
  return names;
}

std::unique_ptr<PolylogPlugin> make_polylog_plugin(const std::string& name) {
  if (name == "matching") return std::make_unique<MatchingPlugin>();
  if (name == "mis") return std::make_unique<InOutPlugin>(false);
  if (name == "vc") return std::make_unique<InOutPlugin>(true);
  if (name == "longest-path") return std::make_unique<LongestPathPlugin>();
  if (name == "dominating-set") return std::make_unique<DominatingSetPlugin>();
  throw Error(ErrorKind::InvalidArgument, "unknown polylog problem '" + name + "'");
}

std::vector<Value> node_vector(const PolylogPlugin& plugin, const NodeView& v,
                               const std::vector<Value>* c1, const std::vector<Value>* c2) {
  const int k = plugin.states();
  const Sense sense = plugin.sense();
  std::vector<Value> out(k, identity_of(sense));
  const int k1 = v.nchild >= 1 ? k : 1;
  const int k2 = v.nchild >= 2 ? k : 1;
  for (int s = 0; s < k; ++s)
    for (int s1 = 0; s1 < k1; ++s1)
      for (int s2 = 0; s2 < k2; ++s2) {
        Value val = plugin.terms(v, s, s1, s2);
        if (v.nchild >= 1) val = sat_add(val, (*c1)[s1]);
        if (v.nchild >= 2) val = sat_add(val, (*c2)[s2]);
        out[s] = pick(sense, out[s], val);
      }
  return out;
}

std::pair<Value, Value> matching_node_update(const NodeView& v,
                                             const std::array<std::pair<Value, Value>, 2>& kids) {
  const std::vector<Value> a{kids[0].first, kids[0].second};
  const std::vector<Value> b{kids[1].first, kids[1].second};
  const auto out = node_vector(MatchingPlugin{}, v, &a, &b);
  return {out[0], out[1]};
}

MatchingTable MatchingTable::from_partial(const PolyPartial& pd) {
  if (pd.k != 2) throw Error(ErrorKind::InvalidArgument, "not a two-state table");
  MatchingTable t;
  t.id = pd.id;
  t.unknowns = pd.unknowns;
  t.f.fill(kNo);
  t.fp.fill(kNo);
  const std::size_t u = pd.unknowns.size();
  const std::size_t ku = std::size_t{1} << u;
  for (std::size_t a = 0; a < ku; ++a) {
    // Digit of leaf j (most significant first) picks C (0) or C' (1).
    unsigned bits = 0;
    for (std::size_t j = 0; j < u; ++j) {
      const unsigned d = (a >> (u - 1 - j)) & 1;
      bits |= 1u << (2 * j + d);
    }
    t.f[bits] = pd.table[0 * ku + a];
    t.fp[bits] = pd.table[1 * ku + a];
  }
  return t;
}

std::pair<Value, Value> MatchingTable::evaluate(const std::vector<std::pair<Value, Value>>& leaves) const {
  if (leaves.size() != unknowns.size()) throw Error(ErrorKind::InvalidArgument, "leaf count mismatch");
  Value c = kNo, cp = kNo;
  for (unsigned bits = 0; bits < 16; ++bits) {
    if (f[bits] == kNo && fp[bits] == kNo) continue;
    Value add = 0;
    for (std::size_t j = 0; j < 2; ++j) {
      const unsigned pair = (bits >> (2 * j)) & 3;
      if (j >= leaves.size()) {
        if (pair != 0) add = kNo;
        continue;
      }
      if (pair == 1) add = sat_add(add, leaves[j].first);
      else if (pair == 2) add = sat_add(add, leaves[j].second);
      else add = kNo;
    }
    c = std::max(c, sat_add(f[bits], add));
    cp = std::max(cp, sat_add(fp[bits], add));
  }
  return {c, cp};
}

// ---------------------------------------------------------------------------
// Distributed solver.

namespace {

enum Tag : Word { kLeafInfo = 1, kPartial = 2 };

}  // namespace

PolylogReport solve_polylog(const PolylogPlugin& plugin, const Tree& t, Cluster& cluster,
                            std::uint64_t seed) {
  PolylogReport rep;
  rep.n = t.size();
  const auto iw = integer_weights(t);
  rep.scale = iw.scale;
  const std::uint32_t m = cluster.machines();
  const auto start = cluster.rounds();

  const std::uint64_t delta = (t.size() + m - 1) / m;
  ExtensionPipeline pipe(t, cluster, seed, delta);
  pipe.run_bounding(true);
  pipe.run_gadgets();
  rep.tb_size = pipe.tb_size();
  rep.extension_rounds = cluster.rounds() - start;

  Decomposer dec(cluster, pipe.hash(), rep.tb_size, seed);
  const auto d = dec.run([&](Cluster::Context& ctx) { return pipe.assemble(ctx); });
  rep.decomposition_rounds = d.rounds;
  rep.iterations = d.iterations.size();
  rep.components = d.components.size();
  const HashFn& h = dec.hash();
  auto& live = dec.live();
  auto comp_words = [&](MachineId id) {
    std::uint64_t w = h.k() + 4;
    for (const auto& [cid, c] : live[id]) w += 4 + c.children.size() + c.vertices.size() * ExtVertex::kWords;
    return w;
  };

  // Each component tells its parent component how its root hangs below it.
  cluster.round([&](Cluster::Context& ctx) {
    Outbox out(m);
    for (const auto& [cid, c] : live[ctx.id()]) {
      if (c.parent == kRoot) continue;
      const ExtVertex* root = nullptr;
      for (const auto& v : c.vertices)
        if (v.index == cid) root = &v;
      auto& b = out.to(h.machine(c.parent));
      b.insert(b.end(), {kLeafInfo, c.parent, cid, Word{root->aux},
                         static_cast<Word>(int_weight(*root, rep.scale))});
    }
    ctx.set_resident(comp_words(ctx.id()));
    out.flush(ctx);
  });

  // Compress locally, ship tables to machine 0.
  cluster.round([&](Cluster::Context& ctx) {
    std::unordered_map<std::uint64_t, std::vector<UnknownLeaf>> leaves;
    std::uint64_t staged = 0;
    for (const auto& msg : ctx.inbox()) {
      const auto& p = msg.payload;
      for (std::size_t i = 0; i < p.size(); i += 5) {
        leaves[p[i + 1]].push_back({p[i + 2], p[i + 3] != 0, static_cast<Value>(p[i + 4])});
        staged += 5;
      }
    }
    Payload buf;
    for (const auto& [cid, c] : live[ctx.id()]) {
      auto& ls = leaves[cid];
      std::sort(ls.begin(), ls.end(), [](const UnknownLeaf& a, const UnknownLeaf& b) { return a.id < b.id; });
      const auto pd = compress_component(plugin, c.vertices, cid, ls, rep.scale);
      buf.push_back(kPartial);
      buf.push_back(c.parent);
      const auto enc = pd.encode();
      buf.insert(buf.end(), enc.begin(), enc.end());
    }
    ctx.set_resident(comp_words(ctx.id()) + staged + buf.size());
    if (!buf.empty()) ctx.send(0, std::move(buf));
  });

  // Machine 0 combines leaf to root.
  Value answer = 0;
  cluster.round([&](Cluster::Context& ctx) {
    if (ctx.id() != 0) {
      ctx.set_resident(comp_words(ctx.id()));
      return;
    }
    std::unordered_map<std::uint64_t, PolyPartial> parts;
    std::unordered_map<std::uint64_t, std::uint64_t> parent;
    std::uint64_t words = 0;
    for (const auto& msg : ctx.inbox()) {
      const auto& p = msg.payload;
      words += p.size();
      for (std::size_t i = 0; i < p.size();) {
        ++i;
        const std::uint64_t par = p[i++];
        auto pd = PolyPartial::decode(p, i);
        parent[pd.id] = par;
        parts.emplace(pd.id, std::move(pd));
      }
    }
    ctx.set_resident(comp_words(0) + 2 * words);
    std::uint64_t root = kRoot;
    std::unordered_map<std::uint64_t, std::vector<std::uint64_t>> kids;
    for (const auto& [id, par] : parent) {
      if (par == kRoot) root = id;
      else kids[par].push_back(id);
    }
    std::unordered_map<std::uint64_t, std::vector<Value>> vec;
    std::vector<std::pair<std::uint64_t, bool>> stack{{root, false}};
    while (!stack.empty()) {
      auto [id, expanded] = stack.back();
      stack.pop_back();
      if (!expanded) {
        stack.push_back({id, true});
        for (auto c : kids[id]) stack.push_back({c, false});
        continue;
      }
      const auto& pd = parts.at(id);
      std::vector<std::vector<Value>> lv;
      for (auto u : pd.unknowns) lv.push_back(vec.at(u));
      vec[id] = evaluate_partial(plugin, pd, lv);
    }
    answer = plugin.finalize(vec.at(root));
  });

  rep.answer = answer;
  rep.rounds = cluster.rounds() - start;
  for (std::uint64_t r = start; r < cluster.rounds(); ++r)
    rep.max_resident = std::max(rep.max_resident, cluster.metrics()[r].max_resident_words);
  return rep;
}

Value solve_polylog_sequential(const PolylogPlugin& plugin, const Tree& t) {
  const auto ext = binary_extension_sequential(t);
  return plugin.finalize(sequential_root_vector(plugin, ext.tb, integer_weights(t).scale));
}

}  // namespace mpcdp
