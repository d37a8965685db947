#include "mpcdp/dp_framework.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace mpcdp {

std::int64_t int_weight(const ExtVertex& v, std::int64_t scale) {
  if (v.aux) return 0;
  if (!v.has_weight) return scale;
  return v.weight.num * (scale / v.weight.den);
}

namespace {

std::size_t ipow(std::size_t b, std::size_t e) {
  std::size_t r = 1;
  while (e-- > 0) r *= b;
  return r;
}

Word to_word(Value v) { return static_cast<Word>(v); }
Value from_word(Word w) { return static_cast<Value>(w); }

}  // namespace

// ---------------------------------------------------------------------------
// Polylog tables.

Payload PolyPartial::encode() const {
  Payload p{id, static_cast<Word>(k), unknowns.size()};
  p.insert(p.end(), unknowns.begin(), unknowns.end());
  for (auto v : table) p.push_back(to_word(v));
  return p;
}

PolyPartial PolyPartial::decode(const Payload& p, std::size_t& i) {
  PolyPartial pd;
  pd.id = p[i];
  pd.k = static_cast<int>(p[i + 1]);
  const std::size_t u = p[i + 2];
  i += 3;
  pd.unknowns.assign(p.begin() + static_cast<std::ptrdiff_t>(i),
                     p.begin() + static_cast<std::ptrdiff_t>(i + u));
  i += u;
  const std::size_t n = static_cast<std::size_t>(pd.k) * ipow(pd.k, u);
  pd.table.reserve(n);
  for (std::size_t j = 0; j < n; ++j) pd.table.push_back(from_word(p[i + j]));
  i += n;
  return pd;
}

PolyPartial compress_component(const PolylogPlugin& plugin, const std::vector<ExtVertex>& vertices,
                               std::uint64_t root, const std::vector<UnknownLeaf>& leaves,
                               std::int64_t scale) {
  if (leaves.size() > kMaxUnknownLeaves)
    throw Error(ErrorKind::SizeBoundViolated,
                "component " + std::to_string(root) + " has " + std::to_string(leaves.size()) +
                    " unknown leaves");
  const int k = plugin.states();
  const Sense sense = plugin.sense();
  const Value idv = identity_of(sense);
  const std::size_t u = leaves.size();
  const std::size_t ku = ipow(k, u);
  std::unordered_map<std::uint64_t, const ExtVertex*> local;
  for (const auto& v : vertices) local[v.index] = &v;
  std::unordered_map<std::uint64_t, std::size_t> leaf_pos;
  for (std::size_t j = 0; j < u; ++j) leaf_pos[leaves[j].id] = j;

  auto leaf_table = [&](std::size_t j) {
    std::vector<Value> t(static_cast<std::size_t>(k) * ku, idv);
    const std::size_t stride = ipow(k, u - 1 - j);
    for (int s = 0; s < k; ++s)
      for (std::size_t a = 0; a < ku; ++a)
        if (static_cast<int>((a / stride) % k) == s) t[s * ku + a] = 0;
    return t;
  };

  std::unordered_map<std::uint64_t, std::vector<Value>> tables;
  // Iterative post-order.
  std::vector<std::pair<std::uint64_t, bool>> stack{{root, false}};
  while (!stack.empty()) {
    auto [vi, expanded] = stack.back();
    stack.pop_back();
    const ExtVertex& v = *local.at(vi);
    if (!expanded) {
      stack.push_back({vi, true});
      for (int j = 0; j < v.nchild; ++j)
        if (local.count(v.child[j])) stack.push_back({v.child[j], false});
      continue;
    }
    NodeView view;
    view.aux = v.aux;
    view.nchild = v.nchild;
    std::vector<Value> owned[2];
    const std::vector<Value>* kid[2] = {nullptr, nullptr};
    for (int j = 0; j < v.nchild; ++j) {
      const auto c = v.child[j];
      auto it = local.find(c);
      if (it != local.end()) {
        view.child_aux[j] = it->second->aux;
        view.w[j] = int_weight(*it->second, scale);
        kid[j] = &tables.at(c);
      } else {
        auto lp = leaf_pos.find(c);
        if (lp == leaf_pos.end())
          throw Error(ErrorKind::InvalidArgument, "child " + std::to_string(c) + " is neither local nor a listed leaf");
        view.child_aux[j] = leaves[lp->second].aux;
        view.w[j] = leaves[lp->second].weight;
        owned[j] = leaf_table(lp->second);
        kid[j] = &owned[j];
      }
    }
    std::vector<Value> t(static_cast<std::size_t>(k) * ku, idv);
    const int k1 = v.nchild >= 1 ? k : 1;
    const int k2 = v.nchild >= 2 ? k : 1;
    for (int s = 0; s < k; ++s) {
      for (int s1 = 0; s1 < k1; ++s1) {
        for (int s2 = 0; s2 < k2; ++s2) {
          const Value base = plugin.terms(view, s, s1, s2);
          if (base == idv) continue;
          for (std::size_t a = 0; a < ku; ++a) {
            Value val = base;
            if (kid[0]) val = sat_add(val, (*kid[0])[s1 * ku + a]);
            if (kid[1]) val = sat_add(val, (*kid[1])[s2 * ku + a]);
            t[s * ku + a] = pick(sense, t[s * ku + a], val);
          }
        }
      }
    }
    for (int j = 0; j < v.nchild; ++j)
      if (local.count(v.child[j])) tables.erase(v.child[j]);
    tables[vi] = std::move(t);
  }
  PolyPartial pd;
  pd.id = root;
  pd.k = k;
  for (const auto& l : leaves) pd.unknowns.push_back(l.id);
  pd.table = std::move(tables.at(root));
  return pd;
}

PolyPartial merge_partial(const PolylogPlugin& plugin, const PolyPartial& parent,
                          const PolyPartial& child) {
  const auto slot_it = std::find(parent.unknowns.begin(), parent.unknowns.end(), child.id);
  if (slot_it == parent.unknowns.end())
    throw Error(ErrorKind::InvalidArgument, "component " + std::to_string(child.id) +
                                                " is not an unknown leaf of " +
                                                std::to_string(parent.id));
  const std::size_t slot = static_cast<std::size_t>(slot_it - parent.unknowns.begin());
  PolyPartial out;
  out.id = parent.id;
  out.k = parent.k;
  out.unknowns.assign(parent.unknowns.begin(), slot_it);
  out.unknowns.insert(out.unknowns.end(), child.unknowns.begin(), child.unknowns.end());
  out.unknowns.insert(out.unknowns.end(), slot_it + 1, parent.unknowns.end());
  if (out.unknowns.size() > kMaxUnknownLeaves)
    throw Error(ErrorKind::SizeBoundViolated, "merged table would have " +
                                                  std::to_string(out.unknowns.size()) +
                                                  " unknown leaves");
  const int k = parent.k;
  const Sense sense = plugin.sense();
  const std::size_t up = parent.unknowns.size(), uc = child.unknowns.size();
  const std::size_t uo = out.unknowns.size();
  const std::size_t kp = ipow(k, up), kc = ipow(k, uc), ko = ipow(k, uo);
  out.table.assign(static_cast<std::size_t>(k) * ko, identity_of(sense));
  const std::size_t after = up - slot - 1;
  for (int s = 0; s < k; ++s) {
    for (std::size_t a = 0; a < ko; ++a) {
      // Split a into (before, child digits, after).
      const std::size_t a_after = a % ipow(k, after);
      const std::size_t a_child = (a / ipow(k, after)) % kc;
      const std::size_t a_before = a / ipow(k, after) / kc;
      Value best = identity_of(sense);
      for (int x = 0; x < k; ++x) {
        const std::size_t pa = (a_before * k + x) * ipow(k, after) + a_after;
        best = pick(sense, best, sat_add(parent.table[s * kp + pa], child.table[x * kc + a_child]));
      }
      out.table[s * ko + a] = best;
    }
  }
  return out;
}

std::vector<Value> evaluate_partial(const PolylogPlugin& plugin, const PolyPartial& pd,
                                    const std::vector<std::vector<Value>>& leaf_values) {
  const std::size_t u = pd.unknowns.size();
  if (leaf_values.size() != u) throw Error(ErrorKind::InvalidArgument, "leaf value count mismatch");
  const int k = pd.k;
  const std::size_t ku = ipow(k, u);
  const Sense sense = plugin.sense();
  std::vector<Value> out(k, identity_of(sense));
  for (int s = 0; s < k; ++s) {
    for (std::size_t a = 0; a < ku; ++a) {
      Value val = pd.table[s * ku + a];
      for (std::size_t j = 0; j < u; ++j)
        val = sat_add(val, leaf_values[j][(a / ipow(k, u - 1 - j)) % k]);
      out[s] = pick(sense, out[s], val);
    }
  }
  return out;
}

std::vector<Value> sequential_root_vector(const PolylogPlugin& plugin, const Tree& tb,
                                          std::int64_t scale) {
  std::vector<ExtVertex> vs;
  vs.reserve(tb.size());
  for (const auto& tv : tb.vertices()) {
    ExtVertex v;
    v.index = tv.index;
    v.parent = tv.parent;
    v.aux = tv.aux;
    if (tv.weight) {
      v.weight = *tv.weight;
      v.has_weight = true;
    }
    const auto& ch = tb.children(tv.index);
    if (ch.size() > 2) throw Error(ErrorKind::InvalidArgument, "tree is not binary");
    v.nchild = static_cast<std::uint8_t>(ch.size());
    for (std::size_t j = 0; j < ch.size(); ++j) v.child[j] = ch[j];
    vs.push_back(v);
  }
  auto pd = compress_component(plugin, vs, tb.root(), {}, scale);
  return pd.table;
}

// ---------------------------------------------------------------------------
// Linear vectors.

std::uint64_t config_count(const LinearPlugin& p, std::size_t borders) {
  return p.extra_states() * ipow(p.vertex_states(), borders);
}

LinearData singleton_data(const LinearPlugin& p, std::uint64_t vertex, bool aux,
                          std::uint32_t degree) {
  LinearData d;
  d.meta.id = vertex;
  if (degree > 0) d.meta.borders.push_back({vertex, aux, degree});
  d.meta.configs = config_count(p, d.meta.borders.size());
  d.meta.len = aux ? 1 : 2;
  d.values.assign(d.meta.flat(), identity_of(p.sense()));
  const std::uint64_t qpow = d.meta.borders.empty() ? 1 : p.vertex_states();
  for (const auto& e : p.singleton(aux)) {
    const std::uint64_t cfg = e.extra * qpow + (d.meta.borders.empty() ? 0 : e.state);
    auto& slot = d.values[cfg * d.meta.len + e.count];
    slot = pick(p.sense(), slot, e.value);
  }
  return d;
}

namespace {

// Where each output border comes from, plus the positions of x and y.
struct MergePlan {
  std::size_t xa = 0, yb = 0;
  std::vector<std::pair<int, std::size_t>> src;  // (0 = a, 1 = b; index)
};

MergePlan plan_merge(const LinearMeta& a, const LinearMeta& b, const LinearMeta& out,
                     const JoinEdge& e) {
  MergePlan plan;
  auto find = [](const LinearMeta& m, std::uint64_t v) -> std::size_t {
    for (std::size_t i = 0; i < m.borders.size(); ++i)
      if (m.borders[i].vertex == v) return i;
    throw Error(ErrorKind::InvalidArgument, "vertex " + std::to_string(v) + " is not a border of partition " +
                                                std::to_string(m.id));
  };
  plan.xa = find(a, e.x);
  plan.yb = find(b, e.y);
  for (const auto& bs : out.borders) {
    bool hit = false;
    for (std::size_t i = 0; i < a.borders.size() && !hit; ++i)
      if (a.borders[i].vertex == bs.vertex) {
        plan.src.push_back({0, i});
        hit = true;
      }
    for (std::size_t i = 0; i < b.borders.size() && !hit; ++i)
      if (b.borders[i].vertex == bs.vertex) {
        plan.src.push_back({1, i});
        hit = true;
      }
  }
  return plan;
}

struct ConfigView {
  std::uint32_t extra = 0;
  std::uint32_t q_end = 0;      // state of the joined endpoint
  std::uint64_t contrib = 0;    // this side's share of the output config
  bool valid = true;
};

std::vector<ConfigView> views_for(const LinearPlugin& p, const LinearMeta& m, std::size_t endpoint,
                                  const MergePlan& plan, int side) {
  const std::uint32_t q = p.vertex_states();
  const std::uint64_t qpow = ipow(q, m.borders.size());
  std::vector<ConfigView> out(m.configs);
  for (std::uint64_t c = 0; c < m.configs; ++c) {
    ConfigView v;
    v.extra = static_cast<std::uint32_t>(c / qpow);
    auto digit = [&](std::size_t i) { return static_cast<std::uint32_t>((c / ipow(q, i)) % q); };
    v.q_end = digit(endpoint);
    for (std::size_t o = 0; o < plan.src.size(); ++o)
      if (plan.src[o].first == side) v.contrib += digit(plan.src[o].second) * ipow(q, o);
    out[c] = v;
  }
  return out;
}

}  // namespace

LinearMeta merge_meta(const LinearPlugin& p, const LinearMeta& a, const LinearMeta& b,
                      const JoinEdge& e, std::uint64_t out_id) {
  LinearMeta out;
  out.id = out_id;
  bool sx = false, sy = false;
  for (auto bs : a.borders) {
    if (bs.vertex == e.x) {
      sx = true;
      --bs.outside;
    }
    if (bs.outside > 0) out.borders.push_back(bs);
  }
  for (auto bs : b.borders) {
    if (bs.vertex == e.y) {
      sy = true;
      --bs.outside;
    }
    if (bs.outside > 0) out.borders.push_back(bs);
  }
  if (!sx || !sy) throw Error(ErrorKind::InvalidArgument, "join edge endpoints are not borders");
  std::sort(out.borders.begin(), out.borders.end(),
            [](const BorderSlot& l, const BorderSlot& r) { return l.vertex < r.vertex; });
  out.configs = config_count(p, out.borders.size());
  out.len = a.len + b.len - 1;
  return out;
}

std::vector<std::pair<std::uint64_t, Value>> sub_unify(
    const LinearPlugin& p, const LinearMeta& a, const LinearMeta& b, const LinearMeta& out,
    const JoinEdge& e, const std::vector<std::pair<std::uint64_t, Value>>& chunk_a,
    const std::vector<std::pair<std::uint64_t, Value>>& chunk_b) {
  if (chunk_a.empty() || chunk_b.empty()) return {};
  const Sense sense = p.sense();
  const Value idv = identity_of(sense);
  const MergePlan plan = plan_merge(a, b, out, e);
  const auto va = views_for(p, a, plan.xa, plan, 0);
  const auto vb = views_for(p, b, plan.yb, plan, 1);
  const std::uint64_t qpow_out = ipow(p.vertex_states(), out.borders.size());
  // Group each chunk by config.
  auto group = [](const std::vector<std::pair<std::uint64_t, Value>>& chunk, std::uint64_t len) {
    std::map<std::uint64_t, std::vector<std::pair<std::uint64_t, Value>>> g;
    for (const auto& [idx, val] : chunk) g[idx / len].emplace_back(idx % len, val);
    return g;
  };
  const auto ga = group(chunk_a, a.len);
  const auto gb = group(chunk_b, b.len);
  std::unordered_map<std::uint64_t, Value> best;
  for (const auto& [ca, ea] : ga) {
    const auto& cva = va[ca];
    for (const auto& [cb, eb] : gb) {
      const auto& cvb = vb[cb];
      const auto joined = p.join(cva.q_end, cvb.q_end, cva.extra, cvb.extra, e);
      if (!joined) continue;
      const std::uint64_t cfg = joined->extra * qpow_out + cva.contrib + cvb.contrib;
      const std::uint64_t base = cfg * out.len;
      for (const auto& [ka, xa] : ea) {
        if (xa == idv) continue;
        const Value with_edge = sat_add(xa, joined->cost);
        for (const auto& [kb, xb] : eb) {
          if (xb == idv) continue;
          const Value val = sat_add(with_edge, xb);
          auto [it, fresh] = best.try_emplace(base + ka + kb, val);
          if (!fresh) it->second = pick(sense, it->second, val);
        }
      }
    }
  }
  std::vector<std::pair<std::uint64_t, Value>> outv(best.begin(), best.end());
  std::sort(outv.begin(), outv.end());
  return outv;
}

void unify(const LinearPlugin& p, std::vector<Value>& values,
           const std::vector<std::pair<std::uint64_t, Value>>& candidates) {
  for (const auto& [idx, val] : candidates) values[idx] = pick(p.sense(), values[idx], val);
}

namespace {

std::vector<std::pair<std::uint64_t, Value>> sparse(const LinearPlugin& p, const std::vector<Value>& v,
                                                    std::uint64_t lo, std::uint64_t hi) {
  const Value idv = identity_of(p.sense());
  std::vector<std::pair<std::uint64_t, Value>> out;
  for (std::uint64_t i = lo; i < hi; ++i)
    if (v[i] != idv) out.emplace_back(i, v[i]);
  return out;
}

}  // namespace

LinearData merge_linear(const LinearPlugin& p, const LinearData& a, const LinearData& b,
                        const JoinEdge& e, std::uint64_t out_id) {
  LinearData out;
  out.meta = merge_meta(p, a.meta, b.meta, e, out_id);
  out.values.assign(out.meta.flat(), identity_of(p.sense()));
  unify(p, out.values,
        sub_unify(p, a.meta, b.meta, out.meta, e, sparse(p, a.values, 0, a.meta.flat()),
                  sparse(p, b.values, 0, b.meta.flat())));
  return out;
}

LinearData compress_linear(const LinearPlugin& p, const std::vector<ExtVertex>& vertices,
                           std::uint64_t root, std::int64_t scale) {
  std::unordered_map<std::uint64_t, const ExtVertex*> local;
  for (const auto& v : vertices) local[v.index] = &v;
  std::unordered_map<std::uint64_t, LinearData> data;
  std::vector<std::pair<std::uint64_t, bool>> stack{{root, false}};
  while (!stack.empty()) {
    auto [vi, expanded] = stack.back();
    stack.pop_back();
    const ExtVertex& v = *local.at(vi);
    if (!expanded) {
      stack.push_back({vi, true});
      for (int j = 0; j < v.nchild; ++j)
        if (local.count(v.child[j])) stack.push_back({v.child[j], false});
      continue;
    }
    const std::uint32_t degree = (v.parent != kRoot ? 1u : 0u) + v.nchild;
    LinearData cur = singleton_data(p, vi, v.aux, degree);
    for (int j = 0; j < v.nchild; ++j) {
      auto it = local.find(v.child[j]);
      if (it == local.end()) continue;
      const ExtVertex& c = *it->second;
      JoinEdge e{vi, c.index, true, c.aux, int_weight(c, scale)};
      cur = merge_linear(p, cur, data.at(c.index), e, vi);
      data.erase(c.index);
    }
    cur.meta.id = vi;
    data[vi] = std::move(cur);
  }
  LinearData out = std::move(data.at(root));
  out.meta.id = root;
  return out;
}

Value linear_answer(const LinearPlugin& p, const LinearData& d, std::uint64_t target) {
  if (!d.meta.borders.empty()) throw Error(ErrorKind::InvalidArgument, "partition still has borders");
  Value best = identity_of(p.sense());
  for (std::uint64_t c = 0; c < d.meta.configs; ++c)
    if (target < d.meta.len && p.is_answer(static_cast<std::uint32_t>(c), target, target))
      best = pick(p.sense(), best, d.values[c * d.meta.len + target]);
  return best;
}

std::vector<std::uint64_t> even_chunks(std::uint64_t flat, std::uint32_t q) {
  std::vector<std::uint64_t> cuts(q + 1);
  for (std::uint32_t i = 0; i <= q; ++i) cuts[i] = flat * i / q;
  return cuts;
}

// ---------------------------------------------------------------------------
// Distributed merging.

namespace {

enum Tag : Word { kElem = 1, kCand = 2 };

std::uint32_t chunk_of(const std::vector<std::uint64_t>& cuts, std::uint64_t idx) {
  auto it = std::upper_bound(cuts.begin(), cuts.end(), idx);
  return static_cast<std::uint32_t>(it - cuts.begin() - 1);
}

}  // namespace

MergeEngine::MergeEngine(const LinearPlugin& plugin, Cluster& cluster, std::uint64_t seed,
                         std::uint64_t max_partition, std::uint64_t stride)
    : plugin_(plugin), cluster_(cluster), m_(cluster.machines()),
      q_(std::max<std::uint32_t>(1, static_cast<std::uint32_t>(std::floor(std::sqrt(cluster.machines()))))),
      stride_(std::max<std::uint64_t>(stride, 1)), domain_((max_partition + 1) * stride_),
      held_(cluster.machines()) {
  h_ = sample_hash(seed ^ 0x6d65726765ULL, default_hash_order(m_), domain_, m_);
}

std::uint32_t MergeEngine::holder(std::uint64_t partition, std::uint64_t idx) const {
  return h_.machine(partition * stride_ + idx);
}

std::uint64_t MergeEngine::resident(MachineId id) const { return 3 * held_[id].size(); }

void MergeEngine::put_element(Payload& out, std::uint64_t partition, std::uint64_t idx, Value v) {
  out.insert(out.end(), {kCand, partition, idx, to_word(v)});
}

void MergeEngine::absorb(Cluster::Context& ctx, std::uint64_t extra_resident) {
  auto& mine = held_[ctx.id()];
  const Sense sense = plugin_.sense();
  for (const auto& msg : ctx.inbox()) {
    const auto& p = msg.payload;
    if (p.empty() || (p[0] != kCand && p[0] != kElem)) continue;
    for (std::size_t i = 0; i < p.size();) {
      if (p[i] == kCand) {
        const auto key = std::make_pair(p[i + 1], p[i + 2]);
        const Value v = from_word(p[i + 3]);
        auto [it, fresh] = mine.try_emplace(key, v);
        if (!fresh) it->second = pick(sense, it->second, v);
        i += 4;
      } else {
        i += 5;  // element records belong to a combine round
      }
    }
  }
  ctx.set_resident(resident(ctx.id()) + extra_resident);
}

void MergeEngine::absorb_and_scatter(Cluster::Context& ctx, const std::vector<MergeTask>& tasks,
                                     std::uint64_t extra_resident) {
  absorb(ctx, extra_resident);
  auto& mine = held_[ctx.id()];
  std::unordered_map<std::uint64_t, std::pair<std::size_t, int>> role;
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    role[tasks[t].a.id] = {t, 0};
    role[tasks[t].b.id] = {t, 1};
  }
  Outbox out(m_);
  std::uint64_t sent = 0;
  for (auto it = mine.begin(); it != mine.end();) {
    auto r = role.find(it->first.first);
    if (r == role.end()) {
      ++it;
      continue;
    }
    const auto& task = tasks[r->second.first];
    const int side = r->second.second;
    const std::uint32_t c = chunk_of(side == 0 ? task.cuts_a : task.cuts_b, it->first.second);
    for (std::uint32_t j = 0; j < q_; ++j) {
      const MachineId to = side == 0 ? c * q_ + j : j * q_ + c;
      auto& b = out.to(to);
      b.insert(b.end(), {kElem, r->second.first, static_cast<Word>(side), it->first.second,
                         to_word(it->second)});
      sent += 5;
    }
    it = mine.erase(it);
  }
  ctx.set_resident(resident(ctx.id()) + extra_resident + sent);
  out.flush(ctx);
}

void MergeEngine::combine(Cluster::Context& ctx, const std::vector<MergeTask>& tasks,
                          std::uint64_t extra_resident) {
  std::vector<std::vector<std::pair<std::uint64_t, Value>>> chunk_a(tasks.size()), chunk_b(tasks.size());
  std::uint64_t staged = 0;
  for (const auto& msg : ctx.inbox()) {
    const auto& p = msg.payload;
    if (p.empty() || (p[0] != kCand && p[0] != kElem)) continue;
    for (std::size_t i = 0; i < p.size();) {
      if (p[i] != kElem) throw Error(ErrorKind::InvalidArgument, "unexpected record in combine round");
      auto& dst = p[i + 2] == 0 ? chunk_a[p[i + 1]] : chunk_b[p[i + 1]];
      dst.emplace_back(p[i + 3], from_word(p[i + 4]));
      staged += 2;
      i += 5;
    }
  }
  Outbox out(m_);
  std::uint64_t emitted = 0;
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    auto& ca = chunk_a[t];
    auto& cb = chunk_b[t];
    std::sort(ca.begin(), ca.end());
    std::sort(cb.begin(), cb.end());
    const auto& task = tasks[t];
    for (const auto& [idx, val] : sub_unify(plugin_, task.a, task.b, task.out, task.edge, ca, cb)) {
      auto& b = out.to(holder(task.out.id, idx));
      b.insert(b.end(), {kCand, task.out.id, idx, to_word(val)});
      emitted += 4;
    }
  }
  ctx.set_resident(resident(ctx.id()) + extra_resident + staged + emitted);
  out.flush(ctx);
}

LinearData distributed_merge(const LinearPlugin& p, const LinearData& a, const LinearData& b,
                             const JoinEdge& e, std::uint64_t out_id, Cluster& cluster,
                             std::uint64_t seed, const std::vector<std::uint64_t>& cuts_a,
                             const std::vector<std::uint64_t>& cuts_b) {
  const LinearMeta out_meta = merge_meta(p, a.meta, b.meta, e, out_id);
  const std::uint64_t stride = std::max({a.meta.flat(), b.meta.flat(), out_meta.flat()});
  const std::uint64_t max_id = std::max({a.meta.id, b.meta.id, out_id});
  MergeEngine engine(p, cluster, seed, max_id, stride);
  MergeTask task;
  task.a = a.meta;
  task.b = b.meta;
  task.out = out_meta;
  task.edge = e;
  task.cuts_a = cuts_a.empty() ? even_chunks(a.meta.flat(), engine.q()) : cuts_a;
  task.cuts_b = cuts_b.empty() ? even_chunks(b.meta.flat(), engine.q()) : cuts_b;
  if (task.cuts_a.size() != engine.q() + 1u || task.cuts_b.size() != engine.q() + 1u)
    throw Error(ErrorKind::InvalidArgument, "chunking must have q+1 boundaries");
  const Value idv = identity_of(p.sense());
  for (std::uint64_t i = 0; i < a.meta.flat(); ++i)
    if (a.values[i] != idv) engine.held()[engine.holder(a.meta.id, i)][{a.meta.id, i}] = a.values[i];
  for (std::uint64_t i = 0; i < b.meta.flat(); ++i)
    if (b.values[i] != idv) engine.held()[engine.holder(b.meta.id, i)][{b.meta.id, i}] = b.values[i];
  std::vector<MergeTask> tasks{task};
  cluster.round([&](Cluster::Context& ctx) { engine.absorb_and_scatter(ctx, tasks); });
  cluster.round([&](Cluster::Context& ctx) { engine.combine(ctx, tasks); });
  cluster.round([&](Cluster::Context& ctx) { engine.absorb(ctx); });
  LinearData out;
  out.meta = out_meta;
  out.values.assign(out_meta.flat(), idv);
  for (const auto& loc : engine.held())
    for (const auto& [key, val] : loc)
      if (key.first == out_id) out.values[key.second] = val;
  return out;
}

}  // namespace mpcdp
