#include "mpcdp/linear_problems.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <unordered_map>
#include <unordered_set>

namespace mpcdp {

// ---------------------------------------------------------------------------
// Plugins.

std::vector<LinearPlugin::Entry> BisectionPlugin::singleton(bool aux) const {
  return {{0, 0, 0, 0}, {1, 0, aux ? 0u : 1u, 0}};
}

std::optional<LinearPlugin::Joined> BisectionPlugin::join(std::uint32_t qx, std::uint32_t qy,
                                                          std::uint32_t, std::uint32_t,
                                                          const JoinEdge& e) const {
  if (qx == qy) return Joined{0, 0};
  // Auxiliary vertices share the colour of their parent.
  if (e.child_aux) return std::nullopt;
  return Joined{e.child_weight, 0};
}

bool BisectionPlugin::is_answer(std::uint32_t, std::uint64_t count, std::uint64_t target) const {
  return count == target;
}

std::vector<LinearPlugin::Entry> KSpanningPlugin::singleton(bool aux) const {
  return {{0, 0, 0, 0}, {1, 1, aux ? 0u : 1u, 0}};
}

std::optional<LinearPlugin::Joined> KSpanningPlugin::join(std::uint32_t qx, std::uint32_t qy,
                                                          std::uint32_t ea, std::uint32_t eb,
                                                          const JoinEdge& e) const {
  if (ea && eb && !(qx && qy)) return std::nullopt;
  const std::uint32_t qp = e.x_is_parent ? qx : qy;
  const std::uint32_t qc = e.x_is_parent ? qy : qx;
  // The top of the chosen subtree must be an original vertex; an auxiliary
  // top would join siblings that are not adjacent in the input.
  if (qc && !qp && e.child_aux) return std::nullopt;
  return Joined{(qx && qy) ? e.child_weight : 0, ea | eb};
}

bool KSpanningPlugin::is_answer(std::uint32_t extra, std::uint64_t count, std::uint64_t target) const {
  return extra == 1 && count == target;
}

// ---------------------------------------------------------------------------
// Partitioning.

CutTree CutTree::from_parents(const std::vector<std::int64_t>& parent,
                              std::vector<std::pair<std::uint64_t, std::uint64_t>> link) {
  CutTree t;
  t.parent = parent;
  t.children.assign(parent.size(), {});
  bool rooted = false;
  for (std::uint32_t v = 0; v < parent.size(); ++v) {
    if (parent[v] < 0) {
      if (rooted) throw Error(ErrorKind::MultipleRoots, "cut tree has two roots");
      rooted = true;
      t.root = v;
    } else {
      t.children[static_cast<std::size_t>(parent[v])].push_back(v);
    }
  }
  if (!rooted && !parent.empty()) throw Error(ErrorKind::CycleDetected, "cut tree has no root");
  if (link.empty()) {
    // One T^b vertex per node: the vertex ids are the node ids.
    link.assign(parent.size(), {0, 0});
    for (std::uint32_t v = 0; v < parent.size(); ++v)
      if (parent[v] >= 0) link[v] = {static_cast<std::uint64_t>(parent[v]), v};
  }
  t.link = std::move(link);
  return t;
}

namespace {

// Membership mask plus the top node of a connected node set.
struct NodeSet {
  std::vector<char> in;
  std::uint32_t top = 0;
};

NodeSet node_set(const CutTree& t, const std::vector<std::uint32_t>& nodes) {
  NodeSet s;
  s.in.assign(t.size(), 0);
  for (auto v : nodes) s.in[v] = 1;
  bool found = false;
  for (auto v : nodes)
    if (t.parent[v] < 0 || !s.in[static_cast<std::size_t>(t.parent[v])]) {
      if (found) throw Error(ErrorKind::InvalidArgument, "node set is not connected");
      s.top = v;
      found = true;
    }
  if (!found) throw Error(ErrorKind::InvalidArgument, "empty node set");
  return s;
}

std::vector<std::uint32_t> inner_children(const CutTree& t, const NodeSet& s, std::uint32_t v) {
  std::vector<std::uint32_t> out;
  for (auto c : t.children[v])
    if (s.in[c]) out.push_back(c);
  return out;
}

// Post-order of the set from its top.
std::vector<std::uint32_t> post_order(const CutTree& t, const NodeSet& s) {
  std::vector<std::uint32_t> order, stack{s.top};
  while (!stack.empty()) {
    const auto v = stack.back();
    stack.pop_back();
    order.push_back(v);
    for (auto c : inner_children(t, s, v)) stack.push_back(c);
  }
  std::reverse(order.begin(), order.end());
  return order;
}

// Nodes of the subtree of `lower` inside the set, and the rest.
std::pair<std::vector<std::uint32_t>, std::vector<std::uint32_t>> split_at(
    const CutTree& t, const std::vector<std::uint32_t>& nodes, std::uint32_t lower) {
  const auto s = node_set(t, nodes);
  std::vector<char> below(t.size(), 0);
  std::vector<std::uint32_t> stack{lower};
  while (!stack.empty()) {
    const auto v = stack.back();
    stack.pop_back();
    below[v] = 1;
    for (auto c : inner_children(t, s, v)) stack.push_back(c);
  }
  std::pair<std::vector<std::uint32_t>, std::vector<std::uint32_t>> out;
  for (auto v : nodes) (below[v] ? out.first : out.second).push_back(v);
  return out;
}

// Border vertices that sit in node v.
std::vector<std::uint64_t> borders_at(const CutTree& t, const NodeSet& s, std::uint32_t v) {
  std::vector<std::uint64_t> b;
  if (t.parent[v] >= 0 && !s.in[static_cast<std::size_t>(t.parent[v])]) b.push_back(t.link[v].second);
  for (auto c : t.children[v])
    if (!s.in[c]) b.push_back(t.link[c].first);
  std::sort(b.begin(), b.end());
  b.erase(std::unique(b.begin(), b.end()), b.end());
  return b;
}

}  // namespace

std::vector<std::uint64_t> partition_borders(const CutTree& t, const std::vector<std::uint32_t>& nodes) {
  const auto s = node_set(t, nodes);
  std::vector<std::uint64_t> out;
  for (auto v : nodes) {
    const auto b = borders_at(t, s, v);
    out.insert(out.end(), b.begin(), b.end());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

CutEdge first_cut(const CutTree& t, const std::vector<std::uint32_t>& nodes) {
  if (nodes.size() < 2) throw Error(ErrorKind::InvalidArgument, "first cut needs two nodes");
  const auto s = node_set(t, nodes);
  std::vector<std::uint64_t> d(t.size(), 0);
  for (auto v : post_order(t, s)) {
    d[v] = 1;
    for (auto c : inner_children(t, s, v)) d[v] += d[c];
  }
  const std::uint64_t n = nodes.size();
  std::uint32_t v = s.top;
  while (true) {
    const auto kids = inner_children(t, s, v);
    std::uint32_t c = kids.front();
    for (auto k : kids)
      if (d[k] > d[c] || (d[k] == d[c] && k < c)) c = k;
    if (3 * d[c] > 2 * n) {
      v = c;
      continue;
    }
    return {v, c};
  }
}

CutEdge second_cut(const CutTree& t, const std::vector<std::uint32_t>& nodes) {
  if (nodes.size() < 2) throw Error(ErrorKind::InvalidArgument, "second cut needs two nodes");
  const auto s = node_set(t, nodes);
  std::vector<std::uint64_t> b(t.size(), 0);
  for (auto v : post_order(t, s)) {
    b[v] = borders_at(t, s, v).size();
    for (auto c : inner_children(t, s, v)) b[v] += b[c];
  }
  auto worst_side = [&](const CutEdge& e) {
    auto [lo, up] = split_at(t, nodes, e.lower);
    return std::max(partition_borders(t, lo).size(), partition_borders(t, up).size());
  };
  std::uint32_t v = s.top;
  CutEdge guess{};
  while (true) {
    const auto kids = inner_children(t, s, v);
    if (kids.empty()) break;
    std::uint32_t c = kids.front();
    for (auto k : kids)
      if (b[k] > b[c] || (b[k] == b[c] && k < c)) c = k;
    guess = {v, c};
    if (b[c] > 2) {
      v = c;
      continue;
    }
    break;
  }
  if (guess.lower != guess.upper && worst_side(guess) <= 3) return guess;
  // Scan every edge; keep the one with the fewest borders on its worse side.
  CutEdge best{};
  std::size_t best_worst = ~std::size_t{0};
  for (auto u : nodes)
    for (auto c : inner_children(t, s, u)) {
      const auto w = worst_side({u, c});
      if (w < best_worst) {
        best_worst = w;
        best = {u, c};
      }
    }
  return best;
}

MergeSchedule build_merge_schedule(const CutTree& t) {
  MergeSchedule out;
  if (t.size() == 0) return out;
  struct Job {
    std::vector<std::uint32_t> nodes;
    std::uint32_t depth;
  };
  std::vector<std::uint32_t> all(t.size());
  std::iota(all.begin(), all.end(), 0u);
  std::vector<Job> jobs{{all, 1}};
  auto note = [&](const std::vector<std::uint32_t>& part) {
    const auto nb = partition_borders(t, part).size();
    out.max_borders = std::max(out.max_borders, nb);
    return nb;
  };
  while (!jobs.empty()) {
    Job job = std::move(jobs.back());
    jobs.pop_back();
    note(job.nodes);
    if (job.nodes.size() < 2) continue;
    out.depth = std::max(out.depth, job.depth);
    const auto e1 = first_cut(t, job.nodes);
    out.edges.push_back({e1, job.depth, false});
    auto [lower, upper] = split_at(t, job.nodes, e1.lower);
    out.first_splits.emplace_back(lower.size(), job.nodes.size());
    for (auto* side : {&lower, &upper}) {
      if (side->size() >= 2 && partition_borders(t, *side).size() > 3) {
        const auto e2 = second_cut(t, *side);
        out.edges.push_back({e2, job.depth, true});
        auto [a, b] = split_at(t, *side, e2.lower);
        for (auto* piece : {&a, &b}) {
          if (partition_borders(t, *piece).size() > 3) ++out.four_border_parts;
          jobs.push_back({std::move(*piece), job.depth + 1});
        }
        // A fallback was needed when the best edge still leaves 4 borders.
      } else {
        jobs.push_back({std::move(*side), job.depth + 1});
      }
    }
  }
  out.second_cut_fallbacks = out.four_border_parts;
  out.steps.assign(2 * out.depth, {});
  for (const auto& se : out.edges) {
    const std::uint32_t i = out.depth - se.depth + 1;  // deepest level first
    out.steps[se.second ? 2 * i - 2 : 2 * i - 1].push_back(se.edge);
  }
  return out;
}

bool replay_schedule(const CutTree& t, const MergeSchedule& s, std::string* why) {
  auto fail = [&](const std::string& m) {
    if (why) *why = m;
    return false;
  };
  std::vector<std::uint32_t> uf(t.size());
  std::iota(uf.begin(), uf.end(), 0u);
  auto find = [&](std::uint32_t x) {
    while (uf[x] != x) x = uf[x] = uf[uf[x]];
    return x;
  };
  std::size_t merged = 0;
  for (std::size_t r = 0; r < s.steps.size(); ++r) {
    std::set<std::uint32_t> touched;
    for (const auto& e : s.steps[r]) {
      if (t.parent[e.lower] != static_cast<std::int64_t>(e.upper))
        return fail("step " + std::to_string(r + 1) + " edge is not a tree edge");
      const auto a = find(e.upper), b = find(e.lower);
      if (a == b) return fail("step " + std::to_string(r + 1) + " merges a partition with itself");
      if (!touched.insert(a).second || !touched.insert(b).second)
        return fail("step " + std::to_string(r + 1) + " uses a partition twice");
      uf[b] = a;
      ++merged;
    }
  }
  if (t.size() > 0 && merged != t.size() - 1) return fail("replay leaves more than one partition");
  return true;
}

// ---------------------------------------------------------------------------
// Distributed solver.

namespace {

constexpr Word kMetaTag = 0x4d455441;  // all-gathered component metadata
constexpr std::size_t kMaxBorders = 6;

struct CompMeta {
  std::uint64_t id = 0;
  std::uint64_t parent = kRoot;
  std::uint64_t upper_vertex = kRoot;  // parent of the root vertex
  bool root_aux = false;
  Value root_weight = 0;
  LinearMeta meta;

  std::size_t words() const { return 8 + 3 * meta.borders.size(); }
};

}  // namespace

LinearReport solve_linear(const LinearPlugin& plugin, const Tree& t, Cluster& cluster,
                          std::uint64_t seed, std::uint64_t target) {
  LinearReport rep;
  rep.n = t.size();
  const auto iw = integer_weights(t);
  rep.scale = iw.scale;
  const std::uint32_t m = cluster.machines();
  const auto start = cluster.rounds();
  const Value idv = identity_of(plugin.sense());

  const std::uint64_t delta = (t.size() + m - 1) / m;
  ExtensionPipeline pipe(t, cluster, seed, delta);
  pipe.run_bounding(true);
  pipe.run_gadgets();
  rep.tb_size = pipe.tb_size();
  rep.extension_rounds = cluster.rounds() - start;

  Decomposer dec(cluster, pipe.hash(), rep.tb_size, seed);
  const auto d = dec.run([&](Cluster::Context& ctx) { return pipe.assemble(ctx); });
  rep.decomposition_rounds = d.rounds;
  rep.components = d.components.size();
  auto& live = dec.live();

  const std::uint64_t originals = t.original_count();
  const std::uint64_t stride = config_count(plugin, kMaxBorders) * (originals + 1);
  MergeEngine engine(plugin, cluster, seed, pipe.domain(), stride);

  // Compress each component, place its elements and all-gather metadata.
  std::vector<CompMeta> metas;
  const auto merge_start = cluster.rounds();
  cluster.round([&](Cluster::Context& ctx) {
    const auto id = ctx.id();
    Outbox out(m);
    Payload meta_words{kMetaTag};
    std::uint64_t words = 0;
    for (const auto& [cid, c] : live[id]) {
      words += c.vertices.size() * ExtVertex::kWords;
      const auto data = compress_linear(plugin, c.vertices, cid, rep.scale);
      CompMeta cm;
      cm.id = cid;
      cm.parent = c.parent;
      cm.meta = data.meta;
      for (const auto& v : c.vertices)
        if (v.index == cid) {
          cm.upper_vertex = v.parent;
          cm.root_aux = v.aux;
          cm.root_weight = int_weight(v, rep.scale);
        }
      meta_words.insert(meta_words.end(), {cm.id, cm.parent, cm.upper_vertex, Word{cm.root_aux},
                                           static_cast<Word>(cm.root_weight), cm.meta.configs,
                                           cm.meta.len, cm.meta.borders.size()});
      for (const auto& b : cm.meta.borders) meta_words.insert(meta_words.end(), {b.vertex, Word{b.aux}, b.outside});
      metas.push_back(std::move(cm));
      for (std::uint64_t i = 0; i < data.values.size(); ++i)
        if (data.values[i] != idv) {
          MergeEngine::put_element(out.to(engine.holder(cid, i)), cid, i, data.values[i]);
          words += 4;
        }
    }
    ctx.set_resident(words + meta_words.size());
    out.flush(ctx);
    if (meta_words.size() > 1) ctx.broadcast(meta_words);
  });

  // Every machine now holds the same metadata and derives the schedule.
  std::sort(metas.begin(), metas.end(), [](const CompMeta& a, const CompMeta& b) { return a.id < b.id; });
  std::uint64_t meta_words = 0;
  std::unordered_map<std::uint64_t, std::uint32_t> node_of;
  for (std::uint32_t i = 0; i < metas.size(); ++i) {
    node_of[metas[i].id] = i;
    meta_words += metas[i].words();
  }
  std::vector<std::int64_t> parent(metas.size(), -1);
  std::vector<std::pair<std::uint64_t, std::uint64_t>> link(metas.size(), {0, 0});
  for (std::uint32_t i = 0; i < metas.size(); ++i) {
    if (metas[i].parent == kRoot) continue;
    parent[i] = node_of.at(metas[i].parent);
    link[i] = {metas[i].upper_vertex, metas[i].id};
  }
  const CutTree ct = CutTree::from_parents(parent, link);
  rep.schedule = build_merge_schedule(ct);
  rep.schedule_depth = rep.schedule.depth;
  rep.max_borders = rep.schedule.max_borders;
  const std::uint64_t extra = meta_words + 3 * rep.schedule.edges.size();

  // Host-side bookkeeping of partition metadata (each machine could replay it).
  std::vector<std::uint32_t> uf(metas.size());
  std::iota(uf.begin(), uf.end(), 0u);
  std::vector<LinearMeta> pmeta;
  for (const auto& cm : metas) pmeta.push_back(cm.meta);
  auto find = [&](std::uint32_t x) {
    while (uf[x] != x) x = uf[x] = uf[uf[x]];
    return x;
  };
  for (const auto& step : rep.schedule.steps) {
    if (step.empty()) continue;
    std::vector<MergeTask> tasks;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> unions;
    for (const auto& e : step) {
      const auto a = find(e.upper), b = find(e.lower);
      const auto& child = metas[e.lower];
      MergeTask task;
      task.a = pmeta[a];
      task.b = pmeta[b];
      task.edge = JoinEdge{child.upper_vertex, child.id, true, child.root_aux, child.root_weight};
      task.out = merge_meta(plugin, task.a, task.b, task.edge, task.a.id);
      if (task.out.borders.size() > kMaxBorders)
        throw Error(ErrorKind::SizeBoundViolated, "partition with " + std::to_string(task.out.borders.size()) + " borders");
      task.cuts_a = even_chunks(task.a.flat(), engine.q());
      task.cuts_b = even_chunks(task.b.flat(), engine.q());
      tasks.push_back(std::move(task));
      unions.emplace_back(a, b);
    }
    cluster.round([&](Cluster::Context& ctx) { engine.absorb_and_scatter(ctx, tasks, extra); });
    cluster.round([&](Cluster::Context& ctx) { engine.combine(ctx, tasks, extra); });
    for (std::size_t i = 0; i < unions.size(); ++i) {
      uf[unions[i].second] = unions[i].first;
      pmeta[unions[i].first] = tasks[i].out;
    }
  }
  const LinearMeta root_meta = metas.empty() ? LinearMeta{} : pmeta[find(0)];
  if (!root_meta.borders.empty()) throw Error(ErrorKind::InvalidArgument, "final partition has borders");

  // Holders report answer entries; machine 0 picks.
  cluster.round([&](Cluster::Context& ctx) {
    engine.absorb(ctx, extra);
    Payload cand;
    for (const auto& [key, val] : engine.held()[ctx.id()]) {
      if (key.first != root_meta.id) continue;
      const auto cfg = static_cast<std::uint32_t>(key.second / root_meta.len);
      const auto count = key.second % root_meta.len;
      if (plugin.is_answer(cfg, count, target)) cand.push_back(static_cast<Word>(val));
    }
    if (!cand.empty()) ctx.send(0, std::move(cand));
  });
  Value answer = idv;
  cluster.round([&](Cluster::Context& ctx) {
    ctx.set_resident(engine.resident(ctx.id()) + extra + (ctx.id() == 0 ? ctx.inbox().size() * 2 : 0));
    if (ctx.id() != 0) return;
    for (const auto& msg : ctx.inbox())
      for (auto w : msg.payload) answer = pick(plugin.sense(), answer, static_cast<Value>(w));
  });
  rep.answer = answer;
  rep.merge_rounds = cluster.rounds() - merge_start;
  rep.rounds = cluster.rounds() - start;
  for (std::uint64_t r = start; r < cluster.rounds(); ++r)
    rep.max_resident = std::max(rep.max_resident, cluster.metrics()[r].max_resident_words);
  return rep;
}

LinearReport solve_bisection(const Tree& t, Cluster& cluster, std::uint64_t seed) {
  return solve_linear(BisectionPlugin{}, t, cluster, seed, t.original_count() / 2);
}

LinearReport solve_kspanning(const Tree& t, std::uint64_t k, Cluster& cluster, std::uint64_t seed) {
  if (k == 0) throw Error(ErrorKind::InvalidArgument, "k must be positive");
  if (k > t.original_count())
    throw Error(ErrorKind::InfeasibleK, "k=" + std::to_string(k) + " exceeds n=" + std::to_string(t.original_count()));
  return solve_linear(KSpanningPlugin{}, t, cluster, seed, k);
}

Value solve_linear_sequential(const LinearPlugin& plugin, const Tree& t, std::uint64_t target) {
  const auto ext = binary_extension_sequential(t);
  const auto data = compress_linear(plugin, ext_vertices(ext.tb), ext.tb.root(), integer_weights(t).scale);
  return linear_answer(plugin, data, target);
}

// ---------------------------------------------------------------------------
// k-median / k-center.

namespace {

Value mul_sat(Value a, Value x) {
  if (a == 0) return 0;
  if (is_inf(x)) return x;
  Value r;
  if (__builtin_mul_overflow(a, x, &r)) return kPosInf;
  return r;
}

Value line_at(const Piece& l, Value x) { return sat_add(mul_sat(l.a, x), l.b); }

// Lower envelope of lines on x >= 0, slopes strictly decreasing.
std::vector<Piece> lower_envelope(std::vector<Piece> lines) {
  std::sort(lines.begin(), lines.end(), [](const Piece& l, const Piece& r) {
    return l.a != r.a ? l.a > r.a : l.b < r.b;
  });
  std::vector<Piece> hull;
  auto useless = [](const Piece& l1, const Piece& l2, const Piece& l3) {
    // l2 never strictly below both neighbours: x12 >= x23.
    const __int128 lhs = static_cast<__int128>(l2.b - l1.b) * (l2.a - l3.a);
    const __int128 rhs = static_cast<__int128>(l3.b - l2.b) * (l1.a - l2.a);
    return lhs >= rhs;
  };
  for (const auto& l : lines) {
    if (!hull.empty() && hull.back().a == l.a) continue;
    // Higher slope with no better intercept never wins on x >= 0.
    while (!hull.empty() && hull.back().b >= l.b) hull.pop_back();
    while (hull.size() >= 2 && useless(hull[hull.size() - 2], hull.back(), l)) hull.pop_back();
    hull.push_back(l);
  }
  return hull;
}

// Pareto set of (a, b) for max(x + a, b): a ascending, b strictly descending.
std::vector<Piece> pareto(std::vector<Piece> ps) {
  std::sort(ps.begin(), ps.end(), [](const Piece& l, const Piece& r) {
    return l.a != r.a ? l.a < r.a : l.b < r.b;
  });
  std::vector<Piece> out;
  for (const auto& p : ps)
    if (out.empty() || p.b < out.back().b) {
      if (!out.empty() && out.back().a == p.a) continue;
      out.push_back(p);
    }
  return out;
}

}  // namespace

Value NodeFunctions::eval_G(std::size_t p, Value x) const {
  if (x < 0) return kPosInf;
  if (dist.empty()) return kPosInf;
  const auto& g = G[p];
  if (x == kPosInf) return g.back();
  auto it = std::upper_bound(dist.begin(), dist.end(), x);
  if (it == dist.begin()) return kPosInf;
  return g[static_cast<std::size_t>(it - dist.begin()) - 1];
}

Value NodeFunctions::eval_F(std::size_t p, Value x) const {
  const auto& f = F[p];
  if (f.empty()) return kPosInf;
  if (!center) {
    if (x == kPosInf) return f.back().a == 0 ? f.back().b : kPosInf;
    // Optimal index grows with x.
    std::size_t lo = 0, hi = f.size() - 1;
    while (lo < hi) {
      const std::size_t mid = (lo + hi) / 2;
      if (line_at(f[mid], x) <= line_at(f[mid + 1], x)) hi = mid;
      else lo = mid + 1;
    }
    return line_at(f[lo], x);
  }
  if (x == kPosInf) return f.front().a == kNegInf ? f.front().b : kPosInf;
  auto val = [&](std::size_t j) { return std::max(sat_add(x, f[j].a), f[j].b); };
  std::size_t lo = 0, hi = f.size();
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (sat_add(x, f[mid].a) >= f[mid].b) hi = mid;
    else lo = mid + 1;
  }
  if (lo == f.size()) return f.back().b;
  Value best = val(lo);
  if (lo > 0) best = std::min(best, val(lo - 1));
  return best;
}

KClusterResult kcluster_dp(const Tree& t, std::uint64_t k, bool center, const NodeVisitor& visit) {
  if (k == 0) throw Error(ErrorKind::InvalidArgument, "k must be positive");
  const auto ext = binary_extension_sequential(t);
  const auto verts = ext_vertices(ext.tb);
  const std::int64_t scale = integer_weights(t).scale;
  std::unordered_map<std::uint64_t, const ExtVertex*> by_index;
  for (const auto& v : verts) by_index[v.index] = &v;
  const std::size_t K = k;

  NodeFunctions empty;
  empty.center = center;
  empty.G.assign(K + 1, {});
  empty.F.assign(K + 1, {center ? Piece{kNegInf, 0} : Piece{0, 0}});

  auto comb = [&](Value a, Value b) { return center ? std::max(a, b) : sat_add(a, b); };

  std::unordered_map<std::uint64_t, NodeFunctions> fn;
  std::vector<std::pair<std::uint64_t, bool>> stack{{ext.tb.root(), false}};
  while (!stack.empty()) {
    auto [vi, expanded] = stack.back();
    stack.pop_back();
    const ExtVertex& v = *by_index.at(vi);
    if (!expanded) {
      stack.push_back({vi, true});
      for (int j = 0; j < v.nchild; ++j) stack.push_back({v.child[j], false});
      continue;
    }
    NodeFunctions out;
    out.center = center;
    out.G.assign(K + 1, {});
    out.F.assign(K + 1, {});
    const bool orig = !v.aux;
    const Value cv = orig ? 1 : 0;
    const NodeFunctions* ch[2] = {&empty, &empty};
    Value xs[2] = {0, 0};
    for (int j = 0; j < v.nchild; ++j) {
      ch[j] = &fn.at(v.child[j]);
      xs[j] = int_weight(*by_index.at(v.child[j]), scale);
    }
    // Distances to every descendant with the side they come from.
    std::vector<std::pair<Value, int>> ds{{0, -1}};
    for (int j = 0; j < 2; ++j)
      for (auto dd : ch[j]->dist) ds.emplace_back(dd + xs[j], j);
    std::stable_sort(ds.begin(), ds.end(), [](const auto& l, const auto& r) { return l.first < r.first; });
    for (const auto& e : ds) out.dist.push_back(e.first);

    for (std::size_t p = 0; p <= K; ++p) {
      auto& g = out.G[p];
      g.reserve(ds.size());
      Value cur = kPosInf;
      if (orig && p >= 1)
        for (std::size_t i = 0; i + 1 <= p; ++i)
          cur = std::min(cur, comb(ch[0]->eval_F(i, xs[0]), ch[1]->eval_F(p - 1 - i, xs[1])));
      g.push_back(cur);
      for (std::size_t mi = 1; mi < ds.size(); ++mi) {
        const Value xm = ds[mi].first;
        const int side = ds[mi].second;
        const NodeFunctions& near = *ch[side];
        const NodeFunctions& far = *ch[1 - side];
        const Value own = center ? (orig ? xm : 0) : mul_sat(cv, xm);
        for (std::size_t i = 0; i <= p; ++i) {
          const Value gi = near.eval_G(i, xm - xs[side]);
          if (gi == kPosInf) continue;
          cur = std::min(cur, comb(comb(own, gi), far.eval_F(p - i, sat_add(xm, xs[1 - side]))));
        }
        g.push_back(cur);
      }
      // F: constant G(inf) plus every pairing of the children's pieces.
      std::vector<Piece> pieces;
      const Value ginf = g.back();
      if (ginf != kPosInf) pieces.push_back(center ? Piece{kNegInf, ginf} : Piece{0, ginf});
      for (std::size_t i = 0; i <= p; ++i)
        for (const auto& pa : ch[0]->F[i])
          for (const auto& pb : ch[1]->F[p - i]) {
            if (center) {
              const Value dd = std::max({orig ? Value{0} : kNegInf, sat_add(pa.a, xs[0]), sat_add(pb.a, xs[1])});
              pieces.push_back({dd, std::max(pa.b, pb.b)});
            } else {
              pieces.push_back({cv + pa.a + pb.a,
                                sat_add(sat_add(pa.b, mul_sat(pa.a, xs[0])), sat_add(pb.b, mul_sat(pb.a, xs[1])))});
            }
          }
      out.F[p] = center ? pareto(std::move(pieces)) : lower_envelope(std::move(pieces));
    }
    // Leaves follow the same rules with two empty children, except that an
    // original leaf with p > 0 opens a median at itself (covered by G(0)).
    for (int j = 0; j < v.nchild; ++j)
      if (!visit) fn.erase(v.child[j]);
    if (visit) visit(vi, out);
    fn.emplace(vi, std::move(out));
  }
  const auto& root = fn.at(ext.tb.root());
  KClusterResult res;
  res.scale = scale;
  res.value = root.eval_G(K, kPosInf);
  res.f_at_infinity = root.eval_F(K, kPosInf);
  return res;
}

Value solve_kmedian(const Tree& t, std::uint64_t k) { return kcluster_dp(t, k, false).value; }
Value solve_kcenter(const Tree& t, std::uint64_t k) { return kcluster_dp(t, k, true).value; }

}  // namespace mpcdp
