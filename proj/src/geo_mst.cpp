#include "mpcdp/geo_mst.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "mpcdp/khash.hpp"

namespace mpcdp {

Metric parse_metric(const std::string& name) {
  if (name == "euclidean") return Metric::Euclidean;
  if (name == "manhattan") return Metric::Manhattan;
  if (name == "chebyshev") return Metric::Chebyshev;
  throw Error(ErrorKind::InvalidArgument, "unknown metric '" + name + "'");
}

std::string metric_name(Metric m) {
  switch (m) {
    case Metric::Euclidean: return "euclidean";
    case Metric::Manhattan: return "manhattan";
    case Metric::Chebyshev: return "chebyshev";
  }
  return "?";
}

Value distance_key(const PointSet& ps, std::size_t a, std::size_t b, Metric metric) {
  const auto& p = ps.points[a];
  const auto& q = ps.points[b];
  Value acc = 0;
  for (std::size_t i = 0; i < ps.dim; ++i) {
    const Value d = p[i] > q[i] ? p[i] - q[i] : q[i] - p[i];
    switch (metric) {
      case Metric::Euclidean: acc = sat_add(acc, d * d); break;
      case Metric::Manhattan: acc = sat_add(acc, d); break;
      case Metric::Chebyshev: acc = std::max(acc, d); break;
    }
  }
  return acc;
}

double key_length(Value key, Metric metric) {
  return metric == Metric::Euclidean ? std::sqrt(static_cast<double>(key)) : static_cast<double>(key);
}

namespace {

std::uint64_t parse_u(const std::string& tok, const char* what) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorKind::ParseError, std::string("bad ") + what + " '" + tok + "'");
  }
}

std::int64_t parse_i(const std::string& tok, const char* what) {
  try {
    std::size_t used = 0;
    const auto v = std::stoll(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorKind::ParseError, std::string("bad ") + what + " '" + tok + "'");
  }
}

}  // namespace

PointSet parse_points(const std::string& text) {
  std::istringstream in(text);
  std::string a, b;
  if (!(in >> a >> b)) throw Error(ErrorKind::ParseError, "missing 'n d' header");
  PointSet ps;
  const auto n = parse_u(a, "point count");
  ps.dim = parse_u(b, "dimension");
  ps.points.assign(n, std::vector<std::int64_t>(ps.dim));
  for (std::uint64_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < ps.dim; ++j) {
      std::string tok;
      if (!(in >> tok)) throw Error(ErrorKind::ParseError, "expected " + std::to_string(n) + " points");
      ps.points[i][j] = parse_i(tok, "coordinate");
    }
  std::string extra;
  if (in >> extra) throw Error(ErrorKind::ParseError, "trailing token '" + extra + "'");
  return ps;
}

std::string emit_points(const PointSet& ps) {
  std::ostringstream out;
  out << ps.size() << ' ' << ps.dim << '\n';
  for (const auto& p : ps.points) {
    for (std::size_t j = 0; j < p.size(); ++j) out << (j ? " " : "") << p[j];
    out << '\n';
  }
  return out.str();
}

PointSet gen_points(std::size_t n, std::size_t dim, std::uint64_t seed, std::int64_t range) {
  auto rng = make_rng({seed, 0x706f696e7473ULL});
  std::uniform_int_distribution<std::int64_t> coord(0, range - 1);
  PointSet ps;
  ps.dim = dim;
  ps.points.assign(n, std::vector<std::int64_t>(dim));
  for (auto& p : ps.points)
    for (auto& c : p) c = coord(rng);
  return ps;
}

Graph parse_graph(const std::string& text) {
  std::istringstream in(text);
  std::string a, b;
  if (!(in >> a >> b)) throw Error(ErrorKind::ParseError, "missing 'n m' header");
  Graph g;
  g.n = parse_u(a, "vertex count");
  const auto m = parse_u(b, "edge count");
  g.edges.reserve(m);
  for (std::uint64_t i = 0; i < m; ++i) {
    std::string u, v, w;
    if (!(in >> u >> v >> w)) throw Error(ErrorKind::ParseError, "expected " + std::to_string(m) + " edges");
    Edge e{parse_u(u, "vertex"), parse_u(v, "vertex"), parse_i(w, "weight"), i};
    if (e.u >= g.n || e.v >= g.n) throw Error(ErrorKind::ParseError, "edge endpoint out of range");
    g.edges.push_back(e);
  }
  std::string extra;
  if (in >> extra) throw Error(ErrorKind::ParseError, "trailing token '" + extra + "'");
  return g;
}

std::string emit_graph(const Graph& g) {
  std::ostringstream out;
  out << g.n << ' ' << g.edges.size() << '\n';
  for (const auto& e : g.edges) out << e.u << ' ' << e.v << ' ' << e.weight << '\n';
  return out.str();
}

Graph gen_sparse_graph(std::uint64_t n, std::uint64_t edges, std::uint64_t seed, Value max_weight) {
  auto rng = make_rng({seed, 0x6772617068ULL});
  std::uniform_int_distribution<Value> wd(1, max_weight);
  Graph g;
  g.n = n;
  if (n < 2) return g;
  // A random spanning tree keeps the graph connected; the rest is uniform.
  for (std::uint64_t v = 1; v < n && g.edges.size() < edges; ++v) {
    std::uniform_int_distribution<std::uint64_t> pd(0, v - 1);
    g.edges.push_back({pd(rng), v, wd(rng), g.edges.size()});
  }
  std::uniform_int_distribution<std::uint64_t> vd(0, n - 1);
  while (g.edges.size() < edges) {
    const auto u = vd(rng), v = vd(rng);
    if (u == v) continue;
    g.edges.push_back({u, v, wd(rng), g.edges.size()});
  }
  return g;
}

std::uint32_t group_of(std::uint64_t seed, std::uint64_t index, std::uint32_t groups) {
  auto rng = make_rng({seed, index, 0x67726f7570ULL});
  return static_cast<std::uint32_t>(rng() % groups);
}

std::uint32_t pair_groups(std::uint32_t machines) {
  return std::max<std::uint32_t>(1, static_cast<std::uint32_t>(std::floor(std::sqrt(machines))));
}

namespace {

enum Tag : Word { kPoint = 1, kLocalMin = 2, kEdgeRec = 3, kCand = 4, kQuery = 5, kReply = 6, kBit = 7, kLabel = 8 };

MachineId pair_machine(std::uint32_t a, std::uint32_t b, std::uint32_t k) {
  if (a > b) std::swap(a, b);
  return a * k + b;
}

// Points start in index blocks; round 1 ships each point to every
// group-pair machine containing its group.
void scatter_points(const PointSet& ps, Cluster& cluster, std::uint64_t seed, std::uint32_t k) {
  const auto m = cluster.machines();
  const std::size_t n = ps.size();
  cluster.round([&](Cluster::Context& ctx) {
    const auto id = ctx.id();
    const std::size_t lo = id * n / m, hi = (id + 1) * n / m;
    Outbox out(m);
    for (std::size_t i = lo; i < hi; ++i) {
      const auto g = group_of(seed, i, k);
      for (std::uint32_t j = 0; j < k; ++j) {
        auto& b = out.to(pair_machine(g, j, k));
        b.push_back(kPoint);
        b.push_back(i);
        b.insert(b.end(), ps.points[i].begin(), ps.points[i].end());
      }
    }
    ctx.set_resident((hi - lo) * (ps.dim + 1));
    out.flush(ctx);
  });
}

// Reads point records from an inbox (the payload carries the coordinates,
// the index is enough to address `ps` locally).
std::vector<std::uint64_t> inbox_points(const Inbox& inbox, std::size_t dim) {
  std::vector<std::uint64_t> idx;
  for (const auto& msg : inbox) {
    const auto& p = msg.payload;
    for (std::size_t i = 0; i < p.size(); i += 2 + dim)
      if (p[i] == kPoint) idx.push_back(p[i + 1]);
  }
  std::sort(idx.begin(), idx.end());
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  return idx;
}

}  // namespace

ClosestPair closest_pair(const PointSet& ps, Metric metric, Cluster& cluster, std::uint64_t seed) {
  if (ps.size() < 2) throw Error(ErrorKind::InvalidArgument, "closest pair needs two points");
  const auto start = cluster.rounds();
  const auto k = pair_groups(cluster.machines());
  scatter_points(ps, cluster, seed, k);
  cluster.round([&](Cluster::Context& ctx) {
    const auto idx = inbox_points(ctx.inbox(), ps.dim);
    ctx.set_resident(idx.size() * (ps.dim + 1) + 3);
    bool found = false;
    Value best = 0;
    std::uint64_t bu = 0, bv = 0;
    for (std::size_t a = 0; a < idx.size(); ++a)
      for (std::size_t b = a + 1; b < idx.size(); ++b) {
        const Value d = distance_key(ps, idx[a], idx[b], metric);
        if (!found || d < best) {
          found = true;
          best = d;
          bu = idx[a];
          bv = idx[b];
        }
      }
    if (found) ctx.send(0, {kLocalMin, static_cast<Word>(best), bu, bv});
  });
  ClosestPair res;
  cluster.round([&](Cluster::Context& ctx) {
    ctx.set_resident(ctx.id() == 0 ? 4 * ctx.inbox().size() : 0);
    if (ctx.id() != 0) return;
    bool found = false;
    for (const auto& msg : ctx.inbox()) {
      const auto& p = msg.payload;
      const auto cand = std::make_tuple(static_cast<Value>(p[1]), p[2], p[3]);
      if (!found || cand < std::make_tuple(res.key, res.u, res.v)) {
        found = true;
        std::tie(res.key, res.u, res.v) = cand;
      }
    }
  });
  res.distance = key_length(res.key, metric);
  res.rounds = cluster.rounds() - start;
  return res;
}

// ---------------------------------------------------------------------------

LocalMstFilter::LocalMstFilter(std::uint64_t capacity) { adj_.reserve(capacity); }

std::uint64_t LocalMstFilter::local(std::uint64_t v) {
  auto [it, fresh] = ids_.try_emplace(v, adj_.size());
  if (fresh) adj_.emplace_back();
  return it->second;
}

void LocalMstFilter::unlink(const Edge& e) {
  for (auto x : {local(e.u), local(e.v)}) {
    auto& l = adj_[x];
    l.erase(std::find_if(l.begin(), l.end(), [&](const Edge& f) { return f.id == e.id; }));
  }
}

std::optional<Edge> LocalMstFilter::insert(const Edge& e) {
  const auto a = local(e.u), b = local(e.v);
  if (a == b) return e;
  // Path a -> b in the forest, if any.
  std::vector<std::int64_t> via(adj_.size(), -1);
  std::vector<Edge> via_edge(adj_.size());
  std::vector<std::uint64_t> stack{a};
  via[a] = static_cast<std::int64_t>(a);
  while (!stack.empty() && via[b] < 0) {
    const auto x = stack.back();
    stack.pop_back();
    for (const auto& f : adj_[x]) {
      const auto y = ids_.at(f.u) == x ? ids_.at(f.v) : ids_.at(f.u);
      if (via[y] >= 0) continue;
      via[y] = static_cast<std::int64_t>(x);
      via_edge[y] = f;
      stack.push_back(y);
    }
  }
  if (via[b] < 0) {
    adj_[a].push_back(e);
    adj_[b].push_back(e);
    return std::nullopt;
  }
  Edge worst = e;
  for (auto y = b; y != a; y = static_cast<std::uint64_t>(via[y]))
    if (edge_less(worst, via_edge[y])) worst = via_edge[y];
  if (worst.id == e.id) return e;
  unlink(worst);
  adj_[a].push_back(e);
  adj_[b].push_back(e);
  return worst;
}

std::vector<Edge> LocalMstFilter::edges() const {
  std::vector<Edge> out;
  for (std::size_t x = 0; x < adj_.size(); ++x)
    for (const auto& e : adj_[x])
      if (x == ids_.at(e.u)) out.push_back(e);
  std::sort(out.begin(), out.end(), [](const Edge& l, const Edge& r) { return l.id < r.id; });
  return out;
}

std::size_t LocalMstFilter::size() const {
  std::size_t s = 0;
  for (const auto& l : adj_) s += l.size();
  return s / 2;
}

// ---------------------------------------------------------------------------
// Boruvka.

namespace {

struct LiveEdge {
  Edge e;
  std::uint64_t cu = 0, cv = 0;
};

struct NodeState {
  std::uint64_t p = 0;
  std::vector<std::uint64_t> incident;  // edge ids
};

struct BoruvkaState {
  std::vector<std::map<std::uint64_t, LiveEdge>> edges;
  std::vector<std::map<std::uint64_t, NodeState>> nodes;
  std::vector<std::vector<Edge>> chosen;
};

MstResult boruvka(std::uint64_t n, Cluster& cluster, const HashFn& hv, const HashFn& he,
                  BoruvkaState& st, std::uint64_t start) {
  const auto m = cluster.machines();
  const int lg = std::max(1, ceil_log2(std::max<std::uint64_t>(n, 2)));
  for (MachineId id = 0; id < m; ++id) st.nodes[id].clear();
  for (std::uint64_t v = 0; v < n; ++v) st.nodes[hv.machine(v)][v] = NodeState{v, {}};
  std::vector<std::uint8_t> flag(m, 0);
  auto resident = [&](MachineId id) {
    std::uint64_t w = 6 * st.edges[id].size() + 4 * st.chosen[id].size() + 2 * hv.k() + 8;
    for (const auto& [v, s] : st.nodes[id]) w += 2 + s.incident.size();
    return w;
  };
  auto any_bit = [&](const Inbox& in) {
    bool any = false;
    for (const auto& msg : in) {
      const auto& p = msg.payload;
      for (std::size_t i = 0; i < p.size();) {
        if (p[i] == kBit) {
          any |= p[i + 1] != 0;
          i += 2;
        } else {
          break;  // bits lead each batch
        }
      }
    }
    return any;
  };
  MstResult res;
  bool first = true;
  while (true) {
    // Candidate round: refresh labels, drop internal edges, propose.
    cluster.round([&](Cluster::Context& ctx) {
      const auto id = ctx.id();
      auto& mine = st.edges[id];
      for (const auto& msg : ctx.inbox()) {
        const auto& p = msg.payload;
        for (std::size_t i = 0; i < p.size();) {
          if (p[i] == kEdgeRec) {
            Edge e{p[i + 1], p[i + 2], static_cast<Value>(p[i + 3]), p[i + 4]};
            mine.try_emplace(e.id, LiveEdge{e, e.u, e.v});
            i += 5;
          } else if (p[i] == kLabel) {
            auto it = mine.find(p[i + 1]);
            if (it != mine.end()) {
              if (it->second.e.u == p[i + 2]) it->second.cu = p[i + 3];
              if (it->second.e.v == p[i + 2]) it->second.cv = p[i + 3];
            }
            i += 4;
          } else if (p[i] == kBit) {
            i += 2;
          } else {
            i += 3;  // stale query
          }
        }
      }
      Outbox out(m);
      for (auto it = mine.begin(); it != mine.end();) {
        const auto& le = it->second;
        if (le.cu == le.cv) {
          it = mine.erase(it);
          continue;
        }
        for (int side = 0; side < 2; ++side) {
          const auto c = side == 0 ? le.cu : le.cv;
          const auto o = side == 0 ? le.cv : le.cu;
          auto& b = out.to(hv.machine(c));
          b.insert(b.end(), {kCand, c, o, static_cast<Word>(le.e.weight), le.e.id, le.e.u, le.e.v,
                             side == 0 ? le.e.u : le.e.v});
        }
        ++it;
      }
      ctx.set_resident(resident(id));
      out.flush(ctx);
    });
    // Choose round: every leader takes its lightest outgoing edge.
    cluster.round([&](Cluster::Context& ctx) {
      const auto id = ctx.id();
      auto& nodes = st.nodes[id];
      std::map<std::uint64_t, std::pair<Edge, std::uint64_t>> best;  // leader -> (edge, other leader)
      for (const auto& msg : ctx.inbox()) {
        const auto& p = msg.payload;
        for (std::size_t i = 0; i < p.size(); i += 8) {
          const auto c = p[i + 1];
          Edge e{p[i + 5], p[i + 6], static_cast<Value>(p[i + 3]), p[i + 4]};
          // Leaders are still single vertices, so this is where incidence is learnt.
          if (first) nodes.at(p[i + 7]).incident.push_back(e.id);
          auto it = best.find(c);
          if (it == best.end() || edge_less(e, it->second.first)) best[c] = {e, p[i + 2]};
        }
      }
      for (const auto& [c, pick] : best) {
        nodes.at(c).p = pick.second;
        st.chosen[id].push_back(pick.first);
      }
      Outbox out(m);
      const Word bit = best.empty() ? 0 : 1;
      for (MachineId to = 0; to < m; ++to) out.to(to).insert(out.to(to).end(), {kBit, bit});
      for (const auto& [v, s] : nodes)
        if (s.p != v) {
          auto& b = out.to(hv.machine(s.p));
          b.insert(b.end(), {kQuery, s.p, v});
        }
      ctx.set_resident(resident(id) + 8 * best.size());
      out.flush(ctx);
    });
    first = false;
    std::uint64_t jumps = 0;
    bool merged = true;
    bool first_reply = true;
    while (true) {
      // Reply round, or push labels once the pointers are stable.
      bool stop = false;
      cluster.round([&](Cluster::Context& ctx) {
        const auto id = ctx.id();
        const bool any = any_bit(ctx.inbox());
        flag[id] = any ? 1 : 0;
        auto& nodes = st.nodes[id];
        Outbox out(m);
        if (!any) {
          if (!first_reply) {
            for (const auto& [v, s] : nodes)
              for (auto eid : s.incident) {
                auto& b = out.to(he.machine(eid));
                b.insert(b.end(), {kLabel, eid, v, s.p});
              }
          }
        } else {
          for (const auto& msg : ctx.inbox()) {
            const auto& p = msg.payload;
            for (std::size_t i = 0; i < p.size();) {
              if (p[i] == kBit) {
                i += 2;
                continue;
              }
              const auto target = p[i + 1], asker = p[i + 2];
              auto& b = out.to(hv.machine(asker));
              b.insert(b.end(), {kReply, asker, nodes.at(target).p});
              i += 3;
            }
          }
        }
        ctx.set_resident(resident(id));
        out.flush(ctx);
      });
      // Every machine saw the same bits.
      stop = flag[0] == 0;
      if (stop) {
        if (first_reply) merged = false;
        break;
      }
      first_reply = false;
      if (++jumps > 2ULL * lg + 4)
        throw Error(ErrorKind::NonTermination, "pointer jumping did not settle");
      // Apply round: jump, report change, query again.
      cluster.round([&](Cluster::Context& ctx) {
        const auto id = ctx.id();
        auto& nodes = st.nodes[id];
        bool changed = false;
        for (const auto& msg : ctx.inbox()) {
          const auto& p = msg.payload;
          for (std::size_t i = 0; i < p.size(); i += 3) {
            auto& s = nodes.at(p[i + 1]);
            const auto v = p[i + 1], r = p[i + 2];
            if (r == v) {
              if (v < s.p) {
                s.p = v;
                changed = true;
              }
            } else if (r != s.p) {
              s.p = r;
              changed = true;
            }
          }
        }
        Outbox out(m);
        for (MachineId to = 0; to < m; ++to) out.to(to).insert(out.to(to).end(), {kBit, Word{changed}});
        for (const auto& [v, s] : nodes)
          if (s.p != v) {
            auto& b = out.to(hv.machine(s.p));
            b.insert(b.end(), {kQuery, s.p, v});
          }
        ctx.set_resident(resident(id));
        out.flush(ctx);
      });
    }
    if (!merged) break;
    ++res.super_rounds;
    if (res.super_rounds > static_cast<std::uint64_t>(lg) + 1)
      throw Error(ErrorKind::NonTermination, "Boruvka did not converge");
  }
  std::set<std::uint64_t> seen;
  for (const auto& loc : st.chosen)
    for (const auto& e : loc)
      if (seen.insert(e.id).second) res.edges.push_back(e);
  std::sort(res.edges.begin(), res.edges.end(), [](const Edge& l, const Edge& r) { return l.id < r.id; });
  for (const auto& e : res.edges) res.total_key = sat_add(res.total_key, e.weight);
  res.length = static_cast<double>(res.total_key);
  res.rounds = cluster.rounds() - start;
  return res;
}

BoruvkaState empty_state(std::uint32_t m) {
  BoruvkaState st;
  st.edges.assign(m, {});
  st.nodes.assign(m, {});
  st.chosen.assign(m, {});
  return st;
}

}  // namespace

MstResult sparse_mst(const Graph& g, Cluster& cluster, std::uint64_t seed) {
  const auto m = cluster.machines();
  const auto start = cluster.rounds();
  const HashFn hv = sample_hash(seed ^ 0x7665727473ULL, default_hash_order(m), std::max<std::uint64_t>(g.n, 1), m);
  const HashFn he = sample_hash(seed ^ 0x65646765ULL, default_hash_order(m),
                                std::max<std::uint64_t>(g.edges.size(), 1), m);
  auto st = empty_state(m);
  for (const auto& e : g.edges) {
    if (e.u >= g.n || e.v >= g.n) throw Error(ErrorKind::InvalidArgument, "edge endpoint out of range");
    st.edges[he.machine(e.id)].emplace(e.id, LiveEdge{e, e.u, e.v});
  }
  return boruvka(g.n, cluster, hv, he, st, start);
}

MstResult metric_mst(const PointSet& ps, Metric metric, Cluster& cluster, std::uint64_t seed) {
  const auto m = cluster.machines();
  const auto start = cluster.rounds();
  const std::uint64_t n = ps.size();
  const auto k = pair_groups(m);
  const HashFn hv = sample_hash(seed ^ 0x7665727473ULL, default_hash_order(m), std::max<std::uint64_t>(n, 1), m);
  const HashFn he = sample_hash(seed ^ 0x65646765ULL, default_hash_order(m),
                                std::max<std::uint64_t>(n * n, 1), m);
  scatter_points(ps, cluster, seed, k);
  std::vector<std::uint64_t> survivors(m, 0);
  cluster.round([&](Cluster::Context& ctx) {
    const auto idx = inbox_points(ctx.inbox(), ps.dim);
    LocalMstFilter filter(idx.size());
    for (std::size_t a = 0; a < idx.size(); ++a)
      for (std::size_t b = a + 1; b < idx.size(); ++b)
        filter.insert({idx[a], idx[b], distance_key(ps, idx[a], idx[b], metric), idx[a] * n + idx[b]});
    const auto kept = filter.edges();
    survivors[ctx.id()] = kept.size();
    ctx.set_resident(idx.size() * (ps.dim + 1) + 5 * kept.size());
    Outbox out(m);
    for (const auto& e : kept) {
      auto& b = out.to(he.machine(e.id));
      b.insert(b.end(), {kEdgeRec, e.u, e.v, static_cast<Word>(e.weight), e.id});
    }
    out.flush(ctx);
  });
  auto st = empty_state(m);
  auto res = boruvka(n, cluster, hv, he, st, start);
  for (auto s : survivors) res.filtered_edges += s;
  res.length = 0;
  for (const auto& e : res.edges) res.length += key_length(e.weight, metric);
  return res;
}

}  // namespace mpcdp
