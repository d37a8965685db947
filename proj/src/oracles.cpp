#include "mpcdp/oracles.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <numeric>

#include "mpcdp/linear_problems.hpp"

namespace mpcdp {

namespace {

// Compact view of T: positions 0..n-1 in pre-order, parent position, and
// scaled weight of the edge to the parent.
struct Flat {
  std::size_t n = 0;
  std::vector<std::int64_t> parent;  // -1 at the root
  std::vector<Value> w;
  std::vector<std::vector<std::uint32_t>> kids;
};

Flat flatten(const Tree& t) {
  Flat f;
  f.n = t.size();
  f.parent.assign(f.n, -1);
  f.w.assign(f.n, 0);
  f.kids.assign(f.n, {});
  const auto iw = integer_weights(t);
  const auto& order = t.preorder();
  std::unordered_map<std::uint64_t, std::uint32_t> pos;
  for (std::uint32_t i = 0; i < order.size(); ++i) pos[order[i]] = i;
  for (std::uint32_t i = 0; i < order.size(); ++i) {
    const auto& v = t.at(order[i]);
    if (v.parent == kRoot) continue;
    f.parent[i] = pos.at(v.parent);
    f.w[i] = iw.of(v.index);
    f.kids[static_cast<std::size_t>(f.parent[i])].push_back(i);
  }
  return f;
}

void need_nonempty(const Tree& t) {
  if (t.size() == 0) throw Error(ErrorKind::InvalidArgument, "empty tree");
}

// All-pairs distances along the tree.
std::vector<std::vector<Value>> distances(const Flat& f) {
  std::vector<std::vector<std::pair<std::uint32_t, Value>>> adj(f.n);
  for (std::uint32_t v = 0; v < f.n; ++v)
    if (f.parent[v] >= 0) {
      const auto p = static_cast<std::uint32_t>(f.parent[v]);
      adj[v].emplace_back(p, f.w[v]);
      adj[p].emplace_back(v, f.w[v]);
    }
  std::vector<std::vector<Value>> d(f.n, std::vector<Value>(f.n, kPosInf));
  for (std::uint32_t s = 0; s < f.n; ++s) {
    std::vector<std::uint32_t> stack{s};
    d[s][s] = 0;
    while (!stack.empty()) {
      const auto v = stack.back();
      stack.pop_back();
      for (auto [u, w] : adj[v])
        if (d[s][u] == kPosInf) {
          d[s][u] = d[s][v] + w;
          stack.push_back(u);
        }
    }
  }
  return d;
}

Value cluster_cost(const std::vector<std::vector<Value>>& d, const std::vector<std::uint32_t>& centers,
                   bool center) {
  Value total = 0;
  for (std::size_t v = 0; v < d.size(); ++v) {
    Value best = kPosInf;
    for (auto c : centers) best = std::min(best, d[c][v]);
    total = center ? std::max(total, best) : total + best;
  }
  return total;
}

// Every size-r subset of 0..n-1 in lexicographic order.
void for_each_subset(std::size_t n, std::size_t r, const std::function<void(const std::vector<std::uint32_t>&)>& fn) {
  std::vector<std::uint32_t> pick(r);
  std::iota(pick.begin(), pick.end(), 0u);
  if (r > n) return;
  while (true) {
    fn(pick);
    std::size_t i = r;
    while (i > 0 && pick[i - 1] == n - r + i - 1) --i;
    if (i == 0) return;
    ++pick[i - 1];
    for (std::size_t j = i; j < r; ++j) pick[j] = pick[j - 1] + 1;
  }
}

Value enumerate_kcluster(const Tree& t, std::uint64_t k, bool center) {
  need_nonempty(t);
  if (k == 0) throw Error(ErrorKind::InvalidArgument, "k must be positive");
  const auto f = flatten(t);
  const auto d = distances(f);
  Value best = kPosInf;
  // More centers never hurt, so exactly min(k, n) suffices.
  for_each_subset(f.n, std::min<std::uint64_t>(k, f.n),
                  [&](const auto& s) { best = std::min(best, cluster_cost(d, s, center)); });
  return best;
}

void check_k(const Tree& t, std::uint64_t k) {
  if (k == 0) throw Error(ErrorKind::InvalidArgument, "k must be positive");
  if (k > t.size())
    throw Error(ErrorKind::InfeasibleK, "k=" + std::to_string(k) + " exceeds n=" + std::to_string(t.size()));
}

}  // namespace

Value oracle_matching(const Tree& t) {
  need_nonempty(t);
  const auto f = flatten(t);
  // free[v]: v not matched below; used[v]: v matched to a child.
  std::vector<Value> free_(f.n, 0), used(f.n, kNegInf);
  for (std::size_t i = f.n; i-- > 0;) {
    Value sum = 0, gain = kNegInf;
    for (auto c : f.kids[i]) {
      const Value best = std::max(free_[c], used[c]);
      sum += best;
      gain = std::max(gain, f.w[c] + free_[c] - best);
    }
    free_[i] = sum;
    used[i] = gain == kNegInf ? kNegInf : sum + gain;
  }
  return std::max(free_[0], used[0]);
}

Value oracle_mis(const Tree& t) {
  need_nonempty(t);
  const auto f = flatten(t);
  std::vector<Value> in(f.n, 1), out(f.n, 0);
  for (std::size_t i = f.n; i-- > 0;)
    for (auto c : f.kids[i]) {
      in[i] += out[c];
      out[i] += std::max(in[c], out[c]);
    }
  return std::max(in[0], out[0]);
}

Value oracle_vc(const Tree& t) {
  need_nonempty(t);
  const auto f = flatten(t);
  std::vector<Value> in(f.n, 1), out(f.n, 0);
  for (std::size_t i = f.n; i-- > 0;)
    for (auto c : f.kids[i]) {
      in[i] += std::min(in[c], out[c]);
      out[i] += in[c];
    }
  return std::min(in[0], out[0]);
}

Value oracle_longest_path(const Tree& t) {
  need_nonempty(t);
  const auto f = flatten(t);
  std::vector<Value> down(f.n, 0), best(f.n, 0);
  for (std::size_t i = f.n; i-- > 0;) {
    Value a1 = 0, a2 = 0;
    for (auto c : f.kids[i]) {
      best[i] = std::max(best[i], best[c]);
      const Value x = f.w[c] + down[c];
      if (x > a1) {
        a2 = a1;
        a1 = x;
      } else if (x > a2) {
        a2 = x;
      }
    }
    down[i] = a1;
    best[i] = std::max(best[i], a1 + a2);
  }
  return best[0];
}

Value oracle_dominating_set(const Tree& t) {
  need_nonempty(t);
  const auto f = flatten(t);
  // in: v chosen; dom: v dominated by a child; need: v left to its parent.
  std::vector<Value> in(f.n), dom(f.n), need(f.n);
  for (std::size_t i = f.n; i-- > 0;) {
    Value sin = 1, sdom = 0, sneed = 0, forced = kPosInf;
    for (auto c : f.kids[i]) {
      sin = sat_add(sin, std::min({in[c], dom[c], need[c]}));
      const Value m = std::min(in[c], dom[c]);
      sdom = sat_add(sdom, m);
      forced = std::min(forced, in[c] - m);
      sneed = sat_add(sneed, dom[c]);
    }
    in[i] = sin;
    dom[i] = f.kids[i].empty() ? kPosInf : sat_add(sdom, forced);
    need[i] = sneed;
  }
  return std::min(in[0], dom[0]);
}

Value oracle_bisection(const Tree& t) {
  need_nonempty(t);
  const auto f = flatten(t);
  // dp[v][c][j]: subtree of v, v coloured c, j vertices coloured 1.
  std::vector<std::array<std::vector<Value>, 2>> dp(f.n);
  for (std::size_t i = f.n; i-- > 0;) {
    auto& cur = dp[i];
    cur[0] = {0, kPosInf};
    cur[1] = {kPosInf, 0};
    for (auto c : f.kids[i]) {
      const auto& ch = dp[c];
      std::array<std::vector<Value>, 2> next;
      for (int col = 0; col < 2; ++col) {
        next[col].assign(cur[col].size() + ch[0].size() - 1, kPosInf);
        for (std::size_t a = 0; a < cur[col].size(); ++a) {
          if (cur[col][a] == kPosInf) continue;
          for (int cc = 0; cc < 2; ++cc)
            for (std::size_t b = 0; b < ch[cc].size(); ++b) {
              if (ch[cc][b] == kPosInf) continue;
              const Value v = cur[col][a] + ch[cc][b] + (col != cc ? f.w[c] : 0);
              next[col][a + b] = std::min(next[col][a + b], v);
            }
        }
      }
      cur = std::move(next);
      dp[c] = {};
    }
  }
  const std::size_t target = f.n / 2;
  return std::min(dp[0][0][target], dp[0][1][target]);
}

Value oracle_kspanning(const Tree& t, std::uint64_t k) {
  need_nonempty(t);
  check_k(t, k);
  const auto f = flatten(t);
  // dp[v][j]: heaviest connected set of j vertices topped at v.
  std::vector<std::vector<Value>> dp(f.n);
  Value best = kNegInf;
  for (std::size_t i = f.n; i-- > 0;) {
    auto& cur = dp[i];
    cur = {kNegInf, 0};
    for (auto c : f.kids[i]) {
      const auto& ch = dp[c];
      const std::size_t len = std::min<std::size_t>(cur.size() + ch.size() - 1, k + 1);
      std::vector<Value> next(cur.begin(), cur.begin() + std::min(cur.size(), len));
      next.resize(len, kNegInf);
      for (std::size_t a = 1; a < cur.size(); ++a) {
        if (cur[a] == kNegInf) continue;
        for (std::size_t b = 1; b < ch.size() && a + b < len; ++b)
          if (ch[b] != kNegInf) next[a + b] = std::max(next[a + b], cur[a] + ch[b] + f.w[c]);
      }
      cur = std::move(next);
    }
    if (cur.size() > k) best = std::max(best, cur[k]);
  }
  return best;
}

Value oracle_kmedian(const Tree& t, std::uint64_t k) {
  if (t.size() <= 12) return enumerate_kcluster(t, k, false);
  return solve_kmedian(t, std::min<std::uint64_t>(k, t.size()));
}

Value oracle_kcenter(const Tree& t, std::uint64_t k) {
  if (t.size() <= 12) return enumerate_kcluster(t, k, true);
  return solve_kcenter(t, std::min<std::uint64_t>(k, t.size()));
}

Value brute_force(const std::string& problem, const Tree& t, std::uint64_t k) {
  need_nonempty(t);
  if (t.size() > kBruteForceLimit)
    throw Error(ErrorKind::TooLarge, "brute force limited to " + std::to_string(kBruteForceLimit) + " vertices");
  const auto f = flatten(t);
  const std::size_t n = f.n;
  const std::uint32_t full = (1u << n) - 1;
  auto in_mask = [](std::uint32_t mask, std::size_t v) { return (mask >> v) & 1u; };

  if (problem == "matching") {
    // Edges are named by their lower endpoint.
    std::vector<std::uint32_t> edges;
    for (std::uint32_t v = 1; v < n; ++v) edges.push_back(v);
    Value best = 0;
    for (std::uint32_t s = 0; s < (1u << edges.size()); ++s) {
      std::uint32_t used = 0;
      Value w = 0;
      bool ok = true;
      for (std::size_t j = 0; j < edges.size() && ok; ++j) {
        if (!in_mask(s, j)) continue;
        const auto v = edges[j];
        const auto p = static_cast<std::uint32_t>(f.parent[v]);
        const std::uint32_t bits = (1u << v) | (1u << p);
        ok = (used & bits) == 0;
        used |= bits;
        w += f.w[v];
      }
      if (ok) best = std::max(best, w);
    }
    return best;
  }
  if (problem == "longest-path") {
    const auto d = distances(f);
    Value best = 0;
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b) best = std::max(best, d[a][b]);
    return best;
  }
  if (problem == "kmedian" || problem == "kcenter") return enumerate_kcluster(t, k, problem == "kcenter");
  if (problem == "kst") check_k(t, k);

  Value best = (problem == "mis" || problem == "kst") ? kNegInf : kPosInf;
  for (std::uint32_t s = 0; s <= full; ++s) {
    const auto size = static_cast<std::size_t>(__builtin_popcount(s));
    if (problem == "mis") {
      bool ok = true;
      for (std::size_t v = 1; v < n && ok; ++v)
        ok = !(in_mask(s, v) && in_mask(s, static_cast<std::size_t>(f.parent[v])));
      if (ok) best = std::max<Value>(best, size);
    } else if (problem == "vc") {
      bool ok = true;
      for (std::size_t v = 1; v < n && ok; ++v)
        ok = in_mask(s, v) || in_mask(s, static_cast<std::size_t>(f.parent[v]));
      if (ok) best = std::min<Value>(best, size);
    } else if (problem == "dominating-set") {
      std::uint32_t covered = s;
      for (std::size_t v = 1; v < n; ++v) {
        const auto p = static_cast<std::size_t>(f.parent[v]);
        if (in_mask(s, v)) covered |= 1u << p;
        if (in_mask(s, p)) covered |= 1u << v;
      }
      if (covered == full) best = std::min<Value>(best, size);
    } else if (problem == "bisection") {
      if (size != n / 2) continue;
      Value cut = 0;
      for (std::size_t v = 1; v < n; ++v)
        if (in_mask(s, v) != in_mask(s, static_cast<std::size_t>(f.parent[v]))) cut += f.w[v];
      best = std::min(best, cut);
    } else if (problem == "kst") {
      if (size != k) continue;
      // Connected iff exactly one chosen vertex has an unchosen (or no) parent.
      std::size_t tops = 0;
      Value w = 0;
      for (std::size_t v = 0; v < n; ++v) {
        if (!in_mask(s, v)) continue;
        if (f.parent[v] < 0 || !in_mask(s, static_cast<std::size_t>(f.parent[v]))) ++tops;
        else w += f.w[v];
      }
      if (tops == 1) best = std::max(best, w);
    } else {
      throw Error(ErrorKind::InvalidArgument, "no brute force for '" + problem + "'");
    }
  }
  return best;
}

const std::vector<std::string>& tree_problem_names() {
  static const std::vector<std::string> names{"matching", "mis",       "vc",  "longest-path", "dominating-set",
                                              "bisection", "kst",      "kmedian", "kcenter"};
  return names;
}

Value oracle_tree(const std::string& problem, const Tree& t, std::uint64_t k) {
  if (problem == "matching") return oracle_matching(t);
  if (problem == "mis") return oracle_mis(t);
  if (problem == "vc") return oracle_vc(t);
  if (problem == "longest-path") return oracle_longest_path(t);
  if (problem == "dominating-set") return oracle_dominating_set(t);
  if (problem == "bisection") return oracle_bisection(t);
  if (problem == "kst") return oracle_kspanning(t, k);
  if (problem == "kmedian") return oracle_kmedian(t, k);
  if (problem == "kcenter") return oracle_kcenter(t, k);
  throw Error(ErrorKind::InvalidArgument, "unknown problem '" + problem + "'");
}

std::string fnv_digest(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

OracleResult oracle_solve(const std::string& problem, const Tree& t, std::uint64_t k) {
  OracleResult r;
  r.problem = problem;
  r.digest = fnv_digest(emit_tree(t));
  const auto t0 = std::chrono::steady_clock::now();
  r.value = oracle_tree(problem, t, k);
  r.elapsed_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

namespace {

std::vector<Edge> kruskal(std::uint64_t n, std::vector<Edge> edges) {
  std::sort(edges.begin(), edges.end(), edge_less);
  std::vector<std::uint64_t> uf(n);
  std::iota(uf.begin(), uf.end(), 0);
  auto find = [&](std::uint64_t x) {
    while (uf[x] != x) x = uf[x] = uf[uf[x]];
    return x;
  };
  std::vector<Edge> out;
  for (const auto& e : edges) {
    const auto a = find(e.u), b = find(e.v);
    if (a == b) continue;
    uf[a] = b;
    out.push_back(e);
  }
  std::sort(out.begin(), out.end(), [](const Edge& a, const Edge& b) { return a.id < b.id; });
  return out;
}

}  // namespace

std::vector<Edge> oracle_mst(const Graph& g) { return kruskal(g.n, g.edges); }

std::vector<Edge> oracle_metric_mst(const PointSet& ps, Metric metric) {
  const std::uint64_t n = ps.size();
  std::vector<Edge> all;
  all.reserve(n * (n - 1) / 2);
  for (std::uint64_t u = 0; u < n; ++u)
    for (std::uint64_t v = u + 1; v < n; ++v) all.push_back({u, v, distance_key(ps, u, v, metric), u * n + v});
  return kruskal(n, std::move(all));
}

Value total_weight(const std::vector<Edge>& edges) {
  Value s = 0;
  for (const auto& e : edges) s = sat_add(s, e.weight);
  return s;
}

PairKey oracle_closest_pair(const PointSet& ps, Metric metric) {
  if (ps.size() < 2) throw Error(ErrorKind::InvalidArgument, "closest pair needs two points");
  PairKey best{0, 1, distance_key(ps, 0, 1, metric)};
  for (std::uint64_t u = 0; u < ps.size(); ++u)
    for (std::uint64_t v = u + 1; v < ps.size(); ++v) {
      const Value d = distance_key(ps, u, v, metric);
      if (d < best.key) best = {u, v, d};
    }
  return best;
}

}  // namespace mpcdp
